#pragma once

#include <cstddef>
#include <span>

#include "stdinfo/field_sim.hpp"

/// Dense inner loops of the approximation algorithm. Each kernel has an
/// OpenMP version and a serial reference; both compute every output element
/// with the same sequential loop, so their results are bitwise equal for
/// any thread count.
namespace stdinfo::kernels {

/// out[l * cols + j] = phi_j(point l) for the first `cols` modes; `points`
/// holds n points of system.dim() coordinates, row-major.
void design_matrix(const SpectralSystem& system, std::span<const double> points,
                   std::size_t cols, std::span<double> out);
void design_matrix_serial(const SpectralSystem& system, std::span<const double> points,
                          std::size_t cols, std::span<double> out);

/// y[l] = sum_{j<cols} a[l * lda + j] x[j] for l < rows.
void matvec(std::span<const double> a, std::size_t rows, std::size_t cols, std::size_t lda,
            std::span<const double> x, std::span<double> y);
void matvec_serial(std::span<const double> a, std::size_t rows, std::size_t cols,
                   std::size_t lda, std::span<const double> x, std::span<double> y);

/// Importance-weighted coefficient estimates from n point values:
///   u_l = (1/m) sum_{j<m} phi[l, j]^2,
///   out[j] = (1/n) sum_l values[l] phi[l, j] / u_l,   j < m.
/// `phi` is n x lda row-major with lda >= m.
void estimate(std::span<const double> phi, std::size_t n, std::size_t lda, std::size_t m,
              std::span<const double> values, std::span<double> out);
void estimate_serial(std::span<const double> phi, std::size_t n, std::size_t lda,
                     std::size_t m, std::span<const double> values, std::span<double> out);

}  // namespace stdinfo::kernels
