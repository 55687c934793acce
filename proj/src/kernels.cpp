#include "stdinfo/kernels.hpp"

#include <algorithm>
#include <vector>

#include "stdinfo/errors.hpp"

namespace stdinfo::kernels {

namespace {

struct RowWorkspace {
  std::vector<double> tables;
  std::vector<double> scratch;
};

void design_row(const SpectralSystem& system, const double* t, std::size_t cols, double* out,
                RowWorkspace& ws) {
  const std::size_t d = system.dim();
  const std::size_t width = system.max_rank() + 1;
  ws.tables.resize(d * width);
  for (std::size_t l = 0; l < d; ++l) {
    system.eval_ranks(t[l], std::span<double>(ws.tables.data() + l * width, width), ws.scratch);
  }
  const std::uint32_t* k = system.flat_indices().data();
  const double* tab = ws.tables.data();
  if (d == 1) {
    if (system.contiguous()) {
      std::copy(tab + 1, tab + 1 + cols, out);
      return;
    }
    for (std::size_t j = 0; j < cols; ++j) out[j] = tab[k[j]];
    return;
  }
  for (std::size_t j = 0; j < cols; ++j, k += d) {
    double v = 1.0;
    for (std::size_t l = 0; l < d; ++l) v *= tab[l * width + k[l]];
    out[j] = v;
  }
}

double dot_row(const double* row, const double* x, std::size_t cols) {
  double s = 0.0;
  for (std::size_t j = 0; j < cols; ++j) s += row[j] * x[j];
  return s;
}

double inverse_density(const double* row, std::size_t m) {
  double u = 0.0;
  for (std::size_t j = 0; j < m; ++j) u += row[j] * row[j];
  return static_cast<double>(m) / u;
}

double column_estimate(const double* phi, std::size_t n, std::size_t lda, std::size_t j,
                       const double* w) {
  double s = 0.0;
  for (std::size_t l = 0; l < n; ++l) s += w[l] * phi[l * lda + j];
  return s / static_cast<double>(n);
}

void check_design(const SpectralSystem& system, std::span<const double> points,
                  std::size_t cols, std::span<double> out) {
  const std::size_t d = system.dim();
  if (d == 0 || points.size() % d != 0) throw InvalidArgument("design points have the wrong shape");
  if (cols > system.size()) throw InvalidArgument("design matrix wider than the retained modes");
  if (out.size() < points.size() / d * cols) throw InvalidArgument("design matrix buffer too small");
}

}  // namespace

void design_matrix(const SpectralSystem& system, std::span<const double> points,
                   std::size_t cols, std::span<double> out) {
  check_design(system, points, cols, out);
  const std::size_t d = system.dim();
  const auto n = static_cast<std::ptrdiff_t>(points.size() / d);
#pragma omp parallel
  {
    RowWorkspace ws;
#pragma omp for schedule(static)
    for (std::ptrdiff_t l = 0; l < n; ++l) {
      design_row(system, points.data() + l * d, cols, out.data() + l * cols, ws);
    }
  }
}

void design_matrix_serial(const SpectralSystem& system, std::span<const double> points,
                          std::size_t cols, std::span<double> out) {
  check_design(system, points, cols, out);
  const std::size_t d = system.dim();
  const std::size_t n = points.size() / d;
  RowWorkspace ws;
  for (std::size_t l = 0; l < n; ++l) {
    design_row(system, points.data() + l * d, cols, out.data() + l * cols, ws);
  }
}

void matvec(std::span<const double> a, std::size_t rows, std::size_t cols, std::size_t lda,
            std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t l = 0; l < n; ++l) y[l] = dot_row(a.data() + l * lda, x.data(), cols);
}

void matvec_serial(std::span<const double> a, std::size_t rows, std::size_t cols,
                   std::size_t lda, std::span<const double> x, std::span<double> y) {
  for (std::size_t l = 0; l < rows; ++l) y[l] = dot_row(a.data() + l * lda, x.data(), cols);
}

void estimate(std::span<const double> phi, std::size_t n, std::size_t lda, std::size_t m,
              std::span<const double> values, std::span<double> out) {
  std::vector<double> w(n);
  const auto rows = static_cast<std::ptrdiff_t>(n);
  const auto cols = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (std::ptrdiff_t l = 0; l < rows; ++l) {
      w[l] = values[l] * inverse_density(phi.data() + l * lda, m);
    }
#pragma omp for schedule(static)
    for (std::ptrdiff_t j = 0; j < cols; ++j) {
      out[j] = column_estimate(phi.data(), n, lda, j, w.data());
    }
  }
}

void estimate_serial(std::span<const double> phi, std::size_t n, std::size_t lda,
                     std::size_t m, std::span<const double> values, std::span<double> out) {
  std::vector<double> w(n);
  for (std::size_t l = 0; l < n; ++l) w[l] = values[l] * inverse_density(phi.data() + l * lda, m);
  for (std::size_t j = 0; j < m; ++j) out[j] = column_estimate(phi.data(), n, lda, j, w.data());
}

}  // namespace stdinfo::kernels
