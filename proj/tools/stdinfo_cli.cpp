#include <iostream>

#include "stdinfo/cli.hpp"

int main(int argc, char** argv) { return stdinfo::cli::run(argc, argv, std::cout, std::cerr); }
