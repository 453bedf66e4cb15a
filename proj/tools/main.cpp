#include <iostream>

#include "commands.hpp"
#include "foagp/fit.hpp"

int main(int argc, char** argv) {
  foagp::tune_allocator();
  return foagp::cli::run(argc, argv, std::cout, std::cerr);
}
