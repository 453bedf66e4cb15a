#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"
#include "foagp/fit.hpp"

int main(int argc, char** argv) {
  foagp::tune_allocator();
  foagp::set_warning_sink([](const std::string&) {});
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
