#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  using namespace dmera::cli;
  bool help = false;
  RunConfig config;
  try {
    config = parse_args(argc, argv, &help, &std::cout);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }
  if (help) return 0;
  return dispatch(config, std::cout, std::cerr);
}
