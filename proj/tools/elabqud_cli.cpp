#include <iostream>

#include "elabqud/cli/cli.hpp"
#include "elabqud/service/server.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return elabqud::cli::run(args, std::cout, std::cerr, elabqud::service::serve);
}
