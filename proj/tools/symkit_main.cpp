#include <string>
#include <vector>

#include "symkit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return symkit::run_cli(args);
}
