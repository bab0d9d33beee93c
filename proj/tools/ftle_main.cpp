#include <string>
#include <vector>

#include "ftle/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ftle::cli::run(args);
}
