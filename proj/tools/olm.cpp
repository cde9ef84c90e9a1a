#include <string>
#include <vector>

#include "olm/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return olm::cli::run(args);
}
