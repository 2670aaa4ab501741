#include <string>
#include <vector>

#include "spatialnav/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return spatialnav::run_cli(args);
}
