#include <vector>

#include "nwsd/cli.hpp"

int main(int argc, char** argv) {
  return nwsd::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
