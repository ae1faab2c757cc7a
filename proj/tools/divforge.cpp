#include <string>
#include <vector>

#include "divforge/cli.hpp"

int main(int argc, char** argv) {
  return divforge::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
