#include <string>
#include <vector>

#include "tablehop/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return tablehop::run_cli(args);
}
