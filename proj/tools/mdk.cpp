#include <vector>

#include "mdk/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mdk::cli_run(std::move(args));
}
