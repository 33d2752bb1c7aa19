#include <cstdlib>
#include <iostream>

#include "shopsim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<std::string> tokens;
  if (const char* env = std::getenv("SHOP_TOKENS")) tokens = env;
  return shopsim::cli::main_entry(args, std::cout, std::cerr, tokens);
}
