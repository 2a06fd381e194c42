#include <iostream>
#include <string>
#include <vector>

#include "llmguard/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return llmguard::run_cli(args, std::cout, std::cerr);
}
