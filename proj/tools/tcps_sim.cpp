#include <iostream>

#include "tcps/cli/cli.hpp"

int main(int argc, char** argv) {
  return tcps::cli::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
