#include <iostream>

#include "str/cli.h"

int main(int argc, char** argv) {
  return str::cli::run(argc, argv, std::cout, std::cerr);
}
