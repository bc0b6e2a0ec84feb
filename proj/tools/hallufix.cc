#include <iostream>

#include "hallufix/pipeline.h"

int main(int argc, char** argv) {
  return hallufix::run_cli(argc, argv, std::cout, std::cerr);
}
