#include <iostream>

#include "judgekit/cli.hpp"

int main(int argc, char** argv) {
  return judgekit::dispatch(argc, argv, std::cout, std::cerr);
}
