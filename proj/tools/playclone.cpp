#include <malloc.h>

#include <iostream>
#include <string>
#include <vector>

#include "playclone/cli.hpp"

int main(int argc, char** argv) {
  // Keep large training buffers out of mmap; repeated map/unmap dominated step time.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  std::vector<std::string> args(argv, argv + argc);
  return playclone::cli::run(args, std::cout, std::cerr);
}
