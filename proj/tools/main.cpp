#include "cli.hpp"

int main(int argc, char** argv) {
  airmc::cli::tune_allocator();
  return airmc::cli::run_cli(argc, argv);
}
