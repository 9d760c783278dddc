#include "pseopt/cli.hpp"

int main(int argc, char** argv) {
  return pseopt::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
