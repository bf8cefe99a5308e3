#include "bigrid/cli.hpp"

#include <exception>
#include <iostream>

int main(int argc, char** argv) {
  const bigrid::ParseOutcome parsed = bigrid::parse_args(argc, argv);
  if (!parsed.options) {
    (parsed.exit_code == 0 ? std::cout : std::cerr) << parsed.message;
    return parsed.exit_code;
  }
  try {
    return bigrid::run_cli(*parsed.options);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
