// One line per acceptance criterion; exits non-zero when any fails.

#include "smartstat/campaign/acceptance.hpp"

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

int main(int argc, char **argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::stoi(argv[i]));
  return smartstat::campaign::report_acceptance(std::cout, ids) ? EXIT_SUCCESS : EXIT_FAILURE;
}
