#include <cstdio>
#include <iostream>

#include "cch/validation.hpp"

// End-to-end acceptance runner: every numerical claim the library makes,
// checked against simulation or an independent reference, one line each.
int main() {
  const auto results = cch::run_acceptance_checks(&std::cout);

  std::cout << "\n";
  int passed = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (r.pass) ++passed;
    std::printf("criterion %2zu: %s  %s\n", i + 1, r.pass ? "PASS" : "FAIL",
                r.name.c_str());
  }
  std::printf("%d / %zu criteria passed\n", passed, results.size());
  return cch::all_passed(results) ? 0 : 1;
}
