// Runs acceptance criteria 1-7, one PASS/FAIL line per criterion.

#include <iostream>

#include "fpl/acceptance.hpp"

int main(int argc, char** argv) {
  fpl::AcceptanceOptions opt;
  if (argc > 1) opt.work_dir = argv[1];
  bool all = true;
  fpl::run_acceptance(opt, [&](const fpl::CriterionResult& r) {
    std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << ": " << r.title << " (" << r.seconds
              << " s)\n";
    for (const auto& line : r.detail) std::cout << "    " << line << "\n";
    std::cout.flush();
    all = all && r.pass;
  });
  return all ? 0 : 1;
}
