// One PASS/FAIL line per acceptance criterion; exit status is the number of failures.

#include <iostream>

#include "../support/criteria.hpp"

int main(int argc, char** argv) {
  using namespace rstest;
  const std::vector<std::pair<int, std::function<CriterionResult()>>> all = {
      {1, [] { return criterion1(); }}, {2, [] { return criterion2(); }}, {3, [] { return criterion3(); }},
      {4, [] { return criterion4(); }}, {5, [] { return criterion5(); }}, {6, [] { return criterion6(); }},
      {7, [] { return criterion7(); }}, {8, [] { return criterion8(); }}, {9, [] { return criterion9(); }},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& [id, run] : all) {
    if (!only.empty() && !only.count(id)) continue;
    CriterionResult r;
    try {
      r = run();
    } catch (const std::exception& e) {
      r.fail(std::string("exception: ") + e.what());
    }
    std::cout << "criterion " << id << ": " << (r.pass ? "PASS" : "FAIL") << "  " << r.detail << std::endl;
    for (const auto& note : r.log) std::cout << "    note: " << note << "\n";
    if (!r.pass) ++failures;
  }
  return failures;
}
