#pragma once

#include <string>
#include <vector>

namespace polyfp {

struct CriterionResult {
  std::string name;
  double observed = 0.0;
  double threshold = 0.0;
  bool larger_is_better = false;  // pass means observed > threshold
  bool pass = false;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<CriterionResult> criteria;
  bool pass = false;
};

/// Named verification suites:
///   orthogonality - remainder moments against degree-≤2 polynomials
///   tangency      - projection reproduces the configurational action
///   equivalence   - closure ODE vs Euler-Maruyama ensemble z-scores
///   exactness     - closure Gaussian vs grid density, with h-refinement
///   spd           - positive definiteness along strong-flow trajectories
///   residual      - weighted residual equals ε²∫ρ²f for synthetic fields
std::vector<std::string> verify_suite_names();

SuiteReport verify_suite(const std::string& name);

std::string to_json(const SuiteReport& report);

}  // namespace polyfp
