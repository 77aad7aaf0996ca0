#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace mentor::cli {

struct CaseResult {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;
  [[nodiscard]] bool passed() const { return error <= tolerance; }
};

struct SuiteReport {
  std::string suite;
  std::vector<CaseResult> cases;
  double max_error = 0.0;
  bool pass = true;
  double seconds = 0.0;

  void add(std::string name, double error, double tolerance);
};

/// Closed-form predefined weight against the grid argmin over 1000 random
/// (loss, lambda1, lambda2) draws.
SuiteReport verify_closed_form(std::uint64_t seed);

/// Underlying objective against quadrature, the MCP form and branch continuity.
SuiteReport verify_penalties(std::uint64_t seed);

/// Huber, log-sum and Lorentzian penalties against quadrature of their weights.
SuiteReport verify_robust();

/// Finite-difference checks of every differentiable unit on three shapes each.
SuiteReport verify_gradcheck(std::uint64_t seed);

inline constexpr std::string_view kSuiteNames[] = {"closed-form", "penalties", "robust", "gradcheck"};

/// Runs one suite by name, or all of them for "all". Throws ParameterError
/// for an unknown name.
std::vector<SuiteReport> run_suites(std::string_view selector, std::uint64_t seed);

nlohmann::json to_json(const SuiteReport& report);

}  // namespace mentor::cli
