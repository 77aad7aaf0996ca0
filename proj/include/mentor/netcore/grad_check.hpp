#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mentor/netcore/array.hpp"

namespace mentor::netcore {

struct GradCheckResult {
  std::vector<double> per_param;  // max relative error for each checked array
  double max_error = 0.0;
  [[nodiscard]] bool passed(double tolerance) const { return max_error <= tolerance; }
};

/// Compares `analytic` against central differences of `loss` with step `h`,
/// perturbing each entry of each array in `params` in place (restored after).
/// Relative error per entry is |a - n| / max(|a|, |n|, 1e-8).
/// Throws NumericError if the loss becomes non-finite.
GradCheckResult grad_check(const std::function<double()>& loss, std::span<RealArray* const> params,
                           std::span<const RealArray> analytic, double h = 1e-6);

double relative_error(double analytic, double numeric);

}  // namespace mentor::netcore
