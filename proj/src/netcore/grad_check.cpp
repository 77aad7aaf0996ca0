#include "mentor/netcore/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "mentor/error.hpp"

namespace mentor::netcore {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult grad_check(const std::function<double()>& loss, std::span<RealArray* const> params,
                           std::span<const RealArray> analytic, double h) {
  if (params.size() != analytic.size()) {
    throw DimensionError("grad_check: parameter and gradient counts differ");
  }
  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    RealArray& p = *params[k];
    if (!p.same_shape(analytic[k])) {
      throw DimensionError("grad_check: gradient " + shape_string(analytic[k].shape()) +
                           " vs parameter " + shape_string(p.shape()));
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + h;
      const double up = loss();
      p[i] = saved - h;
      const double down = loss();
      p[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("grad_check: non-finite loss while perturbing parameter " +
                           std::to_string(k));
      }
      const double numeric = (up - down) / (2.0 * h);
      if (!std::isfinite(analytic[k][i])) {
        throw NumericError("grad_check: non-finite analytic gradient");
      }
      worst = std::max(worst, relative_error(analytic[k][i], numeric));
    }
    result.per_param.push_back(worst);
    result.max_error = std::max(result.max_error, worst);
  }
  return result;
}

}  // namespace mentor::netcore
