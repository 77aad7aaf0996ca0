#pragma once

#include <functional>

namespace mentor::curriculum {

/// argmin over v in {0, step, 2 step, ..., 1} of v*loss + G(v); the lowest
/// v wins ties. Throws NumericError if G is non-finite on the grid.
double brute_force_weight(double loss, const std::function<double(double)>& G,
                          double step = 1e-4);

struct QuadratureOptions {
  double abs_tol = 1e-8;
  int max_depth = 30;
  int min_depth = 4;
};

/// Adaptive Simpson integral of f over [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        QuadratureOptions options = {});

/// rho(loss) = integral of the weight function g over [0, loss]. Throws
/// ContractError if g leaves [0, 1] at any evaluated point.
double rho_from_weighting(const std::function<double(double)>& g, double loss,
                          QuadratureOptions options = {});

}  // namespace mentor::curriculum
