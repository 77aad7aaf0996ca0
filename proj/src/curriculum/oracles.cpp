#include "mentor/curriculum/oracles.hpp"

#include <cmath>
#include <string>

#include "mentor/error.hpp"

namespace mentor::curriculum {

double brute_force_weight(double loss, const std::function<double(double)>& G, double step) {
  if (!(step > 0.0 && step <= 1.0)) throw ParameterError("brute_force_weight: bad grid step");
  const auto n = static_cast<long>(std::llround(1.0 / step));
  double best_v = 0.0;
  double best = 0.0;
  for (long k = 0; k <= n; ++k) {
    const double v = k == n ? 1.0 : static_cast<double>(k) * step;
    const double obj = v * loss + G(v);
    if (!std::isfinite(obj)) {
      throw NumericError("brute_force_weight: non-finite objective at v=" + std::to_string(v));
    }
    if (k == 0 || obj < best) {
      best = obj;
      best_v = v;
    }
  }
  return best_v;
}

namespace {

struct Simpson {
  const std::function<double(double)>& f;
  const QuadratureOptions& opt;

  double recurse(double a, double b, double fa, double fm, double fb, double whole, double tol,
                 int depth) const {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth >= opt.max_depth || (depth >= opt.min_depth && std::abs(delta) <= 15.0 * tol)) {
      return left + right + delta / 15.0;
    }
    return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  }
};

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        QuadratureOptions options) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const Simpson s{f, options};
  const double r = s.recurse(a, b, fa, fm, fb, whole, options.abs_tol, 0);
  if (!std::isfinite(r)) throw NumericError("adaptive_simpson: non-finite integral");
  return r;
}

double rho_from_weighting(const std::function<double(double)>& g, double loss,
                          QuadratureOptions options) {
  if (!(loss >= 0.0)) throw InputError("rho_from_weighting: loss must be non-negative");
  const auto checked = [&g](double x) {
    const double w = g(x);
    if (!(w >= 0.0 && w <= 1.0)) {
      throw ContractError("weight function returned " + std::to_string(w) + " at loss " +
                          std::to_string(x) + "; weights must lie in [0, 1]");
    }
    return w;
  };
  return adaptive_simpson(checked, 0.0, loss, options);
}

}  // namespace mentor::curriculum
