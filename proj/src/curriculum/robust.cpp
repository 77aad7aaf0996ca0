#include "mentor/curriculum/robust.hpp"

#include <algorithm>
#include <cmath>

#include "mentor/error.hpp"

namespace mentor::curriculum {

void RobustPenaltySpec::validate() const {
  if (!(lambda > 0.0) || !(epsilon > 0.0) || !(delta > 0.0)) {
    throw ParameterError("robust penalty scales must be strictly positive");
  }
}

std::string_view robust_kind_name(RobustKind kind) {
  switch (kind) {
    case RobustKind::huber: return "huber";
    case RobustKind::log_sum: return "log-sum";
    case RobustKind::lorentzian: return "lorentzian";
    case RobustKind::mcp: return "mcp";
  }
  return "?";
}

double robust_penalty_weight(const RobustPenaltySpec& spec, double loss) {
  spec.validate();
  if (!(loss >= 0.0)) throw InputError("robust_penalty_weight: loss must be non-negative");
  switch (spec.kind) {
    case RobustKind::huber:
      return loss <= spec.lambda * spec.lambda ? 0.5 : spec.lambda / (2.0 * std::sqrt(loss));
    case RobustKind::log_sum:
      return std::min(1.0, spec.lambda / (loss + spec.epsilon));
    case RobustKind::lorentzian:
      return std::min(1.0, 2.0 * loss / (2.0 * spec.delta * spec.delta + loss * loss));
    case RobustKind::mcp:
      return std::max(0.0, 1.0 - loss / spec.lambda);
  }
  return 0.0;
}

double robust_penalty_value(const RobustPenaltySpec& spec, double loss) {
  spec.validate();
  if (!(loss >= 0.0)) throw InputError("robust_penalty_value: loss must be non-negative");
  switch (spec.kind) {
    case RobustKind::huber:
      return loss <= spec.lambda * spec.lambda ? 0.5 * loss
                                               : spec.lambda * (std::sqrt(loss) - 0.5 * spec.lambda);
    case RobustKind::log_sum:
      return spec.lambda * std::log1p(loss / spec.epsilon);
    case RobustKind::lorentzian: {
      const double r = loss / spec.delta;
      return std::log1p(0.5 * r * r);
    }
    case RobustKind::mcp:
      return loss < spec.lambda ? loss - loss * loss / (2.0 * spec.lambda) : 0.5 * spec.lambda;
  }
  return 0.0;
}

}  // namespace mentor::curriculum
