#include "mentor/curriculum/weights.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mentor/error.hpp"

namespace mentor::curriculum {

namespace {

void require_loss(double loss) {
  if (!(loss >= 0.0)) throw InputError("loss must be non-negative, got " + std::to_string(loss));
}

}  // namespace

std::string_view kind_name(CurriculumKind kind) {
  switch (kind) {
    case CurriculumKind::self_paced: return "self-paced";
    case CurriculumKind::predefined: return "predefined";
    case CurriculumKind::focal: return "focal";
    case CurriculumKind::hard_negative: return "hard-negative";
    case CurriculumKind::linear: return "linear";
    case CurriculumKind::temporal_mixture: return "temporal-mixture";
  }
  return "?";
}

CurriculumKind parse_kind(std::string_view name) {
  if (name == "self-paced" || name == "spl") return CurriculumKind::self_paced;
  if (name == "predefined" || name == "pd") return CurriculumKind::predefined;
  if (name == "focal") return CurriculumKind::focal;
  if (name == "hard-negative" || name == "hnm") return CurriculumKind::hard_negative;
  if (name == "linear") return CurriculumKind::linear;
  if (name == "temporal-mixture" || name == "mixture") return CurriculumKind::temporal_mixture;
  throw ParameterError("unknown curriculum \"" + std::string(name) + "\"");
}

void CurriculumParams::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ParameterError("lambda1 and lambda2 must be >= 0");
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
  if (!(gamma > 0.0)) throw ParameterError("gamma must be > 0");
  if (switch_pct < 0 || switch_pct >= 100) throw ParameterError("switch_pct must be in [0, 100)");
  if (kind == CurriculumKind::linear && !(lambda > 0.0)) {
    throw ParameterError("linear weighting needs lambda > 0");
  }
}

bool CurriculumParams::has_penalty() const {
  return kind == CurriculumKind::self_paced || kind == CurriculumKind::predefined;
}

double spl_weight(double loss, double lambda) {
  require_loss(loss);
  return loss <= lambda ? 1.0 : 0.0;
}

double predefined_weight(double loss, double lambda1, double lambda2) {
  require_loss(loss);
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
    throw InputError("predefined_weight: lambda1 and lambda2 must be >= 0");
  }
  if (lambda2 == 0.0) return loss <= lambda1 ? 1.0 : 0.0;
  return std::clamp(1.0 - (loss - lambda1) / lambda2, 0.0, 1.0);
}

double focal_weight(double loss, double gamma) {
  require_loss(loss);
  if (!(gamma > 0.0)) throw ParameterError("focal_weight: gamma must be > 0");
  return std::pow(-std::expm1(-loss), gamma);
}

double hard_negative_weight(double loss, double lambda) {
  require_loss(loss);
  return loss >= lambda ? 1.0 : 0.0;
}

double linear_weight(double loss, double lambda) {
  require_loss(loss);
  if (!(lambda > 0.0)) throw ParameterError("linear_weight: lambda must be > 0");
  return std::clamp(1.0 - loss / lambda, 0.0, 1.0);
}

double temporal_mixture_weight(double loss, double lambda, int epoch_pct, int switch_pct) {
  return epoch_pct < switch_pct ? spl_weight(loss, lambda) : hard_negative_weight(loss, lambda);
}

double target_weight(const CurriculumParams& params, double loss, int epoch_pct) {
  switch (params.kind) {
    case CurriculumKind::self_paced: return spl_weight(loss, params.lambda);
    case CurriculumKind::predefined: return predefined_weight(loss, params.lambda1, params.lambda2);
    case CurriculumKind::focal: return focal_weight(loss, params.gamma);
    case CurriculumKind::hard_negative: return hard_negative_weight(loss, params.lambda);
    case CurriculumKind::linear: return linear_weight(loss, params.lambda);
    case CurriculumKind::temporal_mixture:
      return temporal_mixture_weight(loss, params.lambda, epoch_pct, params.switch_pct);
  }
  throw ParameterError("unknown curriculum kind");
}

double g_penalty(double v, double lambda1, double lambda2) {
  if (!(v >= 0.0 && v <= 1.0)) throw InputError("g_penalty: v must be in [0, 1]");
  return 0.5 * lambda2 * v * v - (lambda1 + lambda2) * v;
}

double penalty(const CurriculumParams& params, double v) {
  switch (params.kind) {
    case CurriculumKind::self_paced: return -params.lambda * v;
    case CurriculumKind::predefined: return 0.5 * params.lambda2 * v * v - (params.lambda1 + params.lambda2) * v;
    default:
      throw ParameterError("curriculum \"" + std::string(kind_name(params.kind)) +
                           "\" has no closed-form penalty");
  }
}

double penalty_derivative(const CurriculumParams& params, double v) {
  switch (params.kind) {
    case CurriculumKind::self_paced: return -params.lambda;
    case CurriculumKind::predefined: return params.lambda2 * v - (params.lambda1 + params.lambda2);
    default:
      throw ParameterError("curriculum \"" + std::string(kind_name(params.kind)) +
                           "\" has no closed-form penalty");
  }
}

double underlying_objective_branch(ObjectiveBranch branch, double loss, double lambda1,
                                   double lambda2) {
  switch (branch) {
    case ObjectiveBranch::identity: return loss;
    case ObjectiveBranch::plateau: return (lambda2 + 2.0 * lambda1) / 2.0;
    case ObjectiveBranch::quadratic: {
      const double theta = (lambda1 + lambda2) / lambda2;
      return theta * loss - loss * loss / (2.0 * lambda2) - (theta - 1.0) * (theta - 1.0) * lambda2 / 2.0;
    }
  }
  return 0.0;
}

double underlying_objective(double loss, double lambda1, double lambda2) {
  require_loss(loss);
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
    throw InputError("underlying_objective: lambda1 and lambda2 must be >= 0");
  }
  if (lambda2 == 0.0) return std::min(loss, lambda1);
  if (loss <= lambda1) return underlying_objective_branch(ObjectiveBranch::identity, loss, lambda1, lambda2);
  if (loss >= lambda1 + lambda2) {
    return underlying_objective_branch(ObjectiveBranch::plateau, loss, lambda1, lambda2);
  }
  return underlying_objective_branch(ObjectiveBranch::quadratic, loss, lambda1, lambda2);
}

}  // namespace mentor::curriculum
