#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace mentor::curriculum {

enum class CurriculumKind { self_paced, predefined, focal, hard_negative, linear, temporal_mixture };

std::string_view kind_name(CurriculumKind kind);
/// Accepts the names printed by kind_name plus a few aliases ("spl", "pd", ...).
CurriculumKind parse_kind(std::string_view name);

/// Parameters of every predefined curriculum. Only the fields relevant to
/// `kind` are read.
struct CurriculumParams {
  CurriculumKind kind = CurriculumKind::predefined;
  double lambda1 = 1.0;  // predefined
  double lambda2 = 1.0;  // predefined
  double gamma = 1.0;    // focal
  double lambda = 1.0;   // self-paced, hard-negative, linear, temporal mixture
  int switch_pct = 50;   // temporal mixture

  /// Throws ParameterError if any field is outside its domain.
  void validate() const;
  /// True when the curriculum has a closed-form penalty G usable for explicit training.
  [[nodiscard]] bool has_penalty() const;
};

// Closed-form optimal weights. All return a value in [0, 1] and throw
// InputError on a negative loss.

/// 1 if loss <= lambda else 0.
double spl_weight(double loss, double lambda);
/// Indicator(loss <= lambda1) when lambda2 == 0, else clamp(1 - (loss - lambda1)/lambda2, 0, 1).
double predefined_weight(double loss, double lambda1, double lambda2);
/// (1 - exp(-loss))^gamma
double focal_weight(double loss, double gamma);
/// 1 if loss >= lambda else 0.
double hard_negative_weight(double loss, double lambda);
/// clamp(1 - loss/lambda, 0, 1); lambda must be positive.
double linear_weight(double loss, double lambda);
/// Self-paced below `switch_pct`, hard-negative at or above it.
double temporal_mixture_weight(double loss, double lambda, int epoch_pct, int switch_pct = 50);

/// Dispatches on params.kind.
double target_weight(const CurriculumParams& params, double loss, int epoch_pct);

/// Per-sample penalty of the predefined curriculum: lambda2 v^2 / 2 - (lambda1 + lambda2) v.
double g_penalty(double v, double lambda1, double lambda2);

/// Penalty G(v) and dG/dv for curricula with a known G (self-paced: -lambda v;
/// predefined: g_penalty). Throws ParameterError for the others.
double penalty(const CurriculumParams& params, double v);
double penalty_derivative(const CurriculumParams& params, double v);

/// Per-sample robust loss implied by the predefined curriculum: the integral
/// of predefined_weight from 0 to `loss`, in closed form.
double underlying_objective(double loss, double lambda1, double lambda2);

/// The three pieces of underlying_objective, each evaluable anywhere so
/// continuity at the breakpoints lambda1 and lambda1 + lambda2 can be checked.
enum class ObjectiveBranch { identity, quadratic, plateau };
double underlying_objective_branch(ObjectiveBranch branch, double loss, double lambda1,
                                   double lambda2);

}  // namespace mentor::curriculum
