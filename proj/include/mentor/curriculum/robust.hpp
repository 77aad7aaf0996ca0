#pragma once

#include <string_view>

namespace mentor::curriculum {

enum class RobustKind { huber, log_sum, lorentzian, mcp };

struct RobustPenaltySpec {
  RobustKind kind = RobustKind::huber;
  double lambda = 1.0;   // huber scale, log-sum numerator, mcp width
  double epsilon = 1.0;  // log-sum offset
  double delta = 1.0;    // lorentzian scale

  void validate() const;
};

std::string_view robust_kind_name(RobustKind kind);

/// Weight function whose integral is the penalty. Log-sum and Lorentzian
/// weights are clamped to 1 where the raw formula exceeds it.
double robust_penalty_weight(const RobustPenaltySpec& spec, double loss);

/// Closed-form penalty:
///   huber       l/2 if l <= lambda^2 else lambda (sqrt(l) - lambda/2)
///   log-sum     lambda ln(1 + l/epsilon)
///   lorentzian  ln(1 + (l/delta)^2 / 2)
///   mcp         l - l^2/(2 lambda) if l < lambda else lambda/2
double robust_penalty_value(const RobustPenaltySpec& spec, double loss);

}  // namespace mentor::curriculum
