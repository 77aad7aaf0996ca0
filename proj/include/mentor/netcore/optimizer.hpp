#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mentor/netcore/array.hpp"

namespace mentor::netcore {

enum class OptimizerKind { momentum_sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::momentum_sgd;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptimizerConfig sgd(double momentum = 0.9) {
    return {OptimizerKind::momentum_sgd, momentum};
  }
  static OptimizerConfig adam() { return {OptimizerKind::adam}; }
};

/// Per-parameter slots: momentum buffers (SGD) or first/second moments (Adam).
class OptimizerState {
 public:
  OptimizerState() = default;
  OptimizerState(OptimizerConfig config, std::span<const RealArray* const> params);

  /// Momentum SGD: v <- mu*v + g, p <- p - lr*v.
  /// Adam: bias-corrected moments, p <- p - lr * m_hat / (sqrt(v_hat) + eps).
  void step(std::span<RealArray* const> params, std::span<const RealArray> grads, double lr);

  [[nodiscard]] const OptimizerConfig& config() const { return config_; }
  [[nodiscard]] std::uint64_t steps() const { return steps_; }
  [[nodiscard]] const std::vector<RealArray>& first() const { return first_; }
  [[nodiscard]] const std::vector<RealArray>& second() const { return second_; }

 private:
  OptimizerConfig config_;
  std::vector<RealArray> first_;
  std::vector<RealArray> second_;
  std::uint64_t steps_ = 0;
};

}  // namespace mentor::netcore
