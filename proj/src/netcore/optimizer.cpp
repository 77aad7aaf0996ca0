#include "mentor/netcore/optimizer.hpp"

#include <cmath>

#include "mentor/error.hpp"

namespace mentor::netcore {

OptimizerState::OptimizerState(OptimizerConfig config, std::span<const RealArray* const> params)
    : config_(config) {
  for (const RealArray* p : params) {
    first_.emplace_back(p->shape());
    if (config_.kind == OptimizerKind::adam) second_.emplace_back(p->shape());
  }
}

void OptimizerState::step(std::span<RealArray* const> params, std::span<const RealArray> grads,
                          double lr) {
  if (params.size() != grads.size() || params.size() != first_.size()) {
    throw DimensionError("optimizer step: " + std::to_string(params.size()) + " params, " +
                         std::to_string(grads.size()) + " grads, " + std::to_string(first_.size()) +
                         " slots");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->same_shape(grads[k]) || !params[k]->same_shape(first_[k])) {
      throw DimensionError("optimizer step: gradient " + shape_string(grads[k].shape()) +
                           " does not match parameter " + shape_string(params[k]->shape()));
    }
  }
  ++steps_;
  if (config_.kind == OptimizerKind::momentum_sgd) {
    const double mu = config_.momentum;
    for (std::size_t k = 0; k < params.size(); ++k) {
      RealArray& p = *params[k];
      RealArray& v = first_[k];
      const RealArray& g = grads[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        v[i] = mu * v[i] + g[i];
        p[i] -= lr * v[i];
      }
    }
    return;
  }
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    RealArray& p = *params[k];
    RealArray& m = first_[k];
    RealArray& v = second_[k];
    const RealArray& g = grads[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

}  // namespace mentor::netcore
