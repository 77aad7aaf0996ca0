#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mentor/netcore/array.hpp"
#include "mentor/rng.hpp"

namespace mentor::netcore {

enum class Activation { identity, tanh, sigmoid };

double sigmoid(double x);
/// Applies `act` elementwise in place.
void activate(Activation act, std::span<double> values);

/// Gradients for one layer: one array per parameter (same order as the
/// layer's parameters) plus the gradient with respect to the layer input.
struct LayerGrads {
  std::vector<RealArray> params;
  RealArray input;
};

/// Forward state kept for dense_backward. `weights` must outlive the cache.
struct DenseCache {
  bool valid = false;
  const RealArray* weights = nullptr;
  RealArray input;
  RealArray output;
  Activation activation = Activation::identity;
};

/// output = act(input * weights + bias); input [b x d_in], weights [d_in x d_out], bias [d_out].
RealArray dense_forward(const RealArray& input, const RealArray& weights, const RealArray& bias,
                        Activation activation, DenseCache* cache = nullptr);

/// Returns {dW, db} in params and d(input). Throws StateError on an empty cache.
LayerGrads dense_backward(const DenseCache& cache, const RealArray& upstream);

/// Rows `indices` of `table` [V x k] as a [b x k] array.
RealArray embedding_lookup(const RealArray& table, std::span<const int> indices);
RealArray embedding_lookup(const RealArray& table, int index);

/// Adds each upstream row into the gradient row of its looked-up index.
void embedding_backward(RealArray& table_grad, std::span<const int> indices,
                        const RealArray& upstream);

struct XentResult {
  RealArray losses;  // [b]
  RealArray grad;    // [b x m], d(loss_i)/d(logits_i), unscaled
};

/// Per-sample softmax cross-entropy with max-subtraction.
XentResult softmax_xent(const RealArray& logits, std::span<const int> labels);

/// Entries are 1/keep_prob with probability keep_prob, else 0.
RealArray dropout_mask(const std::vector<std::size_t>& shape, double keep_prob, Rng& rng);

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
RealArray glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);
RealArray uniform_array(const std::vector<std::size_t>& shape, double lo, double hi, Rng& rng);

/// [a | b] along columns; both [r x *].
RealArray concat_cols(std::span<const RealArray* const> parts);
/// Column slice [begin, begin+width) of a [r x c] array.
RealArray slice_cols(const RealArray& a, std::size_t begin, std::size_t width);

}  // namespace mentor::netcore
