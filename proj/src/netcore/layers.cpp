#include "mentor/netcore/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mentor/error.hpp"
#include "mentor/netcore/kernels.hpp"

namespace mentor::netcore {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void activate(Activation act, std::span<double> values) {
  switch (act) {
    case Activation::identity:
      return;
    case Activation::tanh:
      for (double& v : values) v = std::tanh(v);
      return;
    case Activation::sigmoid:
      for (double& v : values) v = sigmoid(v);
      return;
  }
}

RealArray dense_forward(const RealArray& input, const RealArray& weights, const RealArray& bias,
                        Activation activation, DenseCache* cache) {
  if (input.rank() != 2 || weights.rank() != 2 || bias.rank() != 1) {
    throw DimensionError("dense_forward: expected input[b x d_in], weights[d_in x d_out], bias[d_out]");
  }
  const std::size_t b = input.rows();
  const std::size_t d_in = input.cols();
  const std::size_t d_out = weights.cols();
  if (weights.rows() != d_in || bias.size() != d_out) {
    throw DimensionError("dense_forward: input " + shape_string(input.shape()) + ", weights " +
                         shape_string(weights.shape()) + ", bias " + shape_string(bias.shape()));
  }
  RealArray out = RealArray::matrix(b, d_out);
  for (std::size_t i = 0; i < b; ++i) std::copy(bias.data(), bias.data() + d_out, out.row(i).data());
  kernels::active().gemm_nn(input.data(), weights.data(), out.data(), b, d_in, d_out, true);
  activate(activation, out.span());
  if (cache != nullptr) {
    cache->valid = true;
    cache->weights = &weights;
    cache->input = input;
    cache->output = out;
    cache->activation = activation;
  }
  return out;
}

LayerGrads dense_backward(const DenseCache& cache, const RealArray& upstream) {
  if (!cache.valid || cache.weights == nullptr) {
    throw StateError("dense_backward called without a cached forward pass");
  }
  if (!upstream.same_shape(cache.output)) {
    throw DimensionError("dense_backward: upstream " + shape_string(upstream.shape()) +
                         " vs output " + shape_string(cache.output.shape()));
  }
  const RealArray& w = *cache.weights;
  const std::size_t b = cache.input.rows();
  const std::size_t d_in = w.rows();
  const std::size_t d_out = w.cols();

  RealArray pre = upstream;  // gradient w.r.t. the pre-activation
  switch (cache.activation) {
    case Activation::identity:
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < pre.size(); ++i) {
        const double y = cache.output[i];
        pre[i] *= 1.0 - y * y;
      }
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < pre.size(); ++i) {
        const double y = cache.output[i];
        pre[i] *= y * (1.0 - y);
      }
      break;
  }

  LayerGrads g;
  g.params.emplace_back(RealArray::matrix(d_in, d_out));
  g.params.emplace_back(RealArray::vector(d_out));
  const auto& k = kernels::active();
  k.gemm_tn(cache.input.data(), pre.data(), g.params[0].data(), d_in, b, d_out);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < d_out; ++j) g.params[1][j] += pre(i, j);
  }
  g.input = RealArray::matrix(b, d_in);
  k.gemm_nt(pre.data(), w.data(), g.input.data(), b, d_out, d_in, false);
  return g;
}

RealArray embedding_lookup(const RealArray& table, std::span<const int> indices) {
  if (table.rank() != 2) throw DimensionError("embedding table must be rank 2");
  const std::size_t v = table.rows();
  const std::size_t k = table.cols();
  RealArray out = RealArray::matrix(indices.size(), k);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || static_cast<std::size_t>(idx) >= v) {
      throw BoundsError("embedding index " + std::to_string(idx) + " outside [0, " +
                        std::to_string(v) + ")");
    }
    const auto src = table.row(static_cast<std::size_t>(idx));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

RealArray embedding_lookup(const RealArray& table, int index) {
  const int idx[] = {index};
  RealArray out = embedding_lookup(table, idx);
  return RealArray({out.cols()}, std::vector<double>(out.span().begin(), out.span().end()));
}

void embedding_backward(RealArray& table_grad, std::span<const int> indices,
                        const RealArray& upstream) {
  const std::size_t k = table_grad.cols();
  if (upstream.rows() != indices.size() || upstream.cols() != k) {
    throw DimensionError("embedding_backward: upstream " + shape_string(upstream.shape()));
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || static_cast<std::size_t>(idx) >= table_grad.rows()) {
      throw BoundsError("embedding index " + std::to_string(idx) + " out of range");
    }
    auto dst = table_grad.row(static_cast<std::size_t>(idx));
    const auto src = upstream.row(i);
    for (std::size_t j = 0; j < k; ++j) dst[j] += src[j];
  }
}

XentResult softmax_xent(const RealArray& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.rows() != labels.size()) {
    throw DimensionError("softmax_xent: logits " + shape_string(logits.shape()) + " vs " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t b = logits.rows();
  const std::size_t m = logits.cols();
  XentResult r{RealArray::vector(b), RealArray::matrix(b, m)};
  for (std::size_t i = 0; i < b; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= m) {
      throw BoundsError("label " + std::to_string(y) + " outside [0, " + std::to_string(m) + ")");
    }
    const auto z = logits.row(i);
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - zmax);
    const double log_denom = std::log(denom);
    // -log softmax = log_denom - (z_y - zmax); clamp the rounding residue at 0.
    r.losses[i] = std::max(0.0, log_denom - (z[static_cast<std::size_t>(y)] - zmax));
    auto g = r.grad.row(i);
    for (std::size_t j = 0; j < m; ++j) g[j] = std::exp(z[j] - zmax - log_denom);
    g[static_cast<std::size_t>(y)] -= 1.0;
  }
  return r;
}

RealArray dropout_mask(const std::vector<std::size_t>& shape, double keep_prob, Rng& rng) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw ParameterError("dropout keep_prob must be in (0, 1], got " + std::to_string(keep_prob));
  }
  RealArray mask(shape, 1.0);
  if (keep_prob == 1.0) return mask;
  const double scale = 1.0 / keep_prob;
  for (double& v : mask.span()) v = rng.bernoulli(keep_prob) ? scale : 0.0;
  return mask;
}

RealArray glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform_array({fan_in, fan_out}, -limit, limit, rng);
}

RealArray uniform_array(const std::vector<std::size_t>& shape, double lo, double hi, Rng& rng) {
  RealArray a(shape);
  for (double& v : a.span()) v = rng.uniform(lo, hi);
  return a;
}

RealArray concat_cols(std::span<const RealArray* const> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: nothing to concatenate");
  const std::size_t r = parts[0]->rows();
  std::size_t c = 0;
  for (const RealArray* p : parts) {
    if (p->rows() != r) throw DimensionError("concat_cols: row counts differ");
    c += p->cols();
  }
  RealArray out = RealArray::matrix(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double* dst = out.row(i).data();
    for (const RealArray* p : parts) {
      const auto src = p->row(i);
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return out;
}

RealArray slice_cols(const RealArray& a, std::size_t begin, std::size_t width) {
  if (begin + width > a.cols()) throw DimensionError("slice_cols out of range");
  RealArray out = RealArray::matrix(a.rows(), width);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto src = a.row(i).subspan(begin, width);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace mentor::netcore
