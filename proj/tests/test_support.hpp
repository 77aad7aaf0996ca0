#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mentor/netcore/array.hpp"
#include "mentor/rng.hpp"

namespace mentor::testing {

inline netcore::RealArray random_array(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  netcore::RealArray a(std::move(shape));
  for (double& v : a.span()) v = rng.uniform(-scale, scale);
  return a;
}

/// sum_i probe[i] * out[i]; a scalar loss whose upstream gradient is `probe`.
inline double probe_loss(const netcore::RealArray& out, const netcore::RealArray& probe) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += probe[i] * out[i];
  return s;
}

/// Independent triple-loop reference product.
inline netcore::RealArray naive_matmul(const netcore::RealArray& a, const netcore::RealArray& b) {
  netcore::RealArray c = netcore::RealArray::matrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline double max_abs_diff(const netcore::RealArray& a, const netcore::RealArray& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace mentor::testing
