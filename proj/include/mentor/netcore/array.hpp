#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mentor::netcore {

/// Dense row-major array of 64-bit reals.
class RealArray {
 public:
  RealArray() = default;
  explicit RealArray(std::vector<std::size_t> shape, double fill = 0.0);
  RealArray(std::vector<std::size_t> shape, std::vector<double> data);

  static RealArray matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return RealArray({rows, cols}, fill);
  }
  static RealArray vector(std::size_t n, double fill = 0.0) { return RealArray({n}, fill); }
  /// Matrix from nested initializer rows, for tests and examples.
  static RealArray from_rows(std::initializer_list<std::initializer_list<double>> rows);

  [[nodiscard]] const std::vector<std::size_t>& shape() const { return shape_; }
  [[nodiscard]] std::size_t rank() const { return shape_.size(); }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  /// Leading dimension (1 for a vector is not assumed: a rank-1 array has rows() == size()).
  [[nodiscard]] std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  /// Product of the trailing dimensions.
  [[nodiscard]] std::size_t cols() const;

  [[nodiscard]] double* data() { return data_.data(); }
  [[nodiscard]] const double* data() const { return data_.data(); }
  [[nodiscard]] std::span<double> span() { return data_; }
  [[nodiscard]] std::span<const double> span() const { return data_; }
  [[nodiscard]] std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  [[nodiscard]] std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  void fill(double v);
  [[nodiscard]] bool same_shape(const RealArray& other) const { return shape_ == other.shape_; }
  [[nodiscard]] bool all_finite() const;
  [[nodiscard]] double squared_norm() const;

  bool operator==(const RealArray&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

/// Throws DimensionError naming `what` unless `a` has exactly `shape`.
void require_shape(const RealArray& a, const std::vector<std::size_t>& shape, const char* what);

}  // namespace mentor::netcore
