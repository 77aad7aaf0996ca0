#include "mentor/netcore/array.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "mentor/error.hpp"

namespace mentor::netcore {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("array dimensions must be positive, got " + shape_string(shape));
  }
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

RealArray::RealArray(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

RealArray::RealArray(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw DimensionError("data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(shape_));
  }
}

RealArray RealArray::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged rows in from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return RealArray({r, c}, std::move(data));
}

std::size_t RealArray::cols() const {
  if (shape_.size() <= 1) return shape_.empty() ? 0 : 1;
  return std::accumulate(shape_.begin() + 1, shape_.end(), std::size_t{1}, std::multiplies<>());
}

void RealArray::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool RealArray::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double RealArray::squared_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

void require_shape(const RealArray& a, const std::vector<std::size_t>& shape, const char* what) {
  if (a.shape() != shape) {
    throw DimensionError(std::string(what) + ": expected shape " + shape_string(shape) + ", got " +
                         shape_string(a.shape()));
  }
}

}  // namespace mentor::netcore
