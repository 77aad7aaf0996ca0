#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "mentor/netcore/array.hpp"

namespace mentor::data {

enum class GeneratorKind { gaussian_blobs, concentric_rings };
enum class Split : std::uint8_t { train, val };

std::string_view generator_name(GeneratorKind kind);
GeneratorKind parse_generator(std::string_view name);
std::string_view split_name(Split split);

struct DatasetSpec {
  std::size_t n_train = 2000;
  std::size_t n_val = 500;
  std::size_t num_classes = 4;
  std::size_t dim = 10;
  GeneratorKind kind = GeneratorKind::gaussian_blobs;
  double separation = 3.0;
  std::uint64_t seed = 1;

  /// Throws ParameterError unless n_train >= m >= 2, d >= 2, separation > 0
  /// and (for blobs) m <= 2d so every class gets its own axis direction.
  void validate() const;
};

struct CorruptionSpec {
  double noise_fraction = 0.0;
  std::uint64_t seed = 1;
  /// Draw the replacement among the m-1 wrong classes instead of all m.
  bool exclude_true_class = false;

  void validate() const;
};

struct LabeledDataset {
  netcore::RealArray features;  // [n x d]
  std::vector<int> observed;
  std::vector<int> true_labels;
  std::vector<std::uint8_t> is_clean;
  std::vector<Split> split;
  std::size_t num_classes = 0;

  [[nodiscard]] std::size_t size() const { return observed.size(); }
  [[nodiscard]] std::size_t dim() const { return features.cols(); }
  [[nodiscard]] std::vector<std::size_t> indices(Split which) const;
  /// Rows `rows` in the given order.
  [[nodiscard]] LabeledDataset subset(std::span<const std::size_t> rows) const;
  /// Throws InputError when lengths disagree or labels fall outside [0, m).
  void validate() const;
};

/// Uncorrupted dataset: train rows first, then validation rows. Classes are
/// balanced within each split (counts differ by at most one).
///   blobs: class c centred at separation * (+-e_{c mod d}) with unit noise
///   rings: class c on the sphere of radius (c+1) * separation, noise 0.1 * separation
LabeledDataset make_synthetic(const DatasetSpec& spec);

/// Each train label is, with probability p, replaced by a uniform class.
/// Validation rows and true labels are never changed.
LabeledDataset corrupt_labels(LabeledDataset dataset, const CorruptionSpec& spec);

/// Fraction of train rows whose observed label differs from the true label.
double corrupted_fraction(const LabeledDataset& dataset);

/// Header `f0,...,f{d-1},observed,true,is_clean,split`; reals use 17
/// significant digits so a write/read cycle is exact.
void write_csv(std::ostream& out, const LabeledDataset& dataset);
/// Skips leading '#' comment lines. With num_classes == 0 the class count
/// is inferred from the largest label. Throws ParseError naming the line.
LabeledDataset read_csv(std::istream& in, std::size_t num_classes = 0);

}  // namespace mentor::data
