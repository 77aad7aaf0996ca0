#include "mentor/data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "mentor/error.hpp"
#include "mentor/rng.hpp"

namespace mentor::data {

using netcore::RealArray;

std::string_view generator_name(GeneratorKind kind) {
  return kind == GeneratorKind::gaussian_blobs ? "gaussian-blobs" : "concentric-rings";
}

GeneratorKind parse_generator(std::string_view name) {
  if (name == "gaussian-blobs" || name == "blobs") return GeneratorKind::gaussian_blobs;
  if (name == "concentric-rings" || name == "rings") return GeneratorKind::concentric_rings;
  throw ParameterError("unknown generator \"" + std::string(name) + "\"");
}

std::string_view split_name(Split split) { return split == Split::train ? "train" : "val"; }

void DatasetSpec::validate() const {
  if (num_classes < 2) throw ParameterError("dataset needs at least 2 classes");
  if (n_train < num_classes) throw ParameterError("n_train must be >= the class count");
  if (dim < 2) throw ParameterError("feature dimension must be >= 2");
  if (!(separation > 0.0) || !std::isfinite(separation)) throw ParameterError("separation must be > 0");
  if (kind == GeneratorKind::gaussian_blobs && num_classes > 2 * dim) {
    throw ParameterError("gaussian blobs support at most 2*dim classes");
  }
}

void CorruptionSpec::validate() const {
  if (!(noise_fraction >= 0.0 && noise_fraction <= 1.0)) {
    throw ParameterError("noise fraction must lie in [0, 1]");
  }
}

std::vector<std::size_t> LabeledDataset::indices(Split which) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == which) out.push_back(i);
  }
  return out;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
  LabeledDataset s;
  s.num_classes = num_classes;
  s.features = RealArray::matrix(rows.size(), dim());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t i = rows[k];
    if (i >= size()) throw BoundsError("subset row " + std::to_string(i) + " out of range");
    std::copy_n(features.row(i).begin(), dim(), s.features.row(k).begin());
    s.observed.push_back(observed[i]);
    s.true_labels.push_back(true_labels[i]);
    s.is_clean.push_back(is_clean[i]);
    s.split.push_back(split[i]);
  }
  return s;
}

void LabeledDataset::validate() const {
  const std::size_t n = observed.size();
  if (features.rows() != n || true_labels.size() != n || is_clean.size() != n || split.size() != n) {
    throw InputError("dataset columns have different lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (observed[i] < 0 || true_labels[i] < 0 || static_cast<std::size_t>(observed[i]) >= num_classes ||
        static_cast<std::size_t>(true_labels[i]) >= num_classes) {
      throw InputError("row " + std::to_string(i) + ": label outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

namespace {

std::vector<int> balanced_labels(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % m);
  shuffle(std::span<int>(y), rng);
  return y;
}

void draw_point(const DatasetSpec& spec, int label, Rng& rng, std::span<double> out) {
  const auto c = static_cast<std::size_t>(label);
  if (spec.kind == GeneratorKind::gaussian_blobs) {
    for (double& v : out) v = rng.normal();
    const double sign = c < spec.dim ? 1.0 : -1.0;
    out[c % spec.dim] += sign * spec.separation;
    return;
  }
  double norm = 0.0;
  for (double& v : out) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  const double radius = static_cast<double>(c + 1) * spec.separation;
  for (double& v : out) v = v / norm * radius + 0.1 * spec.separation * rng.normal();
}

}  // namespace

LabeledDataset make_synthetic(const DatasetSpec& spec) {
  spec.validate();
  const Rng root(spec.seed);
  Rng label_rng = root.substream("labels");
  Rng point_rng = root.substream("points");
  LabeledDataset ds;
  ds.num_classes = spec.num_classes;
  const std::size_t n = spec.n_train + spec.n_val;
  ds.features = RealArray::matrix(n, spec.dim);
  std::vector<int> y = balanced_labels(spec.n_train, spec.num_classes, label_rng);
  const std::vector<int> yv = balanced_labels(spec.n_val, spec.num_classes, label_rng);
  y.insert(y.end(), yv.begin(), yv.end());
  for (std::size_t i = 0; i < n; ++i) {
    draw_point(spec, y[i], point_rng, ds.features.row(i));
    ds.split.push_back(i < spec.n_train ? Split::train : Split::val);
  }
  ds.observed = y;
  ds.true_labels = std::move(y);
  ds.is_clean.assign(n, 1);
  return ds;
}

LabeledDataset corrupt_labels(LabeledDataset dataset, const CorruptionSpec& spec) {
  spec.validate();
  dataset.validate();
  Rng rng(spec.seed);
  const std::size_t m = dataset.num_classes;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.split[i] != Split::train) continue;
    if (!rng.bernoulli(spec.noise_fraction)) continue;
    const int truth = dataset.true_labels[i];
    int label;
    if (spec.exclude_true_class) {
      label = static_cast<int>(rng.uniform_int(m - 1));
      if (label >= truth) ++label;
    } else {
      label = static_cast<int>(rng.uniform_int(m));
    }
    dataset.observed[i] = label;
    dataset.is_clean[i] = label == truth ? 1 : 0;
  }
  return dataset;
}

double corrupted_fraction(const LabeledDataset& dataset) {
  std::size_t train = 0;
  std::size_t bad = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.split[i] != Split::train) continue;
    ++train;
    if (dataset.observed[i] != dataset.true_labels[i]) ++bad;
  }
  if (train == 0) throw InputError("dataset has no train rows");
  return static_cast<double>(bad) / static_cast<double>(train);
}

void write_csv(std::ostream& out, const LabeledDataset& dataset) {
  dataset.validate();
  const std::size_t d = dataset.dim();
  for (std::size_t j = 0; j < d; ++j) out << 'f' << j << ',';
  out << "observed,true,is_clean,split\n";
  char buf[32];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.features.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << dataset.observed[i] << ',' << dataset.true_labels[i] << ',' << int(dataset.is_clean[i]) << ','
        << split_name(dataset.split[i]) << '\n';
  }
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ParseError("dataset CSV line " + std::to_string(line) + ": " + what);
}

double parse_real(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) fail(line, "bad real \"" + s + "\"");
  return v;
}

int parse_int(const std::string& s, std::size_t line) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) fail(line, "bad integer \"" + s + "\"");
  return v;
}

}  // namespace

LabeledDataset read_csv(std::istream& in, std::size_t num_classes) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    have_header = true;
    break;
  }
  if (!have_header) throw ParseError("dataset CSV: missing header");
  const std::vector<std::string> header = split_fields(line);
  if (header.size() < 6) fail(line_no, "header needs at least two feature columns");
  const std::size_t d = header.size() - 4;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "f" + std::to_string(j)) fail(line_no, "expected column f" + std::to_string(j));
  }
  if (header[d] != "observed" || header[d + 1] != "true" || header[d + 2] != "is_clean" || header[d + 3] != "split") {
    fail(line_no, "expected trailing columns observed,true,is_clean,split");
  }

  LabeledDataset ds;
  std::vector<double> values;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_fields(line);
    if (f.size() != d + 4) {
      fail(line_no, "expected " + std::to_string(d + 4) + " fields, got " + std::to_string(f.size()));
    }
    for (std::size_t j = 0; j < d; ++j) values.push_back(parse_real(f[j], line_no));
    const int obs = parse_int(f[d], line_no);
    const int truth = parse_int(f[d + 1], line_no);
    const int clean = parse_int(f[d + 2], line_no);
    if (obs < 0 || truth < 0) fail(line_no, "negative label");
    if (clean != 0 && clean != 1) fail(line_no, "is_clean must be 0 or 1");
    if ((clean == 1) != (obs == truth)) fail(line_no, "is_clean disagrees with observed/true labels");
    Split s;
    if (f[d + 3] == "train") {
      s = Split::train;
    } else if (f[d + 3] == "val") {
      s = Split::val;
      if (!clean) fail(line_no, "validation rows must be clean");
    } else {
      fail(line_no, "split must be train or val");
    }
    ds.observed.push_back(obs);
    ds.true_labels.push_back(truth);
    ds.is_clean.push_back(static_cast<std::uint8_t>(clean));
    ds.split.push_back(s);
    max_label = std::max({max_label, obs, truth});
  }
  const std::size_t n = ds.observed.size();
  ds.features = RealArray({n, d}, std::move(values));
  ds.num_classes = num_classes == 0 ? static_cast<std::size_t>(std::max(max_label + 1, 2)) : num_classes;
  ds.validate();
  return ds;
}

}  // namespace mentor::data
