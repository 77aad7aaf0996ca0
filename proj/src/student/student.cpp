#include "mentor/student/student.hpp"

#include <fstream>
#include <string>

#include "mentor/error.hpp"
#include "mentor/netcore/serialize.hpp"

namespace mentor::student {

using netcore::RealArray;

void StudentConfig::validate() const {
  if (input_dim == 0) throw ParameterError("student input_dim must be positive");
  if (num_classes < 2) throw ParameterError("student needs at least 2 classes");
  for (std::size_t h : hidden) {
    if (h == 0) throw ParameterError("student hidden widths must be positive");
  }
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw ParameterError("student keep_prob must lie in (0, 1]");
  if (!(theta0 >= 0.0)) throw ParameterError("theta0 must be >= 0");
}

StudentParams StudentParams::init(const StudentConfig& config, Rng& rng) {
  config.validate();
  StudentParams p;
  p.keep_prob = config.keep_prob;
  p.theta0 = config.theta0;
  std::size_t fan_in = config.input_dim;
  std::vector<std::size_t> widths = config.hidden;
  widths.push_back(config.num_classes);
  for (std::size_t w : widths) {
    p.weights.push_back(netcore::glorot_uniform(fan_in, w, rng));
    p.biases.push_back(RealArray::vector(w));
    fan_in = w;
  }
  return p;
}

std::vector<RealArray*> StudentParams::arrays() {
  std::vector<RealArray*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

std::vector<const RealArray*> StudentParams::arrays() const {
  std::vector<const RealArray*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

double StudentParams::squared_norm() const {
  double s = 0.0;
  for (const RealArray* a : arrays()) s += a->squared_norm();
  return s;
}

RealArray student_forward(const RealArray& x, const StudentParams& params, bool train_mode, Rng* rng,
                          StudentCache* cache) {
  if (params.weights.empty()) throw StateError("student has no layers");
  if (x.rank() != 2 || x.cols() != params.input_dim()) {
    throw DimensionError("student input " + netcore::shape_string(x.shape()) + " vs input width " +
                         std::to_string(params.input_dim()));
  }
  const bool dropout = train_mode && params.keep_prob < 1.0;
  if (dropout && rng == nullptr) throw ContractError("student dropout needs an rng in train mode");
  if (cache) {
    cache->layers.assign(params.layer_count(), {});
    cache->masks.clear();
  }
  RealArray h = x;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    const bool last = l + 1 == params.layer_count();
    h = netcore::dense_forward(h, params.weights[l], params.biases[l],
                               last ? netcore::Activation::identity : netcore::Activation::tanh,
                               cache ? &cache->layers[l] : nullptr);
    if (!last && dropout) {
      RealArray mask = netcore::dropout_mask(h.shape(), params.keep_prob, *rng);
      for (std::size_t i = 0; i < h.size(); ++i) h[i] *= mask[i];
      if (cache) cache->masks.push_back(std::move(mask));
    }
  }
  return h;
}

std::vector<RealArray> student_backward(const StudentCache& cache, const StudentParams& params,
                                        const RealArray& dlogits) {
  if (cache.layers.size() != params.layer_count()) throw StateError("student backward without a forward cache");
  std::vector<RealArray> grads(2 * params.layer_count());
  RealArray up = dlogits;
  for (std::size_t l = params.layer_count(); l-- > 0;) {
    netcore::LayerGrads g = netcore::dense_backward(cache.layers[l], up);
    grads[2 * l] = std::move(g.params[0]);
    grads[2 * l + 1] = std::move(g.params[1]);
    up = std::move(g.input);
    if (l > 0 && !cache.masks.empty()) {
      const RealArray& mask = cache.masks[l - 1];
      for (std::size_t i = 0; i < up.size(); ++i) up[i] *= mask[i];
    }
  }
  return grads;
}

namespace {

void check_weights(std::span<const double> losses, std::span<const double> v) {
  if (losses.size() != v.size()) throw InputError("weighted loss: one weight per sample expected");
  if (losses.empty()) throw InputError("weighted loss: empty batch");
  for (double w : v) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw ContractError("sample weight " + std::to_string(w) + " outside [0, 1]");
    }
  }
}

}  // namespace

double weighted_loss(std::span<const double> losses, std::span<const double> v, double theta_t,
                     const StudentParams& params) {
  check_weights(losses, v);
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * losses[i];
  return s / static_cast<double>(v.size()) + theta_t * params.squared_norm();
}

WeightedLossResult weighted_loss_gradient(const StudentCache& cache, const StudentParams& params,
                                          const netcore::XentResult& xent, std::span<const double> v,
                                          double theta_t) {
  check_weights(xent.losses.span(), v);
  const std::size_t b = v.size();
  const double inv_b = 1.0 / static_cast<double>(b);
  WeightedLossResult r;
  RealArray dlogits = xent.grad;
  for (std::size_t i = 0; i < b; ++i) {
    r.data_term += v[i] * xent.losses[i];
    for (double& g : dlogits.row(i)) g *= v[i] * inv_b;
  }
  r.data_term *= inv_b;
  r.objective = r.data_term + theta_t * params.squared_norm();
  r.grads = student_backward(cache, params, dlogits);
  if (theta_t != 0.0) {
    const auto arrays = params.arrays();
    for (std::size_t k = 0; k < arrays.size(); ++k) {
      const auto src = arrays[k]->span();
      auto dst = r.grads[k].span();
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] += 2.0 * theta_t * src[i];
    }
  }
  return r;
}

std::vector<double> per_sample_losses(const StudentParams& params, const RealArray& x,
                                      std::span<const int> labels) {
  const netcore::XentResult r = netcore::softmax_xent(student_forward(x, params, false), labels);
  return {r.losses.span().begin(), r.losses.span().end()};
}

double accuracy(const StudentParams& params, const RealArray& x, std::span<const int> labels) {
  if (x.rows() == 0) throw InputError("accuracy: empty input");
  const RealArray logits = student_forward(x, params, false);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    if (static_cast<int>(best) == labels[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(logits.rows());
}

void write_student(const StudentParams& params, std::ostream& out) {
  auto arrays = params.arrays();
  const RealArray hyper({2}, std::vector<double>{params.keep_prob, params.theta0});
  arrays.push_back(&hyper);
  netcore::write_param_file(out, kStudentMagic, arrays);
}

StudentParams read_student(std::istream& in) {
  std::vector<RealArray> arrays = netcore::read_param_file(in, kStudentMagic);
  if (arrays.size() < 3 || arrays.size() % 2 != 1 || arrays.back().size() != 2) {
    throw ParseError("student file: unexpected array layout");
  }
  StudentParams p;
  p.keep_prob = arrays.back()[0];
  p.theta0 = arrays.back()[1];
  std::size_t fan_in = arrays[0].rank() == 2 ? arrays[0].rows() : 0;
  for (std::size_t k = 0; k + 1 < arrays.size(); k += 2) {
    RealArray& w = arrays[k];
    RealArray& b = arrays[k + 1];
    if (w.rank() != 2 || b.rank() != 1 || w.rows() != fan_in || w.cols() != b.size()) {
      throw ParseError("student file: layer " + std::to_string(k / 2) + " has inconsistent shapes");
    }
    fan_in = w.cols();
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

void save_student(const StudentParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  write_student(params, out);
  if (!out) throw InputError("failed writing " + path.string());
}

StudentParams load_student(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_student(in);
}

}  // namespace mentor::student
