#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "mentor/netcore/layers.hpp"
#include "mentor/rng.hpp"

namespace mentor::student {

struct StudentConfig {
  std::size_t input_dim = 10;
  std::size_t num_classes = 4;
  std::vector<std::size_t> hidden = {32, 32};
  double keep_prob = 1.0;  // dropout on hidden activations; 1 disables it
  double theta0 = 0.0;     // base weight-decay coefficient

  void validate() const;
};

/// Dense layers (tanh hidden, identity output of width num_classes).
struct StudentParams {
  std::vector<netcore::RealArray> weights;
  std::vector<netcore::RealArray> biases;
  double keep_prob = 1.0;
  double theta0 = 0.0;

  static StudentParams init(const StudentConfig& config, Rng& rng);

  [[nodiscard]] std::size_t input_dim() const { return weights.front().rows(); }
  [[nodiscard]] std::size_t num_classes() const { return biases.back().size(); }
  [[nodiscard]] std::size_t layer_count() const { return weights.size(); }
  /// W0, b0, W1, b1, ...
  std::vector<netcore::RealArray*> arrays();
  [[nodiscard]] std::vector<const netcore::RealArray*> arrays() const;
  /// Sum of squares over every trainable array.
  [[nodiscard]] double squared_norm() const;
};

struct StudentCache {
  std::vector<netcore::DenseCache> layers;
  std::vector<netcore::RealArray> masks;  // one per hidden layer when dropout ran
};

/// Logits [b x m]. Dropout runs only when `train_mode` and keep_prob < 1, in
/// which case `rng` is required. Throws DimensionError on a width mismatch.
netcore::RealArray student_forward(const netcore::RealArray& x, const StudentParams& params, bool train_mode,
                                   Rng* rng = nullptr, StudentCache* cache = nullptr);

/// Gradients in arrays() order given d(objective)/d(logits).
std::vector<netcore::RealArray> student_backward(const StudentCache& cache, const StudentParams& params,
                                                 const netcore::RealArray& dlogits);

/// (1/b) sum v_i loss_i + theta_t ||w||^2. Throws ContractError for weights
/// outside [0, 1] and InputError on length mismatch.
double weighted_loss(std::span<const double> losses, std::span<const double> v, double theta_t,
                     const StudentParams& params);

struct WeightedLossResult {
  double objective = 0.0;
  double data_term = 0.0;  // (1/b) sum v_i loss_i
  std::vector<netcore::RealArray> grads;
};

/// Objective and gradient for a batch whose forward pass filled `cache`:
/// each sample's cross-entropy gradient is scaled by v_i / b and the decay
/// gradient 2 theta_t w is added.
WeightedLossResult weighted_loss_gradient(const StudentCache& cache, const StudentParams& params,
                                          const netcore::XentResult& xent, std::span<const double> v,
                                          double theta_t);

/// Eval-mode per-sample cross-entropy losses.
std::vector<double> per_sample_losses(const StudentParams& params, const netcore::RealArray& x,
                                      std::span<const int> labels);
/// Fraction of rows whose arg-max logit equals the label (eval mode).
double accuracy(const StudentParams& params, const netcore::RealArray& x, std::span<const int> labels);

inline constexpr std::string_view kStudentMagic = "SNETv1";

void write_student(const StudentParams& params, std::ostream& out);
StudentParams read_student(std::istream& in);
void save_student(const StudentParams& params, const std::filesystem::path& path);
StudentParams load_student(const std::filesystem::path& path);

}  // namespace mentor::student
