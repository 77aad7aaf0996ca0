#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mentor/curriculum/weights.hpp"
#include "mentor/mentornet/mentornet.hpp"

namespace mentor::mentornet {

/// A (features, target weight) pair.
struct WeightedExample {
  MentorFeatures z;
  double target = 0.0;
};

struct GenerationOptions {
  double loss_max = 10.0;
  double loss_pt_max = 10.0;
  std::size_t label_vocab = 2;
  std::size_t window = 1;
};

using TargetFunction = std::function<double(const MentorFeatures&)>;

/// Samples features uniformly over the input box (loss and loss_pt in
/// [0, max], label uniform, epoch_pct uniform in [0, 100)) and labels each
/// with `target`. With window > 1 every history entry is drawn independently;
/// the target sees the full features.
std::vector<WeightedExample> generate_curriculum_dataset(const TargetFunction& target, std::size_t n,
                                                         Rng& rng, const GenerationOptions& options = {});
/// Same, labelled by a predefined curriculum evaluated on the most recent loss.
std::vector<WeightedExample> generate_curriculum_dataset(const curriculum::CurriculumParams& curriculum,
                                                         std::size_t n, Rng& rng,
                                                         const GenerationOptions& options = {});

/// Data-driven targets: 1 for clean-labelled samples, 0 for corrupted ones.
/// Throws InputError on an empty subset or mismatched lengths.
std::vector<WeightedExample> make_datadriven_labels(std::span<const MentorFeatures> features,
                                                    std::span<const std::uint8_t> is_clean);

enum class FitLoss { mse, cross_entropy };

struct MentorTrainOptions {
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double holdout_fraction = 0.1;
  /// Multiply the learning rate by `lr_decay` at each fraction of the run listed here.
  std::vector<double> lr_decay_at;
  double lr_decay = 0.1;
  /// Implicit training only: fit with cross-entropy for this many leading
  /// epochs before switching to the requested loss. Keeps the sigmoid out of
  /// saturated regions where the squared-error gradient vanishes.
  std::size_t cross_entropy_warmup = 0;
  /// Decoupled decay: every parameter is scaled by (1 - lr * weight_decay) after each step.
  double weight_decay = 0.0;
  /// Extra decoupled decay on the label and epoch embedding tables only.
  double embedding_decay = 0.0;
  /// Pulls each epoch-embedding row toward its neighbours after every step
  /// (rate lr * epoch_smoothing times the row's discrete Laplacian).
  double epoch_smoothing = 0.0;
  /// Implicit training only: the returned parameters are the mean of the
  /// end-of-epoch parameters over this trailing fraction of the run.
  double average_tail = 0.0;
  std::uint64_t seed = 1;

  /// Throws ParameterError naming the first invalid field.
  void validate() const;
};

struct ImplicitTrainResult {
  double initial_heldout_mse = 0.0;
  std::vector<double> heldout_mse;  // one entry per epoch
  std::vector<double> train_loss;   // mean fit loss per epoch
  [[nodiscard]] double final_mse() const {
    return heldout_mse.empty() ? initial_heldout_mse : heldout_mse.back();
  }
};

/// Mini-batch Adam fit of g_m to the targets. The last `holdout_fraction`
/// of a seeded shuffle is held out. Throws TrainingError on divergence.
ImplicitTrainResult train_implicit(std::span<const WeightedExample> data, MentorParams& params,
                                   const MentorTrainOptions& options, FitLoss loss = FitLoss::mse);

struct ExplicitTrainResult {
  std::vector<double> objective;          // mean v*loss + G(v) on the training split, per epoch
  std::vector<double> heldout_mse;        // vs the closed-form weight, per epoch
  std::vector<double> heldout_abs_error;  // mean |g_m - closed form|, per epoch
};

/// Minimizes mean over samples of g_m(z) * loss + G(g_m(z)) where loss is the
/// most recent loss in z. `curriculum` must have a closed-form penalty.
ExplicitTrainResult train_explicit(std::span<const MentorFeatures> data,
                                   const curriculum::CurriculumParams& curriculum, MentorParams& params,
                                   const MentorTrainOptions& options);

/// Mean squared error of g_m against the targets.
double evaluate_mse(const MentorParams& params, std::span<const WeightedExample> data,
                    std::size_t batch_size = 512);
std::vector<double> predict(const MentorParams& params, std::span<const MentorFeatures> data,
                            std::size_t batch_size = 512);

}  // namespace mentor::mentornet
