#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mentor/curriculum/weights.hpp"
#include "mentor/data/dataset.hpp"
#include "mentor/mentornet/features.hpp"
#include "mentor/mentornet/mentornet.hpp"
#include "mentor/mentornet/training.hpp"
#include "mentor/netcore/optimizer.hpp"
#include "mentor/student/student.hpp"

namespace mentor::spade {

/// Exponential moving average of a per-batch loss percentile.
struct MovingLossTracker {
  double value = 0.0;
  double decay = 0.95;
  double percentile = 75.0;
  bool initialized = false;
};

/// Nearest-rank percentile: the ceil(pct/100 * n)-th smallest value (1-based).
double nearest_rank_percentile(std::span<const double> values, double pct);
/// First call sets the value to the batch percentile, later calls blend it in.
/// Throws InputError on an empty batch.
void update_tracker(MovingLossTracker& tracker, std::span<const double> batch_losses);

/// theta0 * mean(v). Throws InputError on an empty batch.
double renormalize_decay(double theta0, std::span<const double> v);

enum class CurriculumMode {
  none,          // v = 1
  mentornet_dd,  // mentor fitted to clean/corrupt flags on a revealed subset
  mentornet_pd,  // mentor fitted once to a predefined curriculum
  explicit_g,    // stored v updated by projected gradient steps on the penalty
  constant,      // every weight equals TrainConfig::constant_weight
};

std::string_view mode_name(CurriculumMode mode);
/// Throws ParameterError for unknown names.
CurriculumMode parse_mode(std::string_view name);

enum class LrSchedule {
  step,      // multiply by lr_decay at each epoch in lr_decay_epochs
  inv_sqrt,  // lr * sqrt(tau / (tau + t)) with t the global step
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  double learning_rate = 0.1;
  LrSchedule schedule = LrSchedule::step;
  std::vector<std::size_t> lr_decay_epochs = {50, 75};  // entries past the last epoch never fire
  double lr_decay = 0.1;
  double inv_sqrt_tau = 100.0;
  netcore::OptimizerConfig optimizer = netcore::OptimizerConfig::sgd(0.9);
  bool sample_with_replacement = false;

  student::StudentConfig student{.theta0 = 2e-3};  // input_dim and num_classes come from the data

  CurriculumMode mode = CurriculumMode::none;
  curriculum::CurriculumParams curriculum;  // mentornet-pd target, explicit-g penalty
  double constant_weight = 1.0;
  double v_learning_rate = 0.5;  // explicit-g step on v

  double burn_in_fraction = 0.2;
  double keep_prob = 0.75;
  std::vector<double> mentor_update_fractions = {0.21, 0.75};
  bool mentor_warm_start = false;
  double clean_subset_fraction = 0.1;
  std::size_t dd_epoch_copies = 4;  // copies of each revealed sample with resampled epoch_pct

  mentornet::MentorConfig mentor;
  mentornet::MentorTrainOptions mentor_training;
  std::size_t pd_samples = 30000;

  double tracker_decay = 0.95;
  double tracker_percentile = 75.0;
  double grad_norm_smoothing = 0.9;
  std::uint64_t seed = 1;

  /// Throws ParameterError naming the first invalid field.
  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double weighted_loss = 0.0;    // mean over batches of (1/b) sum v_i loss_i
  double unweighted_loss = 0.0;  // mean per-sample loss over the epoch
  double val_acc = 0.0;
  double mean_w_clean = 0.0;     // NaN when no clean sample was seen
  double mean_w_corrupt = 0.0;   // NaN when no corrupted sample was seen
  double grad_norm_sq = 0.0;     // smoothed squared mini-batch gradient norm
  double lr = 0.0;
  double theta_t = 0.0;          // mean over the epoch's batches
};

struct RunResult {
  student::StudentParams student;
  std::optional<mentornet::MentorParams> mentor;
  std::vector<EpochMetrics> metrics;
  std::vector<double> step_grad_norm_sq;  // raw, one per step
  std::vector<double> step_weighted_loss;
  std::vector<std::size_t> mentor_update_epochs;
};

/// Algorithm state for one run. Construct, then either call run() or drive
/// begin_epoch / step / end_epoch by hand.
class SpadeTrainer {
 public:
  /// `dataset` must outlive the trainer. Throws ParameterError / InputError
  /// for invalid configs or datasets without train or validation rows.
  SpadeTrainer(const data::LabeledDataset& dataset, TrainConfig config);

  void begin_epoch();
  /// One mini-batch update on the given dataset rows (train split).
  void step(std::span<const std::size_t> batch);
  EpochMetrics end_epoch();
  /// All configured epochs.
  RunResult run();

  /// Train rows of one epoch in visiting order.
  std::vector<std::size_t> epoch_order();

  [[nodiscard]] const student::StudentParams& student() const { return student_; }
  [[nodiscard]] const std::optional<mentornet::MentorParams>& mentor() const { return mentor_; }
  [[nodiscard]] const MovingLossTracker& tracker() const { return tracker_; }
  [[nodiscard]] std::span<const double> stored_weights() const { return v_; }
  [[nodiscard]] std::size_t epoch() const { return epoch_; }
  [[nodiscard]] std::size_t global_step() const { return step_; }
  [[nodiscard]] bool in_burn_in() const;
  [[nodiscard]] double current_lr() const;
  [[nodiscard]] RunResult result() const;

 private:
  std::vector<double> batch_weights(std::span<const std::size_t> batch, std::span<const double> losses);
  void maybe_update_mentor();
  void train_datadriven_mentor();

  const data::LabeledDataset& data_;
  TrainConfig cfg_;
  Rng root_;
  Rng order_rng_;
  Rng burn_rng_;
  Rng dropout_rng_;
  student::StudentParams student_;
  netcore::OptimizerState opt_;
  std::optional<mentornet::MentorParams> mentor_;
  std::vector<double> v_;  // explicit-g storage, indexed by dataset row
  std::vector<mentornet::LossRecord> records_;
  std::vector<std::size_t> train_rows_;
  std::vector<std::size_t> clean_subset_;
  netcore::RealArray val_x_;
  std::vector<int> val_y_;
  MovingLossTracker tracker_;
  std::size_t epoch_ = 0;
  std::size_t step_ = 0;
  std::size_t burn_in_epochs_ = 0;
  std::vector<std::size_t> update_epochs_;
  std::size_t mentor_updates_ = 0;
  bool mentor_trained_ = false;
  double grad_ema_ = 0.0;
  bool grad_ema_init_ = false;

  // per-epoch accumulators
  double acc_weighted_ = 0.0;
  double acc_unweighted_ = 0.0;
  double acc_theta_ = 0.0;
  std::size_t acc_batches_ = 0;
  std::size_t acc_samples_ = 0;
  double acc_w_clean_ = 0.0;
  double acc_w_corrupt_ = 0.0;
  std::size_t n_clean_ = 0;
  std::size_t n_corrupt_ = 0;
  double last_lr_ = 0.0;

  std::vector<EpochMetrics> metrics_;
  std::vector<double> step_grad_;
  std::vector<double> step_loss_;
  std::vector<std::size_t> updates_done_;
};

/// Convenience wrapper: SpadeTrainer(dataset, config).run().
RunResult run_spade(const data::LabeledDataset& dataset, const TrainConfig& config);

inline constexpr std::string_view kMetricsHeader =
    "epoch,step,weighted_loss,unweighted_loss,val_acc,mean_w_clean,mean_w_corrupt,grad_norm_sq,lr,theta_t";

/// `# mentor-curriculum v<version> seed=<seed> config_hash=<hex>`
std::string provenance_line(std::uint64_t seed, std::uint64_t config_hash);
/// Comment line, header, one row per entry. Reals use 17 significant digits;
/// undefined means are written as "nan".
void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> rows, std::uint64_t seed,
                       std::uint64_t config_hash);
/// Parses a file written by write_metrics_csv. Throws ParseError naming the line.
std::vector<EpochMetrics> read_metrics_csv(std::istream& in);

}  // namespace mentor::spade
