#include "mentor/spade/spade.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "mentor/error.hpp"

namespace mentor::spade {

using netcore::RealArray;

double nearest_rank_percentile(std::span<const double> values, double pct) {
  if (values.empty()) throw InputError("percentile of an empty batch");
  if (!(pct > 0.0 && pct <= 100.0)) throw ParameterError("percentile must lie in (0, 100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

void update_tracker(MovingLossTracker& tracker, std::span<const double> batch_losses) {
  const double q = nearest_rank_percentile(batch_losses, tracker.percentile);
  if (!tracker.initialized) {
    tracker.value = q;
    tracker.initialized = true;
  } else {
    tracker.value = tracker.decay * tracker.value + (1.0 - tracker.decay) * q;
  }
}

double renormalize_decay(double theta0, std::span<const double> v) {
  if (v.empty()) throw InputError("renormalize_decay: empty batch");
  const double sum = std::accumulate(v.begin(), v.end(), 0.0);
  return theta0 * sum / static_cast<double>(v.size());
}

std::string_view mode_name(CurriculumMode mode) {
  switch (mode) {
    case CurriculumMode::none: return "none";
    case CurriculumMode::mentornet_dd: return "mentornet-dd";
    case CurriculumMode::mentornet_pd: return "mentornet-pd";
    case CurriculumMode::explicit_g: return "explicit-g";
    case CurriculumMode::constant: return "constant";
  }
  return "?";
}

CurriculumMode parse_mode(std::string_view name) {
  for (CurriculumMode m : {CurriculumMode::none, CurriculumMode::mentornet_dd, CurriculumMode::mentornet_pd,
                           CurriculumMode::explicit_g, CurriculumMode::constant}) {
    if (name == mode_name(m)) return m;
  }
  if (name == "dd") return CurriculumMode::mentornet_dd;
  if (name == "pd") return CurriculumMode::mentornet_pd;
  throw ParameterError("unknown curriculum mode \"" + std::string(name) +
                       "\" (expected none, mentornet-dd, mentornet-pd, explicit-g or constant)");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ParameterError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ParameterError("learning_rate must be positive");
  for (std::size_t i = 1; i < lr_decay_epochs.size(); ++i) {
    if (lr_decay_epochs[i] <= lr_decay_epochs[i - 1]) {
      throw ParameterError("lr_decay_epochs must be strictly increasing");
    }
  }
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ParameterError("lr_decay must lie in (0, 1]");
  if (!(inv_sqrt_tau > 0.0)) throw ParameterError("inv_sqrt_tau must be positive");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction <= 1.0)) {
    throw ParameterError("burn_in_fraction must lie in [0, 1]");
  }
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw ParameterError("keep_prob must lie in (0, 1]");
  for (double f : mentor_update_fractions) {
    if (!(f > 0.0 && f < 1.0)) throw ParameterError("mentor update fractions must lie in (0, 1)");
  }
  if (!(clean_subset_fraction > 0.0 && clean_subset_fraction <= 1.0)) {
    throw ParameterError("clean_subset_fraction must lie in (0, 1]");
  }
  if (dd_epoch_copies == 0) throw ParameterError("dd_epoch_copies must be positive");
  if (!(constant_weight >= 0.0 && constant_weight <= 1.0)) {
    throw ParameterError("constant_weight must lie in [0, 1]");
  }
  if (!(v_learning_rate > 0.0)) throw ParameterError("v_learning_rate must be positive");
  if (!(tracker_decay > 0.0 && tracker_decay < 1.0)) throw ParameterError("tracker_decay must lie in (0, 1)");
  if (!(tracker_percentile > 0.0 && tracker_percentile <= 100.0)) {
    throw ParameterError("tracker_percentile must lie in (0, 100]");
  }
  if (!(grad_norm_smoothing >= 0.0 && grad_norm_smoothing < 1.0)) {
    throw ParameterError("grad_norm_smoothing must lie in [0, 1)");
  }
  if (pd_samples == 0) throw ParameterError("pd_samples must be positive");
  curriculum.validate();
  if (mode == CurriculumMode::explicit_g && !curriculum.has_penalty()) {
    throw ParameterError("explicit-g needs a self-paced or predefined curriculum");
  }
  student::StudentConfig s = student;
  s.input_dim = 1;
  s.num_classes = 2;
  s.validate();
  mentor.validate();
}

SpadeTrainer::SpadeTrainer(const data::LabeledDataset& dataset, TrainConfig config)
    : data_(dataset),
      cfg_(std::move(config)),
      root_(cfg_.seed),
      order_rng_(root_.substream("order")),
      burn_rng_(root_.substream("burn-in")),
      dropout_rng_(root_.substream("dropout")) {
  cfg_.validate();
  data_.validate();
  train_rows_ = data_.indices(data::Split::train);
  const std::vector<std::size_t> val_rows = data_.indices(data::Split::val);
  if (train_rows_.empty()) throw InputError("dataset has no train rows");
  if (val_rows.empty()) throw InputError("dataset has no validation rows");
  const data::LabeledDataset val = data_.subset(val_rows);
  val_x_ = val.features;
  val_y_ = val.true_labels;

  cfg_.student.input_dim = data_.dim();
  cfg_.student.num_classes = data_.num_classes;
  Rng init = root_.substream("student-init");
  student_ = student::StudentParams::init(cfg_.student, init);
  const auto arrays = student_.arrays();
  opt_ = netcore::OptimizerState(cfg_.optimizer,
                                 std::vector<const RealArray*>(arrays.begin(), arrays.end()));

  cfg_.mentor.label_vocab = std::max<std::size_t>(cfg_.mentor.label_vocab, data_.num_classes);
  v_.assign(data_.size(), 1.0);
  records_.assign(data_.size(), mentornet::LossRecord(cfg_.mentor.window));
  tracker_.decay = cfg_.tracker_decay;
  tracker_.percentile = cfg_.tracker_percentile;

  if (cfg_.mode != CurriculumMode::none) {
    burn_in_epochs_ = static_cast<std::size_t>(cfg_.burn_in_fraction * static_cast<double>(cfg_.epochs) + 1e-9);
  }
  if (cfg_.mode == CurriculumMode::mentornet_dd) {
    for (double f : cfg_.mentor_update_fractions) {
      update_epochs_.push_back(static_cast<std::size_t>(f * static_cast<double>(cfg_.epochs) + 1e-9));
    }
    clean_subset_ = train_rows_;
    Rng pick = root_.substream("clean-subset");
    shuffle(std::span<std::size_t>(clean_subset_), pick);
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(cfg_.clean_subset_fraction * static_cast<double>(train_rows_.size()))));
    clean_subset_.resize(std::min(keep, clean_subset_.size()));
  }
  if (cfg_.mode == CurriculumMode::mentornet_pd) {
    Rng gen = root_.substream("pd-data");
    mentornet::GenerationOptions g;
    g.label_vocab = cfg_.mentor.label_vocab;
    g.window = cfg_.mentor.window;
    const auto pd = mentornet::generate_curriculum_dataset(cfg_.curriculum, cfg_.pd_samples, gen, g);
    Rng minit = root_.substream("mentor-init");
    mentor_ = mentornet::MentorParams::init(cfg_.mentor, minit);
    mentornet::MentorTrainOptions opts = cfg_.mentor_training;
    opts.seed = root_.substream("mentor-train").next_u64();
    mentornet::train_implicit(pd, *mentor_, opts);
  }
}

bool SpadeTrainer::in_burn_in() const { return cfg_.mode != CurriculumMode::none && epoch_ < burn_in_epochs_; }

double SpadeTrainer::current_lr() const {
  if (cfg_.schedule == LrSchedule::inv_sqrt) {
    return cfg_.learning_rate * std::sqrt(cfg_.inv_sqrt_tau / (cfg_.inv_sqrt_tau + static_cast<double>(step_)));
  }
  double lr = cfg_.learning_rate;
  for (std::size_t e : cfg_.lr_decay_epochs) {
    if (epoch_ >= e) lr *= cfg_.lr_decay;
  }
  return lr;
}

void SpadeTrainer::begin_epoch() {
  acc_weighted_ = acc_unweighted_ = acc_theta_ = 0.0;
  acc_batches_ = acc_samples_ = 0;
  acc_w_clean_ = acc_w_corrupt_ = 0.0;
  n_clean_ = n_corrupt_ = 0;
  maybe_update_mentor();
}

void SpadeTrainer::maybe_update_mentor() {
  if (cfg_.mode != CurriculumMode::mentornet_dd) return;
  const bool scheduled = std::find(update_epochs_.begin(), update_epochs_.end(), epoch_) != update_epochs_.end();
  const bool needed = !mentor_ && epoch_ >= burn_in_epochs_;
  if (scheduled || needed) train_datadriven_mentor();
}

void SpadeTrainer::train_datadriven_mentor() {
  const data::LabeledDataset sub = data_.subset(clean_subset_);
  const std::vector<double> losses = student::per_sample_losses(student_, sub.features, sub.observed);
  double loss_pt = tracker_.value;
  if (!tracker_.initialized) loss_pt = nearest_rank_percentile(losses, tracker_.percentile);

  const int pct_now = mentornet::epoch_percentage(epoch_, cfg_.epochs);
  Rng pct_rng = root_.substream("dd-pct").substream(mentor_updates_);
  std::vector<mentornet::MentorFeatures> zs;
  std::vector<std::uint8_t> flags;
  for (std::size_t k = 0; k < clean_subset_.size(); ++k) {
    mentornet::LossRecord rec = records_[clean_subset_[k]];
    rec.push(losses[k], loss_pt);
    for (std::size_t c = 0; c < cfg_.dd_epoch_copies; ++c) {
      const int pct = pct_now + static_cast<int>(pct_rng.uniform_int(static_cast<std::uint64_t>(100 - pct_now)));
      zs.push_back(mentornet::featurize(rec, sub.observed[k], pct, cfg_.mentor.window));
      flags.push_back(sub.is_clean[k]);
    }
  }
  const auto labelled = mentornet::make_datadriven_labels(zs, flags);
  if (!mentor_ || !cfg_.mentor_warm_start) {
    Rng init = root_.substream("mentor-init").substream(mentor_updates_);
    mentor_ = mentornet::MentorParams::init(cfg_.mentor, init);
  }
  mentornet::MentorTrainOptions opts = cfg_.mentor_training;
  opts.seed = root_.substream("mentor-train").substream(mentor_updates_).next_u64();
  mentornet::train_implicit(labelled, *mentor_, opts, mentornet::FitLoss::cross_entropy);
  ++mentor_updates_;
  updates_done_.push_back(epoch_);
}

std::vector<std::size_t> SpadeTrainer::epoch_order() {
  std::vector<std::size_t> order;
  if (cfg_.sample_with_replacement) {
    order.reserve(train_rows_.size());
    for (std::size_t i = 0; i < train_rows_.size(); ++i) {
      order.push_back(train_rows_[order_rng_.uniform_int(train_rows_.size())]);
    }
  } else {
    order = train_rows_;
    shuffle(std::span<std::size_t>(order), order_rng_);
  }
  return order;
}

std::vector<double> SpadeTrainer::batch_weights(std::span<const std::size_t> batch,
                                                std::span<const double> losses) {
  std::vector<double> v(batch.size(), 1.0);
  if (cfg_.mode == CurriculumMode::none) return v;
  if (in_burn_in()) {
    for (double& w : v) w = mentornet::burn_in_weight(burn_rng_, cfg_.keep_prob);
    return v;
  }
  switch (cfg_.mode) {
    case CurriculumMode::constant:
      std::fill(v.begin(), v.end(), cfg_.constant_weight);
      break;
    case CurriculumMode::explicit_g:
      for (std::size_t k = 0; k < batch.size(); ++k) {
        double& stored = v_[batch[k]];
        const double grad = losses[k] + curriculum::penalty_derivative(cfg_.curriculum, stored);
        stored = std::clamp(stored - cfg_.v_learning_rate * grad, 0.0, 1.0);
        v[k] = stored;
      }
      break;
    case CurriculumMode::mentornet_dd:
    case CurriculumMode::mentornet_pd: {
      if (!mentor_) throw StateError("mentor requested before it was trained");
      const int pct = mentornet::epoch_percentage(epoch_, cfg_.epochs);
      std::vector<mentornet::MentorFeatures> zs;
      zs.reserve(batch.size());
      for (std::size_t i : batch) {
        zs.push_back(mentornet::featurize(records_[i], data_.observed[i], pct, cfg_.mentor.window));
      }
      v = mentornet::mentor_forward_batch(*mentor_, zs).weights;
      break;
    }
    case CurriculumMode::none:
      break;
  }
  return v;
}

void SpadeTrainer::step(std::span<const std::size_t> batch) {
  if (batch.empty()) throw InputError("spade_step: empty batch");
  const data::LabeledDataset b = data_.subset(batch);
  student::StudentCache cache;
  const RealArray logits = student::student_forward(b.features, student_, true, &dropout_rng_, &cache);
  const netcore::XentResult xent = netcore::softmax_xent(logits, b.observed);
  const std::span<const double> losses = xent.losses.span();
  for (std::size_t k = 0; k < losses.size(); ++k) {
    if (!std::isfinite(losses[k])) {
      throw TrainingError("non-finite student loss at epoch " + std::to_string(epoch_) + ", step " +
                          std::to_string(step_) + " (row " + std::to_string(batch[k]) + ", lr " +
                          std::to_string(current_lr()) + ")");
    }
  }

  const bool fresh = !tracker_.initialized;
  if (fresh) update_tracker(tracker_, losses);
  for (std::size_t k = 0; k < batch.size(); ++k) records_[batch[k]].push(losses[k], tracker_.value);

  const std::vector<double> v = batch_weights(batch, losses);
  const double theta_t = renormalize_decay(student_.theta0, v);
  const student::WeightedLossResult r = student::weighted_loss_gradient(cache, student_, xent, v, theta_t);
  double gnorm = 0.0;
  for (const RealArray& g : r.grads) gnorm += g.squared_norm();
  if (!std::isfinite(r.objective) || !std::isfinite(gnorm)) {
    throw TrainingError("non-finite objective or gradient at epoch " + std::to_string(epoch_) + ", step " +
                        std::to_string(step_) + " (objective " + std::to_string(r.objective) + ", |g|^2 " +
                        std::to_string(gnorm) + ")");
  }
  grad_ema_ = grad_ema_init_ ? cfg_.grad_norm_smoothing * grad_ema_ + (1.0 - cfg_.grad_norm_smoothing) * gnorm
                             : gnorm;
  grad_ema_init_ = true;

  last_lr_ = current_lr();
  opt_.step(student_.arrays(), r.grads, last_lr_);
  if (!fresh) update_tracker(tracker_, losses);

  acc_weighted_ += r.data_term;
  acc_theta_ += theta_t;
  ++acc_batches_;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    acc_unweighted_ += losses[k];
    if (b.is_clean[k]) {
      acc_w_clean_ += v[k];
      ++n_clean_;
    } else {
      acc_w_corrupt_ += v[k];
      ++n_corrupt_;
    }
  }
  acc_samples_ += batch.size();
  step_grad_.push_back(gnorm);
  step_loss_.push_back(r.data_term);
  ++step_;
}

EpochMetrics SpadeTrainer::end_epoch() {
  EpochMetrics m;
  m.epoch = epoch_;
  m.step = step_;
  const double nan = std::nan("");
  m.weighted_loss = acc_batches_ ? acc_weighted_ / static_cast<double>(acc_batches_) : nan;
  m.unweighted_loss = acc_samples_ ? acc_unweighted_ / static_cast<double>(acc_samples_) : nan;
  m.val_acc = student::accuracy(student_, val_x_, val_y_);
  m.mean_w_clean = n_clean_ ? acc_w_clean_ / static_cast<double>(n_clean_) : nan;
  m.mean_w_corrupt = n_corrupt_ ? acc_w_corrupt_ / static_cast<double>(n_corrupt_) : nan;
  m.grad_norm_sq = grad_ema_;
  m.lr = last_lr_;
  m.theta_t = acc_batches_ ? acc_theta_ / static_cast<double>(acc_batches_) : nan;
  metrics_.push_back(m);
  ++epoch_;
  return m;
}

RunResult SpadeTrainer::run() {
  while (epoch_ < cfg_.epochs) {
    begin_epoch();
    const std::vector<std::size_t> order = epoch_order();
    for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg_.batch_size);
      step(std::span<const std::size_t>(order.data() + start, end - start));
    }
    end_epoch();
  }
  return result();
}

RunResult SpadeTrainer::result() const {
  RunResult r;
  r.student = student_;
  r.mentor = mentor_;
  r.metrics = metrics_;
  r.step_grad_norm_sq = step_grad_;
  r.step_weighted_loss = step_loss_;
  r.mentor_update_epochs = updates_done_;
  return r;
}

RunResult run_spade(const data::LabeledDataset& dataset, const TrainConfig& config) {
  return SpadeTrainer(dataset, config).run();
}

}  // namespace mentor::spade
