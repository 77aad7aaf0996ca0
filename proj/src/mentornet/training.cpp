#include "mentor/mentornet/training.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <numeric>
#include <string>

#include "mentor/error.hpp"
#include "mentor/netcore/optimizer.hpp"

namespace mentor::mentornet {

using netcore::RealArray;

std::vector<WeightedExample> generate_curriculum_dataset(const TargetFunction& target, std::size_t n,
                                                         Rng& rng, const GenerationOptions& options) {
  if (n == 0) throw InputError("generate_curriculum_dataset: n_samples must be >= 1");
  if (options.window == 0 || options.label_vocab == 0) throw ParameterError("bad generation options");
  std::vector<WeightedExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    WeightedExample ex;
    const double loss_pt = rng.uniform(0.0, options.loss_pt_max);
    for (std::size_t t = 0; t < options.window; ++t) {
      const double loss = rng.uniform(0.0, options.loss_max);
      ex.z.loss_history.push_back(loss);
      ex.z.diff_history.push_back(loss - loss_pt);
    }
    ex.z.label_id = static_cast<int>(rng.uniform_int(options.label_vocab));
    ex.z.epoch_pct = static_cast<int>(rng.uniform_int(100));
    ex.target = target(ex.z);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<WeightedExample> generate_curriculum_dataset(const curriculum::CurriculumParams& curriculum,
                                                         std::size_t n, Rng& rng,
                                                         const GenerationOptions& options) {
  curriculum.validate();
  return generate_curriculum_dataset(
      [&curriculum](const MentorFeatures& z) { return curriculum::target_weight(curriculum, z.loss(), z.epoch_pct); },
      n, rng, options);
}

std::vector<WeightedExample> make_datadriven_labels(std::span<const MentorFeatures> features,
                                                    std::span<const std::uint8_t> is_clean) {
  if (features.empty()) throw InputError("make_datadriven_labels: empty clean subset");
  if (features.size() != is_clean.size()) {
    throw InputError("make_datadriven_labels: one correctness flag per sample expected");
  }
  std::vector<WeightedExample> out;
  out.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    out.push_back({features[i], is_clean[i] ? 1.0 : 0.0});
  }
  return out;
}

void MentorTrainOptions::validate() const {
  if (batch_size == 0) throw ParameterError("batch size must be positive");
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ParameterError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ParameterError("Adam epsilon must be positive");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw ParameterError("holdout fraction must lie in [0, 1)");
  }
  for (std::size_t i = 0; i < lr_decay_at.size(); ++i) {
    if (!(lr_decay_at[i] >= 0.0 && lr_decay_at[i] <= 1.0)) {
      throw ParameterError("learning-rate decay points must lie in [0, 1]");
    }
    if (i > 0 && !(lr_decay_at[i] > lr_decay_at[i - 1])) {
      throw ParameterError("learning-rate decay points must be strictly increasing");
    }
  }
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ParameterError("lr_decay must lie in (0, 1]");
  if (!(weight_decay >= 0.0 && embedding_decay >= 0.0 &&
        learning_rate * (weight_decay + embedding_decay) < 1.0)) {
    throw ParameterError("weight decays must be non-negative and their sum below 1 / learning rate");
  }
  if (!(epoch_smoothing >= 0.0 && 4.0 * learning_rate * epoch_smoothing < 1.0)) {
    throw ParameterError("epoch smoothing must be non-negative and below 1 / (4 learning rate)");
  }
  if (!(average_tail >= 0.0 && average_tail <= 1.0)) throw ParameterError("average_tail must lie in [0, 1]");
}

namespace {

// label and epoch tables lead MentorParams::arrays()
constexpr std::size_t kEmbeddingArrays = 2;
constexpr std::size_t kEpochTable = 1;

// One explicit step of E <- E - rate * L E with L the path-graph Laplacian over rows.
void smooth_rows(RealArray& table, double rate) {
  const std::size_t n = table.rows();
  const std::size_t w = table.cols();
  if (n < 2) return;
  const RealArray old = table;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      double lap = 0.0;
      if (i > 0) lap += old(i, j) - old(i - 1, j);
      if (i + 1 < n) lap += old(i, j) - old(i + 1, j);
      table(i, j) = old(i, j) - rate * lap;
    }
  }
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> heldout;
};

Split split_indices(std::size_t n, double fraction, Rng rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  shuffle(std::span<std::size_t>(idx), rng);
  auto held = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  if (n < 2) held = 0;
  held = std::min(held, n - 1);
  Split s;
  s.train.assign(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(held));
  s.heldout.assign(idx.end() - static_cast<std::ptrdiff_t>(held), idx.end());
  if (s.heldout.empty()) s.heldout = s.train;
  return s;
}

double learning_rate_at(const MentorTrainOptions& o, std::size_t epoch) {
  double lr = o.learning_rate;
  for (double f : o.lr_decay_at) {
    if (static_cast<double>(epoch) >= f * static_cast<double>(o.epochs)) lr *= o.lr_decay;
  }
  return lr;
}

netcore::OptimizerConfig adam_config(const MentorTrainOptions& o) {
  netcore::OptimizerConfig c = netcore::OptimizerConfig::adam();
  c.beta1 = o.beta1;
  c.beta2 = o.beta2;
  c.epsilon = o.epsilon;
  return c;
}

template <typename Get>
std::vector<MentorFeatures> gather(std::span<const std::size_t> idx, Get get) {
  std::vector<MentorFeatures> batch;
  batch.reserve(idx.size());
  for (std::size_t i : idx) batch.push_back(get(i));
  return batch;
}

void check_finite(std::span<const double> values, const char* what, std::size_t epoch, std::size_t step) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw TrainingError(std::string("mentor training diverged: non-finite ") + what + " at epoch " +
                          std::to_string(epoch) + ", step " + std::to_string(step));
    }
  }
}

/// Runs one epoch of mini-batch Adam. `upstream` maps (batch positions,
/// forward output) to d(loss)/d(logit) and returns the batch loss.
template <typename Get, typename Upstream>
double run_epoch(MentorParams& params, netcore::OptimizerState& opt, std::vector<std::size_t>& order,
                 const MentorTrainOptions& o, std::size_t epoch, Rng& rng, Get get, Upstream upstream) {
  shuffle(std::span<std::size_t>(order), rng);
  const double lr = learning_rate_at(o, epoch);
  const auto arrays = params.arrays();
  double total = 0.0;
  std::size_t step = 0;
  for (std::size_t start = 0; start < order.size(); start += o.batch_size, ++step) {
    const std::size_t end = std::min(order.size(), start + o.batch_size);
    const std::span<const std::size_t> idx(order.data() + start, end - start);
    const auto batch = gather(idx, get);
    MentorCache cache;
    const MentorOutput out = mentor_forward_batch(params, batch, &cache);
    check_finite(out.logits, "mentor output", epoch, step);
    std::vector<double> dlogits(batch.size());
    total += upstream(idx, out, dlogits) * static_cast<double>(batch.size());
    const std::vector<RealArray> grads = mentor_backward(cache, params, dlogits);
    for (const auto& g : grads) check_finite(g.span(), "gradient", epoch, step);
    opt.step(arrays, grads, lr);
    if (o.weight_decay > 0.0 || o.embedding_decay > 0.0) {
      for (std::size_t a = 0; a < arrays.size(); ++a) {
        const double rate = a < kEmbeddingArrays ? o.weight_decay + o.embedding_decay : o.weight_decay;
        const double keep = 1.0 - lr * rate;
        for (double& v : arrays[a]->span()) v *= keep;
      }
    }
    if (o.epoch_smoothing > 0.0) smooth_rows(*arrays[kEpochTable], lr * o.epoch_smoothing);
  }
  return total / static_cast<double>(order.size());
}

}  // namespace

std::vector<double> predict(const MentorParams& params, std::span<const MentorFeatures> data,
                            std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(data.size());
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    const MentorOutput o = mentor_forward_batch(params, data.subspan(start, end - start));
    out.insert(out.end(), o.weights.begin(), o.weights.end());
  }
  return out;
}

double evaluate_mse(const MentorParams& params, std::span<const WeightedExample> data,
                    std::size_t batch_size) {
  if (data.empty()) throw InputError("evaluate_mse: empty data");
  double sum = 0.0;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    std::vector<MentorFeatures> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(data[i].z);
    const MentorOutput o = mentor_forward_batch(params, batch);
    for (std::size_t i = start; i < end; ++i) {
      const double d = o.weights[i - start] - data[i].target;
      sum += d * d;
    }
  }
  return sum / static_cast<double>(data.size());
}

ImplicitTrainResult train_implicit(std::span<const WeightedExample> data, MentorParams& params,
                                   const MentorTrainOptions& options, FitLoss loss) {
  if (data.empty()) throw InputError("train_implicit: empty dataset");
  options.validate();
  const Rng root(options.seed);
  Split split = split_indices(data.size(), options.holdout_fraction, root.substream("split"));
  std::vector<WeightedExample> heldout;
  for (std::size_t i : split.heldout) heldout.push_back(data[i]);

  ImplicitTrainResult result;
  result.initial_heldout_mse = evaluate_mse(params, heldout);
  auto arrays = params.arrays();
  netcore::OptimizerState opt(adam_config(options), std::vector<const RealArray*>(arrays.begin(), arrays.end()));
  Rng order_rng = root.substream("order");
  const auto get = [&](std::size_t i) -> const MentorFeatures& { return data[i].z; };
  const auto average_start = static_cast<std::size_t>(
      std::floor((1.0 - options.average_tail) * static_cast<double>(options.epochs)));
  std::optional<MentorParams> average;
  std::size_t averaged = 0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const FitLoss fit = epoch < options.cross_entropy_warmup ? FitLoss::cross_entropy : loss;
    const double train_loss = run_epoch(
        params, opt, split.train, options, epoch, order_rng, get,
        [&](std::span<const std::size_t> idx, const MentorOutput& out, std::vector<double>& dlogits) {
          const double inv_b = 1.0 / static_cast<double>(idx.size());
          double l = 0.0;
          for (std::size_t k = 0; k < idx.size(); ++k) {
            const double v = out.weights[k];
            const double t = data[idx[k]].target;
            if (fit == FitLoss::mse) {
              l += (v - t) * (v - t);
              dlogits[k] = 2.0 * (v - t) * v * (1.0 - v) * inv_b;
            } else {
              // log-sigmoid forms keep saturated logits finite
              const double z = out.logits[k];
              const double log_v = -std::log1p(std::exp(-std::abs(z))) + std::min(z, 0.0);
              const double log_1mv = log_v - z;
              l -= t * log_v + (1.0 - t) * log_1mv;
              dlogits[k] = (v - t) * inv_b;
            }
          }
          return l * inv_b;
        });
    result.train_loss.push_back(train_loss);
    if (options.average_tail > 0.0 && epoch >= average_start) {
      if (!average) average = params;
      ++averaged;
      const auto src = params.arrays();
      const auto dst = average->arrays();
      for (std::size_t a = 0; a < src.size(); ++a) {
        auto d = dst[a]->span();
        const auto s = src[a]->span();
        for (std::size_t k = 0; k < d.size(); ++k) d[k] += (s[k] - d[k]) / static_cast<double>(averaged);
      }
    }
    result.heldout_mse.push_back(evaluate_mse(average ? *average : params, heldout));
    if (!std::isfinite(result.heldout_mse.back())) {
      throw TrainingError("mentor training diverged: held-out MSE is not finite after epoch " +
                          std::to_string(epoch));
    }
  }
  if (average) params = std::move(*average);
  return result;
}

ExplicitTrainResult train_explicit(std::span<const MentorFeatures> data,
                                   const curriculum::CurriculumParams& curriculum, MentorParams& params,
                                   const MentorTrainOptions& options) {
  if (data.empty()) throw InputError("train_explicit: empty dataset");
  options.validate();
  if (!curriculum.has_penalty()) {
    throw ParameterError("explicit training needs a curriculum with a closed-form penalty");
  }
  curriculum.validate();
  const Rng root(options.seed);
  Split split = split_indices(data.size(), options.holdout_fraction, root.substream("split"));
  std::vector<MentorFeatures> held;
  std::vector<double> held_target;
  for (std::size_t i : split.heldout) {
    held.push_back(data[i]);
    held_target.push_back(curriculum::target_weight(curriculum, data[i].loss(), data[i].epoch_pct));
  }

  ExplicitTrainResult result;
  auto arrays = params.arrays();
  netcore::OptimizerState opt(adam_config(options), std::vector<const RealArray*>(arrays.begin(), arrays.end()));
  Rng order_rng = root.substream("order");
  const auto get = [&](std::size_t i) -> const MentorFeatures& { return data[i]; };
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const double objective = run_epoch(
        params, opt, split.train, options, epoch, order_rng, get,
        [&](std::span<const std::size_t> idx, const MentorOutput& out, std::vector<double>& dlogits) {
          const double inv_b = 1.0 / static_cast<double>(idx.size());
          double f = 0.0;
          for (std::size_t k = 0; k < idx.size(); ++k) {
            const double v = out.weights[k];
            const double loss = data[idx[k]].loss();
            f += v * loss + curriculum::penalty(curriculum, v);
            dlogits[k] = (loss + curriculum::penalty_derivative(curriculum, v)) * v * (1.0 - v) * inv_b;
          }
          return f * inv_b;
        });
    result.objective.push_back(objective);
    const std::vector<double> pred = predict(params, held);
    double se = 0.0;
    double ae = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double d = pred[i] - held_target[i];
      se += d * d;
      ae += std::abs(d);
    }
    result.heldout_mse.push_back(se / static_cast<double>(pred.size()));
    result.heldout_abs_error.push_back(ae / static_cast<double>(pred.size()));
  }
  return result;
}

}  // namespace mentor::mentornet
