#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "mentor/mentornet/features.hpp"
#include "mentor/netcore/layers.hpp"
#include "mentor/netcore/lstm.hpp"

namespace mentor::mentornet {

enum class Architecture { bilstm, mlp };

struct MentorConfig {
  Architecture arch = Architecture::bilstm;
  std::size_t label_vocab = 2;
  std::size_t label_dim = 2;
  std::size_t epoch_vocab = 100;
  std::size_t epoch_dim = 5;
  std::size_t lstm_hidden = 10;
  std::size_t fc1_width = 20;
  /// History length. The bi-LSTM accepts any length; the MLP ablation is fixed to it.
  std::size_t window = 1;
  /// Embedding tables start uniform in [-embedding_init, embedding_init].
  double embedding_init = 0.05;

  [[nodiscard]] std::size_t fc1_input() const;
  void validate() const;
};

/// Trainable arrays of the weighting network:
///   label embedding -> [label_vocab x label_dim]
///   epoch embedding -> [epoch_vocab x epoch_dim]
///   forward/backward LSTM cells over (loss, diff) pairs (bi-LSTM only)
///   fc1 (tanh) and fc2 (sigmoid on a single output)
struct MentorParams {
  MentorConfig config;
  netcore::RealArray label_emb;
  netcore::RealArray epoch_emb;
  netcore::LstmCell fwd;
  netcore::LstmCell bwd;
  netcore::RealArray fc1_w;
  netcore::RealArray fc1_b;
  netcore::RealArray fc2_w;
  netcore::RealArray fc2_b;

  static MentorParams init(const MentorConfig& config, Rng& rng);

  /// All trainable arrays in declaration (and serialization) order.
  std::vector<netcore::RealArray*> arrays();
  [[nodiscard]] std::vector<const netcore::RealArray*> arrays() const;
};

/// Forward state for backward(). Holds pointers into the MentorParams it was
/// computed with, so those must stay put until backward() returns.
struct MentorCache {
  bool valid = false;
  std::vector<int> labels;
  std::vector<int> epochs;
  netcore::BiLstmCache lstm;
  netcore::DenseCache fc1;
  netcore::DenseCache fc2;
};

struct MentorOutput {
  std::vector<double> logits;
  std::vector<double> weights;  // sigmoid(logits), in (0, 1)
};

/// Batch forward pass. Deterministic; burn-in sampling is handled by callers.
/// Throws BoundsError for labels or epoch percentages outside the embeddings
/// and InputError for inconsistent histories.
MentorOutput mentor_forward_batch(const MentorParams& params, std::span<const MentorFeatures> batch,
                                  MentorCache* cache = nullptr);

/// Single-sample weight.
double mentor_forward(const MentorFeatures& z, const MentorParams& params);

/// Gradients for every array in MentorParams::arrays() order given
/// d(loss)/d(logit) per sample.
std::vector<netcore::RealArray> mentor_backward(const MentorCache& cache, const MentorParams& params,
                                                std::span<const double> dlogits);

/// Bernoulli(keep_prob) weight used during burn-in.
double burn_in_weight(Rng& rng, double keep_prob);

inline constexpr std::string_view kMentorMagic = "MNETv1";

void save_mentor(const MentorParams& params, const std::filesystem::path& path);
MentorParams load_mentor(const std::filesystem::path& path);
void write_mentor(const MentorParams& params, std::ostream& out);
MentorParams read_mentor(std::istream& in);

}  // namespace mentor::mentornet
