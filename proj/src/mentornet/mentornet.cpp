#include "mentor/mentornet/mentornet.hpp"

#include <fstream>
#include <string>

#include "mentor/error.hpp"
#include "mentor/netcore/serialize.hpp"

namespace mentor::mentornet {

using netcore::RealArray;

std::size_t MentorConfig::fc1_input() const {
  const std::size_t seq = arch == Architecture::bilstm ? 2 * lstm_hidden : 2 * window;
  return seq + label_dim + epoch_dim;
}

void MentorConfig::validate() const {
  if (label_vocab == 0 || label_dim == 0 || epoch_vocab == 0 || epoch_dim == 0 || fc1_width == 0 ||
      window == 0 || (arch == Architecture::bilstm && lstm_hidden == 0)) {
    throw ParameterError("mentor network dimensions must be positive");
  }
  if (!(embedding_init >= 0.0)) throw ParameterError("embedding_init must be >= 0");
}

MentorParams MentorParams::init(const MentorConfig& config, Rng& rng) {
  config.validate();
  MentorParams p;
  p.config = config;
  const double e = config.embedding_init;
  p.label_emb = netcore::uniform_array({config.label_vocab, config.label_dim}, -e, e, rng);
  p.epoch_emb = netcore::uniform_array({config.epoch_vocab, config.epoch_dim}, -e, e, rng);
  if (config.arch == Architecture::bilstm) {
    p.fwd = netcore::LstmCell::init(2, config.lstm_hidden, rng);
    p.bwd = netcore::LstmCell::init(2, config.lstm_hidden, rng);
  }
  p.fc1_w = netcore::glorot_uniform(config.fc1_input(), config.fc1_width, rng);
  p.fc1_b = RealArray::vector(config.fc1_width);
  p.fc2_w = netcore::glorot_uniform(config.fc1_width, 1, rng);
  p.fc2_b = RealArray::vector(1);
  return p;
}

std::vector<RealArray*> MentorParams::arrays() {
  std::vector<RealArray*> out = {&label_emb, &epoch_emb};
  if (config.arch == Architecture::bilstm) {
    for (auto& a : fwd.params) out.push_back(&a);
    for (auto& a : bwd.params) out.push_back(&a);
  }
  out.insert(out.end(), {&fc1_w, &fc1_b, &fc2_w, &fc2_b});
  return out;
}

std::vector<const RealArray*> MentorParams::arrays() const {
  auto mut = const_cast<MentorParams*>(this)->arrays();
  return {mut.begin(), mut.end()};
}

namespace {

void check_batch(const MentorParams& params, std::span<const MentorFeatures> batch) {
  if (batch.empty()) throw InputError("mentor forward: empty batch");
  const std::size_t window = batch.front().window();
  for (const auto& z : batch) {
    z.validate();
    if (z.window() != window) throw InputError("mentor forward: histories differ in length within a batch");
    if (z.label_id < 0 || static_cast<std::size_t>(z.label_id) >= params.config.label_vocab) {
      throw BoundsError("label id " + std::to_string(z.label_id) + " outside the label embedding [0, " +
                        std::to_string(params.config.label_vocab) + ")");
    }
    if (static_cast<std::size_t>(z.epoch_pct) >= params.config.epoch_vocab) {
      throw BoundsError("epoch percentage outside the epoch embedding");
    }
  }
  if (params.config.arch == Architecture::mlp && window != params.config.window) {
    throw InputError("MLP mentor expects history length " + std::to_string(params.config.window));
  }
}

}  // namespace

MentorOutput mentor_forward_batch(const MentorParams& params, std::span<const MentorFeatures> batch,
                                  MentorCache* cache) {
  check_batch(params, batch);
  const std::size_t b = batch.size();
  const std::size_t window = batch.front().window();

  std::vector<int> labels(b);
  std::vector<int> epochs(b);
  for (std::size_t i = 0; i < b; ++i) {
    labels[i] = batch[i].label_id;
    epochs[i] = batch[i].epoch_pct;
  }

  RealArray seq_code;
  if (params.config.arch == Architecture::bilstm) {
    std::vector<RealArray> seq(window, RealArray::matrix(b, 2));
    for (std::size_t t = 0; t < window; ++t) {
      for (std::size_t i = 0; i < b; ++i) {
        seq[t](i, 0) = batch[i].loss_history[t];
        seq[t](i, 1) = batch[i].diff_history[t];
      }
    }
    seq_code = netcore::bilstm_encode(seq, params.fwd, params.bwd, cache ? &cache->lstm : nullptr);
  } else {
    seq_code = RealArray::matrix(b, 2 * window);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t t = 0; t < window; ++t) {
        seq_code(i, t) = batch[i].loss_history[t];
        seq_code(i, window + t) = batch[i].diff_history[t];
      }
    }
  }
  const RealArray lab = netcore::embedding_lookup(params.label_emb, labels);
  const RealArray ep = netcore::embedding_lookup(params.epoch_emb, epochs);
  const RealArray* parts[] = {&seq_code, &lab, &ep};
  const RealArray joined = netcore::concat_cols(parts);

  const RealArray h = netcore::dense_forward(joined, params.fc1_w, params.fc1_b, netcore::Activation::tanh,
                                             cache ? &cache->fc1 : nullptr);
  const RealArray z = netcore::dense_forward(h, params.fc2_w, params.fc2_b, netcore::Activation::identity,
                                             cache ? &cache->fc2 : nullptr);
  MentorOutput out;
  out.logits.assign(z.span().begin(), z.span().end());
  out.weights.resize(b);
  for (std::size_t i = 0; i < b; ++i) out.weights[i] = netcore::sigmoid(out.logits[i]);
  if (cache != nullptr) {
    cache->valid = true;
    cache->labels = std::move(labels);
    cache->epochs = std::move(epochs);
  }
  return out;
}

double mentor_forward(const MentorFeatures& z, const MentorParams& params) {
  return mentor_forward_batch(params, std::span<const MentorFeatures>(&z, 1)).weights[0];
}

std::vector<RealArray> mentor_backward(const MentorCache& cache, const MentorParams& params,
                                       std::span<const double> dlogits) {
  if (!cache.valid) throw StateError("mentor_backward called without a cached forward pass");
  const std::size_t b = cache.labels.size();
  if (dlogits.size() != b) throw DimensionError("mentor_backward: one upstream value per sample expected");

  RealArray dz = RealArray::matrix(b, 1);
  for (std::size_t i = 0; i < b; ++i) dz[i] = dlogits[i];
  netcore::LayerGrads g2 = netcore::dense_backward(cache.fc2, dz);
  netcore::LayerGrads g1 = netcore::dense_backward(cache.fc1, g2.input);

  const auto& cfg = params.config;
  const std::size_t seq_width = cfg.fc1_input() - cfg.label_dim - cfg.epoch_dim;
  RealArray d_label(params.label_emb.shape());
  RealArray d_epoch(params.epoch_emb.shape());
  netcore::embedding_backward(d_label, cache.labels, netcore::slice_cols(g1.input, seq_width, cfg.label_dim));
  netcore::embedding_backward(d_epoch, cache.epochs,
                              netcore::slice_cols(g1.input, seq_width + cfg.label_dim, cfg.epoch_dim));

  std::vector<RealArray> grads;
  grads.push_back(std::move(d_label));
  grads.push_back(std::move(d_epoch));
  if (cfg.arch == Architecture::bilstm) {
    netcore::BiLstmGrads lg =
        netcore::bilstm_backward(cache.lstm, params.fwd, params.bwd, netcore::slice_cols(g1.input, 0, seq_width));
    for (auto& a : lg.fwd) grads.push_back(std::move(a));
    for (auto& a : lg.bwd) grads.push_back(std::move(a));
  }
  grads.push_back(std::move(g1.params[0]));
  grads.push_back(std::move(g1.params[1]));
  grads.push_back(std::move(g2.params[0]));
  grads.push_back(std::move(g2.params[1]));
  return grads;
}

double burn_in_weight(Rng& rng, double keep_prob) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw ParameterError("burn-in keep probability must be in (0, 1]");
  }
  return rng.bernoulli(keep_prob) ? 1.0 : 0.0;
}

void write_mentor(const MentorParams& params, std::ostream& out) {
  netcore::write_param_file(out, kMentorMagic, params.arrays());
}

MentorParams read_mentor(std::istream& in) {
  std::vector<RealArray> a = netcore::read_param_file(in, kMentorMagic);
  MentorParams p;
  const bool lstm = a.size() == 2 + 2 * netcore::LstmCell::kParamCount + 4;
  if (!lstm && a.size() != 6) throw ParseError("unexpected array count " + std::to_string(a.size()) + " in mentor file");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rank() > 2) throw ParseError("mentor arrays must be rank 1 or 2");
  }
  auto& c = p.config;
  c.arch = lstm ? Architecture::bilstm : Architecture::mlp;
  if (a[0].rank() != 2 || a[1].rank() != 2) throw ParseError("embedding tables must be rank 2");
  c.label_vocab = a[0].rows();
  c.label_dim = a[0].cols();
  c.epoch_vocab = a[1].rows();
  c.epoch_dim = a[1].cols();
  std::size_t k = 2;
  if (lstm) {
    const std::size_t hidden = a[3].size();
    if (a[2].rank() != 2 || a[2].rows() != 2 + hidden) throw ParseError("bad LSTM gate shape");
    c.lstm_hidden = hidden;
    for (auto* cell : {&p.fwd, &p.bwd}) {
      *cell = netcore::LstmCell::zeros(2, hidden);
      for (auto& arr : cell->params) {
        if (!arr.same_shape(a[k])) throw ParseError("LSTM array shape mismatch");
        arr = std::move(a[k++]);
      }
    }
  }
  if (a[k].rank() != 2) throw ParseError("fc1 weights must be rank 2");
  c.fc1_width = a[k].cols();
  if (!lstm) {
    const std::size_t seq = a[k].rows() - c.label_dim - c.epoch_dim;
    if (seq == 0 || seq % 2 != 0) throw ParseError("bad MLP mentor input width");
    c.window = seq / 2;
  }
  if (a[k].rows() != c.fc1_input()) throw ParseError("fc1 input width does not match the embeddings");
  p.label_emb = std::move(a[0]);
  p.epoch_emb = std::move(a[1]);
  p.fc1_w = std::move(a[k]);
  p.fc1_b = std::move(a[k + 1]);
  p.fc2_w = std::move(a[k + 2]);
  p.fc2_b = std::move(a[k + 3]);
  if (p.fc1_b.size() != c.fc1_width || p.fc2_w.rows() != c.fc1_width || p.fc2_w.cols() != 1 ||
      p.fc2_b.size() != 1) {
    throw ParseError("fc layer shapes are inconsistent");
  }
  return p;
}

void save_mentor(const MentorParams& params, const std::filesystem::path& path) {
  netcore::save_param_file(path, kMentorMagic, params.arrays());
}

MentorParams load_mentor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_mentor(in);
}

}  // namespace mentor::mentornet
