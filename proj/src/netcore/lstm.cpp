#include "mentor/netcore/lstm.hpp"

#include <cmath>

#include "mentor/error.hpp"

namespace mentor::netcore {

namespace {

constexpr Activation kGateActivation[4] = {Activation::sigmoid, Activation::sigmoid,
                                           Activation::sigmoid, Activation::tanh};

void add_into(RealArray& dst, const RealArray& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

LstmCell LstmCell::zeros(std::size_t input_size, std::size_t hidden_size) {
  LstmCell cell{input_size, hidden_size, {}};
  for (std::size_t g = 0; g < 4; ++g) {
    cell.params[2 * g] = RealArray::matrix(input_size + hidden_size, hidden_size);
    cell.params[2 * g + 1] = RealArray::vector(hidden_size);
  }
  return cell;
}

LstmCell LstmCell::init(std::size_t input_size, std::size_t hidden_size, Rng& rng) {
  LstmCell cell = zeros(input_size, hidden_size);
  for (std::size_t g = 0; g < 4; ++g) {
    cell.params[2 * g] = glorot_uniform(input_size + hidden_size, hidden_size, rng);
  }
  return cell;
}

LstmState lstm_cell_step(const RealArray& x, const LstmState& prev, const LstmCell& cell,
                         LstmStepCache* cache) {
  const std::size_t b = x.rows();
  if (x.rank() != 2 || x.cols() != cell.input_size) {
    throw DimensionError("lstm_cell_step: input " + shape_string(x.shape()) + ", cell input size " +
                         std::to_string(cell.input_size));
  }
  require_shape(prev.h, {b, cell.hidden_size}, "lstm_cell_step h_prev");
  require_shape(prev.c, {b, cell.hidden_size}, "lstm_cell_step c_prev");

  const RealArray* parts[] = {&x, &prev.h};
  const RealArray xh = concat_cols(parts);

  std::array<RealArray, 4> gate;
  for (std::size_t g = 0; g < 4; ++g) {
    gate[g] = dense_forward(xh, cell.params[2 * g], cell.params[2 * g + 1], kGateActivation[g],
                            cache ? &cache->gates[g] : nullptr);
  }
  const RealArray& in = gate[0];
  const RealArray& forget = gate[1];
  const RealArray& out = gate[2];
  const RealArray& cand = gate[3];

  LstmState next{RealArray::matrix(b, cell.hidden_size), RealArray::matrix(b, cell.hidden_size)};
  RealArray tanh_c = RealArray::matrix(b, cell.hidden_size);
  for (std::size_t i = 0; i < next.c.size(); ++i) {
    next.c[i] = forget[i] * prev.c[i] + in[i] * cand[i];
    tanh_c[i] = std::tanh(next.c[i]);
    next.h[i] = out[i] * tanh_c[i];
  }
  if (cache != nullptr) {
    cache->valid = true;
    cache->c_prev = prev.c;
    cache->tanh_c = std::move(tanh_c);
  }
  return next;
}

LstmStepGrads lstm_cell_backward(const LstmStepCache& cache, const LstmCell& cell,
                                 const RealArray& dh, const RealArray& dc) {
  if (!cache.valid) throw StateError("lstm_cell_backward called without a cached step");
  const RealArray& in = cache.gates[0].output;
  const RealArray& forget = cache.gates[1].output;
  const RealArray& out = cache.gates[2].output;
  const RealArray& cand = cache.gates[3].output;
  if (!dh.same_shape(in) || !dc.same_shape(in)) {
    throw DimensionError("lstm_cell_backward: upstream shapes do not match the cached step");
  }

  const std::size_t n = in.size();
  std::array<RealArray, 4> dgate;
  for (auto& d : dgate) d = RealArray(in.shape());
  LstmStepGrads g;
  g.c_prev = RealArray(in.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double tc = cache.tanh_c[i];
    const double dc_total = dc[i] + dh[i] * out[i] * (1.0 - tc * tc);
    dgate[0][i] = dc_total * cand[i];
    dgate[1][i] = dc_total * cache.c_prev[i];
    dgate[2][i] = dh[i] * tc;
    dgate[3][i] = dc_total * in[i];
    g.c_prev[i] = dc_total * forget[i];
  }

  RealArray dxh;
  for (std::size_t k = 0; k < 4; ++k) {
    LayerGrads lg = dense_backward(cache.gates[k], dgate[k]);
    g.params[2 * k] = std::move(lg.params[0]);
    g.params[2 * k + 1] = std::move(lg.params[1]);
    if (k == 0) {
      dxh = std::move(lg.input);
    } else {
      add_into(dxh, lg.input);
    }
  }
  g.x = slice_cols(dxh, 0, cell.input_size);
  g.h_prev = slice_cols(dxh, cell.input_size, cell.hidden_size);
  return g;
}

RealArray bilstm_encode(const std::vector<RealArray>& sequence, const LstmCell& fwd,
                        const LstmCell& bwd, BiLstmCache* cache) {
  if (sequence.empty()) throw InputError("bilstm_encode: empty sequence");
  const std::size_t b = sequence.front().rows();
  const std::size_t steps = sequence.size();
  if (cache != nullptr) {
    cache->valid = true;
    cache->forward.assign(steps, {});
    cache->backward.assign(steps, {});
  }

  LstmState fs{RealArray::matrix(b, fwd.hidden_size), RealArray::matrix(b, fwd.hidden_size)};
  for (std::size_t t = 0; t < steps; ++t) {
    fs = lstm_cell_step(sequence[t], fs, fwd, cache ? &cache->forward[t] : nullptr);
  }
  LstmState bs{RealArray::matrix(b, bwd.hidden_size), RealArray::matrix(b, bwd.hidden_size)};
  for (std::size_t k = 0; k < steps; ++k) {
    bs = lstm_cell_step(sequence[steps - 1 - k], bs, bwd, cache ? &cache->backward[k] : nullptr);
  }
  const RealArray* parts[] = {&fs.h, &bs.h};
  return concat_cols(parts);
}

BiLstmGrads bilstm_backward(const BiLstmCache& cache, const LstmCell& fwd, const LstmCell& bwd,
                            const RealArray& upstream) {
  if (!cache.valid || cache.forward.empty()) {
    throw StateError("bilstm_backward called without a cached forward pass");
  }
  const std::size_t steps = cache.forward.size();
  const std::size_t b = upstream.rows();
  require_shape(upstream, {b, fwd.hidden_size + bwd.hidden_size}, "bilstm_backward upstream");

  BiLstmGrads g;
  g.inputs.resize(steps);
  auto run = [&](const std::vector<LstmStepCache>& caches, const LstmCell& cell, RealArray dh,
                 std::array<RealArray, LstmCell::kParamCount>& acc, bool reversed) {
    RealArray dc = RealArray::matrix(b, cell.hidden_size);
    for (std::size_t k = steps; k-- > 0;) {
      LstmStepGrads sg = lstm_cell_backward(caches[k], cell, dh, dc);
      for (std::size_t p = 0; p < LstmCell::kParamCount; ++p) {
        if (acc[p].empty()) {
          acc[p] = std::move(sg.params[p]);
        } else {
          add_into(acc[p], sg.params[p]);
        }
      }
      const std::size_t t = reversed ? steps - 1 - k : k;
      if (g.inputs[t].empty()) {
        g.inputs[t] = std::move(sg.x);
      } else {
        add_into(g.inputs[t], sg.x);
      }
      dh = std::move(sg.h_prev);
      dc = std::move(sg.c_prev);
    }
  };
  run(cache.forward, fwd, slice_cols(upstream, 0, fwd.hidden_size), g.fwd, false);
  run(cache.backward, bwd, slice_cols(upstream, fwd.hidden_size, bwd.hidden_size), g.bwd, true);
  return g;
}

}  // namespace mentor::netcore
