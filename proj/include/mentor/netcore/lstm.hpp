#pragma once

#include <array>
#include <vector>

#include "mentor/netcore/layers.hpp"

namespace mentor::netcore {

/// Standard (non-peephole) LSTM cell. Each gate is a dense map of [x, h_prev]:
/// params = {W_i, b_i, W_f, b_f, W_o, b_o, W_g, b_g}, W_* is
/// [(input + hidden) x hidden] and b_* is [hidden].
struct LstmCell {
  static constexpr std::size_t kParamCount = 8;
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::array<RealArray, kParamCount> params;

  static LstmCell zeros(std::size_t input_size, std::size_t hidden_size);
  static LstmCell init(std::size_t input_size, std::size_t hidden_size, Rng& rng);
};

struct LstmState {
  RealArray h;  // [b x hidden]
  RealArray c;  // [b x hidden]
};

struct LstmStepCache {
  bool valid = false;
  std::array<DenseCache, 4> gates;  // i, f, o, g
  RealArray c_prev;
  RealArray tanh_c;
};

LstmState lstm_cell_step(const RealArray& x, const LstmState& prev, const LstmCell& cell,
                         LstmStepCache* cache = nullptr);

struct LstmStepGrads {
  std::array<RealArray, LstmCell::kParamCount> params;
  RealArray x;
  RealArray h_prev;
  RealArray c_prev;
};

/// Backward through one step given d(loss)/d(h_t) and d(loss)/d(c_t).
LstmStepGrads lstm_cell_backward(const LstmStepCache& cache, const LstmCell& cell,
                                 const RealArray& dh, const RealArray& dc);

struct BiLstmCache {
  bool valid = false;
  std::vector<LstmStepCache> forward;   // in time order
  std::vector<LstmStepCache> backward;  // in processing order (t = T-1 ... 0)
};

/// Runs `fwd` over t = 0..T-1 and `bwd` over t = T-1..0 from zero state and
/// returns [h_fwd_final | h_bwd_final], shape [b x 2*hidden].
RealArray bilstm_encode(const std::vector<RealArray>& sequence, const LstmCell& fwd,
                        const LstmCell& bwd, BiLstmCache* cache = nullptr);

struct BiLstmGrads {
  std::array<RealArray, LstmCell::kParamCount> fwd;
  std::array<RealArray, LstmCell::kParamCount> bwd;
  std::vector<RealArray> inputs;  // per time step
};

BiLstmGrads bilstm_backward(const BiLstmCache& cache, const LstmCell& fwd, const LstmCell& bwd,
                            const RealArray& upstream);

}  // namespace mentor::netcore
