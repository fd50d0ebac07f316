/*
   Copyright 2026 The fdradio Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fdr/sync_est.hpp"
#include "fdr/types.hpp"
#include "fdr/waveform.hpp"

namespace fdr {

/// Alignment between the received stream and the node's own transmission.
/// `counter` is the own transmitted symbol (counted from the start of own
/// frame 0) that overlaps the received symbol being decoded.
struct CancellerState {
  std::int64_t si_start_index = 0;  // first sample of own frame 0 at the receiver
  std::int64_t counter = 0;
  std::int64_t num_tx_symbols = 0;  // own symbols available for rebuild
  CVec intra_node_estimate;         // latest, over the used subcarriers; empty until the first own RS

  void advance() { ++counter; }
};

/// Own transmitted symbol selected by the counter, as used-subcarrier values.
/// Throws AlignmentError when the counter is outside the transmitted frames.
CVec counter_tx_symbol(const CancellerState& state, const FrameConfig& own_cfg,
                       std::span<const ResourceGrid> own_frames);

/// SI[k] = H_intra[k] * X_own[k]; zero while no intra-node estimate exists.
CVec rebuild_si(const CancellerState& state, std::span<const cplx> tx_symbol);

/// Y[k] - SI[k].
CVec cancel_digital(std::span<const cplx> rx_symbol, std::span<const cplx> rebuilt_si);

struct EqualizedSymbol {
  CVec z;
  std::vector<std::uint8_t> erased;  // 1 where |H| fell below the floor
};

/// Z[k] = Y[k] / H[k]; subcarriers with |H[k]| < floor are flagged and set to 0.
EqualizedSymbol zf_equalize(std::span<const cplx> cleaned, std::span<const cplx> h_inter,
                            double floor = 1e-6);

struct DecodedSymbol {
  int index = 0;                   // received symbol, counted from desired frame 0
  std::int64_t tx_symbol = -1;     // own symbol the counter paired with it
  CVec equalized;                  // data cells only, fill order
  std::vector<std::uint8_t> bits;  // data cells * bits per QAM symbol
  std::vector<std::uint8_t> erased;
  double evm_db = 0.0;             // data-aided when truth is known, else blind
  std::size_t bit_errors = 0;
  std::size_t correct_bits = 0;    // bits of cells decoded without error
  std::size_t counted_bits = 0;    // bits of non-erased cells
  bool failed = false;
  std::string error;
};

/// Receiver settings for the observing node.
struct ReceiverConfig {
  FrameConfig own_cfg;   // the observing node; its transmission is the SI
  FrameConfig peer_cfg;  // the desired transmitter
  bool full_duplex = true;
  bool digital_canceller = true;
  // Samples the FFT window starts ahead of the desired symbol body; -1 picks
  // a quarter of the CP so small sync errors stay inside the CP.
  int fft_backoff = -1;
  double erasure_floor = 1e-6;
  std::size_t queue_capacity = 8;

  int backoff() const { return fft_backoff < 0 ? peer_cfg.cp_len / 4 : fft_backoff; }
};

struct ReceiveInputs {
  const SampleStream* rx = nullptr;
  std::int64_t desired_frame_start = 0;
  std::int64_t si_frame_start = 0;
  int num_frames = 1;
  std::span<const ResourceGrid> own_frames;   // own transmitted grids
  std::span<const ResourceGrid> peer_frames;  // desired truth for EVM/BER; may be empty
  // Optional ground-truth components of `rx`, demodulated on the same windows
  // to measure cancellation depth and post-cancellation SINR.
  const SampleStream* si_component = nullptr;
  const SampleStream* desired_component = nullptr;
};

/// Aggregates over all decoded symbols.
struct DecodeResult {
  std::vector<DecodedSymbol> symbols;
  std::size_t data_cells = 0;
  std::size_t erased_cells = 0;
  std::size_t counted_bits = 0;
  std::size_t bit_errors = 0;
  std::size_t correct_bits = 0;
  std::size_t failed_symbols = 0;
  double error_power = 0.0;      // sum |Z - ref|^2
  double reference_power = 0.0;  // sum |ref|^2
  // Instrumented sums over the desired data cells (zero without components).
  double si_before = 0.0;
  double si_after = 0.0;
  double desired_power = 0.0;
  double impairment_after = 0.0;

  double evm_percent() const;
  double ber() const;
  double digital_depth_db() const;
  double post_cancel_sinr_db() const;
};

enum class DecodeMode { Sequential, Pipelined };

/// Per-symbol receive chain over `num_frames` desired frames: demodulate,
/// update the channel estimates, rebuild and subtract the SI, equalize,
/// demap. The pipelined mode runs the stages on separate threads linked by
/// bounded queues and returns the same result as the sequential mode.
DecodeResult decode_frames(const ReceiverConfig& cfg, const ReceiveInputs& in,
                           DecodeMode mode = DecodeMode::Sequential);

}  // namespace fdr
