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
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "fdr/dsp.hpp"
#include "fdr/types.hpp"
#include "fdr/waveform.hpp"

namespace fdr {

struct SyncOptions {
  // Normalized correlation needed to declare a PSS detection.
  double detection_threshold = 0.08;
  // Remove the self-interference (fitted against the known transmit stream)
  // before searching for the peer's PSS.
  bool suppress_si = true;
  int si_fit_taps = 64;
  int si_fit_precursor = 16;
  // Refine each PSS lag against the wideband RS symbol that follows it,
  // searching +/- fine_search samples.
  bool fine_timing = true;
  int fine_search = 24;
};

/// Indices point at the first sample (CP start) of the OFDM symbol that
/// follows the detected PSS symbol.
struct SyncResult {
  std::int64_t desired_start_index = 0;
  std::int64_t si_start_index = 0;
  double desired_peak = 0.0;
  double si_peak = 0.0;
  bool desired_detected = false;
  bool si_detected = false;
  bool si_suppressed = false;
};

/// Frame start implied by a sync index (the PSS sits in symbol 5 of the frame).
std::int64_t frame_start_from_sync(const FrameConfig& cfg, std::int64_t sync_index);

/// PSS timing for both links: low-pass the capture, correlate against the
/// time-domain PSS symbol of each root, take the earliest maximum within one
/// half-frame of lags. The narrowband PSS peak is a few samples wide at low
/// SNR, so the lag is then refined on the RS symbol right after the PSS.
/// Holds the designed filter and templates so repeated captures reuse them.
class Synchronizer {
 public:
  explicit Synchronizer(const FrameConfig& cfg, SyncOptions opts = {});

  /// `tx_ref` is the node's own transmit stream (frame 0 starting at its
  /// start index); when given, the fitted SI is removed before the desired
  /// correlation. Throws SyncError when neither PSS clears the threshold.
  SyncResult run(const SampleStream& rx, int own_root, int peer_root,
                 const SampleStream* tx_ref = nullptr) const;

  /// Normalized correlation of the low-passed capture with one root's
  /// template, indexed by lag from rx.start.
  std::vector<double> correlate(const SampleStream& rx, int root) const;

  const dsp::FirFilter& lowpass() const { return lpf_; }
  const CVec& pss_template_for(int root) const;
  std::size_t search_lags(const SampleStream& rx) const;

 private:
  SampleStream remove_si(const SampleStream& rx, const SampleStream& tx_ref,
                         std::int64_t si_lag) const;
  std::int64_t refine(const SampleStream& x, std::int64_t coarse_index, int root) const;
  std::vector<double> correlate_filtered(const SampleStream& rx_lpf, std::int64_t from,
                                         std::size_t span_len, const CVec& tpl,
                                         std::size_t lags) const;

  FrameConfig cfg_;
  SyncOptions opts_;
  dsp::FirFilter lpf_;
  std::map<int, CVec> templates_;
  std::map<int, CVec> rs_templates_;  // RS-only symbol after the PSS, by root
};

SyncResult synchronize(const FrameConfig& cfg, const SampleStream& rx, int own_root,
                       int peer_root, const SampleStream* tx_ref = nullptr,
                       SyncOptions opts = {});

// --- Channel estimation -----------------------------------------------------

/// LS estimates at the RS cells of one symbol.
struct RsSymbolEstimate {
  int symbol = 0;
  std::vector<int> used_index;
  CVec h;
};

/// H = Y / X at every RS cell of `pattern`, grouped by symbol. `known_rs`
/// holds the transmitted RS values in pattern cell order.
std::vector<RsSymbolEstimate> ls_estimate_rs(const FrameConfig& cfg, const ResourceGrid& grid_rx,
                                             const RsPattern& pattern,
                                             std::span<const cplx> known_rs);
std::vector<RsSymbolEstimate> ls_estimate_rs(const FrameConfig& cfg, const ResourceGrid& grid_rx,
                                             const RsPattern& pattern);

/// LS estimates for one received symbol given as used-subcarrier values.
RsSymbolEstimate ls_estimate_symbol(const RsPattern& pattern, int symbol,
                                    std::span<const cplx> rx_used);

/// Linear interpolation in frequency over the used subcarriers, constant
/// extension past the outermost RS. `timing_offset` (samples) is the known
/// lead of the FFT window over the signal's symbol body; its phase ramp is
/// removed before interpolating and restored afterwards.
/// Throws EstimationError with fewer than two RS cells.
CVec interpolate_linear(const RsSymbolEstimate& est, const FrameConfig& cfg,
                        double timing_offset = 0.0);

enum class EstimateKind { InterNode, IntraNode };

/// Per-RS-symbol channel over all used subcarriers, held constant until the
/// next RS symbol.
struct ChannelEstimate {
  EstimateKind kind = EstimateKind::InterNode;
  std::vector<int> rs_symbols;
  std::vector<CVec> h;

  const CVec& for_symbol(int symbol) const;
  bool empty() const { return h.empty(); }
};

ChannelEstimate build_estimate(const std::vector<RsSymbolEstimate>& sparse, const FrameConfig& cfg,
                               EstimateKind kind, double timing_offset = 0.0);

/// Inter-node estimate from the peer's RS pattern and intra-node estimate
/// from the node's own pattern, both from the same received grid.
std::pair<ChannelEstimate, ChannelEstimate> estimate_both(const FrameConfig& cfg,
                                                          const ResourceGrid& grid_rx,
                                                          double inter_timing_offset = 0.0,
                                                          double intra_timing_offset = 0.0);

}  // namespace fdr
