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

#include "fdr/sync_est.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace fdr {

namespace {

struct Peak {
  std::size_t lag = 0;
  double value = 0.0;
};

Peak argmax_earliest(const std::vector<double>& c) {
  Peak p;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i] > p.value) p = {i, c[i]};
  return p;
}

}  // namespace

std::int64_t frame_start_from_sync(const FrameConfig& cfg, std::int64_t sync_index) {
  return sync_index - static_cast<std::int64_t>(cfg.first_pss_symbol() + 1) * cfg.symbol_len();
}

Synchronizer::Synchronizer(const FrameConfig& cfg, SyncOptions opts)
    : cfg_(cfg), opts_(opts), lpf_(dsp::design_lowpass(dsp::sync_lowpass_spec(cfg.sample_rate_hz))) {
  cfg_.validate();
  if (opts_.si_fit_taps < 1 || opts_.si_fit_precursor < 0 ||
      opts_.si_fit_precursor >= opts_.si_fit_taps)
    throw ConfigError("SI fit needs at least one tap and a precursor shorter than the fit");
  const int rs_sym = cfg_.first_pss_symbol() + 1;
  if (!cfg_.is_rs_symbol(rs_sym)) opts_.fine_timing = false;
  for (int node = 0; node < 2; ++node) {
    const int root = pss_root_for_node(node);
    templates_[root] = pss_template(cfg_, root);
    CVec used(static_cast<std::size_t>(cfg_.used_subcarriers));
    for (const RsCell& c : rs_pattern(cfg_, node).cells)
      if (c.symbol == rs_sym) used[static_cast<std::size_t>(c.used_index)] = c.value;
    rs_templates_[root] = modulate_symbol(cfg_, used);
  }
}

std::int64_t Synchronizer::refine(const SampleStream& x, std::int64_t coarse_index,
                                  int root) const {
  if (!opts_.fine_timing) return coarse_index;
  const CVec& tpl = rs_templates_.at(root);
  std::int64_t best = coarse_index;
  double best_v = -1.0;
  for (int d = -opts_.fine_search; d <= opts_.fine_search; ++d) {
    const std::int64_t n0 = coarse_index + d;
    if (n0 < x.start || n0 + static_cast<std::int64_t>(tpl.size()) > x.end()) continue;
    const cplx* p = x.samples.data() + (n0 - x.start);
    cplx acc{};
    double e = 0.0;
    for (std::size_t i = 0; i < tpl.size(); ++i) {
      acc += p[i] * std::conj(tpl[i]);
      e += std::norm(p[i]);
    }
    const double v = e > 0.0 ? std::norm(acc) / e : 0.0;
    if (v > best_v) {
      best_v = v;
      best = n0;
    }
  }
  return best;
}

const CVec& Synchronizer::pss_template_for(int root) const {
  auto it = templates_.find(root);
  if (it == templates_.end())
    throw ConfigError("no PSS template for root " + std::to_string(root));
  return it->second;
}

std::size_t Synchronizer::search_lags(const SampleStream& rx) const {
  const auto tpl = static_cast<std::size_t>(cfg_.symbol_len());
  if (rx.size() < tpl) return 0;
  // Transmissions start within the first half-frame of the capture, so the
  // first PSS lands within half a frame plus its symbol offset.
  const auto window = static_cast<std::size_t>(cfg_.half_frame_len() +
                                               static_cast<std::int64_t>(cfg_.first_pss_symbol()) *
                                                   cfg_.symbol_len());
  return std::min(window, rx.size() - tpl + 1);
}

std::vector<double> Synchronizer::correlate_filtered(const SampleStream& rx_lpf, std::int64_t from,
                                                     std::size_t span_len, const CVec& tpl,
                                                     std::size_t lags) const {
  const auto off = static_cast<std::size_t>(from - rx_lpf.start);
  std::span<const cplx> x(rx_lpf.samples.data() + off, span_len);
  return dsp::sliding_xcorr(x, tpl, lags);
}

std::vector<double> Synchronizer::correlate(const SampleStream& rx, int root) const {
  const std::size_t lags = search_lags(rx);
  if (lags == 0) return {};
  const SampleStream f = dsp::fir_apply(lpf_, rx);
  return correlate_filtered(f, rx.start, rx.size(), pss_template_for(root), lags);
}

SampleStream Synchronizer::remove_si(const SampleStream& rx, const SampleStream& tx_ref,
                                     std::int64_t si_lag) const {
  const int taps = opts_.si_fit_taps;
  const std::int64_t tx_pss =
      tx_ref.start + static_cast<std::int64_t>(cfg_.first_pss_symbol()) * cfg_.symbol_len();
  // rx[n] ~ sum_a h[a] * tx[n - base - a]
  const std::int64_t base = si_lag - tx_pss - opts_.si_fit_precursor;

  // Transmit samples covering every regressor of every rx sample.
  const std::int64_t t0 = rx.start - base - (taps - 1);
  const std::size_t ulen = rx.size() + static_cast<std::size_t>(taps - 1);
  CVec u(ulen);
  for (std::size_t i = 0; i < ulen; ++i) u[i] = tx_ref.at(t0 + static_cast<std::int64_t>(i));
  // Regressor a of rx sample i is u[i + taps - 1 - a].
  const auto reg = [&](std::size_t i, int a) {
    return u[i + static_cast<std::size_t>(taps - 1 - a)];
  };

  const std::size_t fit_len =
      std::min(rx.size(), search_lags(rx) + static_cast<std::size_t>(cfg_.symbol_len()));

  // Toeplitz autocorrelation of the transmit stream over the fit span.
  std::vector<cplx> acf(static_cast<std::size_t>(taps));
  for (int m = 0; m < taps; ++m) {
    cplx s{};
    for (std::size_t i = 0; i < fit_len; ++i) s += std::conj(reg(i, 0)) * reg(i, m);
    acf[static_cast<std::size_t>(m)] = s;
  }
  const double c0 = acf[0].real();
  if (c0 <= 0.0) return rx;

  Eigen::MatrixXcd r(taps, taps);
  for (int a = 0; a < taps; ++a)
    for (int b = 0; b < taps; ++b)
      r(a, b) = b >= a ? acf[static_cast<std::size_t>(b - a)]
                       : std::conj(acf[static_cast<std::size_t>(a - b)]);
  r += Eigen::MatrixXcd::Identity(taps, taps) * cplx(1e-6 * c0, 0.0);

  Eigen::VectorXcd p(taps);
  for (int a = 0; a < taps; ++a) {
    cplx s{};
    for (std::size_t i = 0; i < fit_len; ++i) s += std::conj(reg(i, a)) * rx.samples[i];
    p(a) = s;
  }
  const Eigen::VectorXcd h = r.ldlt().solve(p);

  SampleStream out = rx;
  for (std::size_t i = 0; i < out.size(); ++i) {
    cplx s{};
    for (int a = 0; a < taps; ++a) s += h(a) * reg(i, a);
    out.samples[i] -= s;
  }
  return out;
}

SyncResult Synchronizer::run(const SampleStream& rx, int own_root, int peer_root,
                             const SampleStream* tx_ref) const {
  const std::size_t lags = search_lags(rx);
  if (lags == 0) throw SyncError("capture shorter than one PSS symbol", 0.0, 0.0);

  const SampleStream f = dsp::fir_apply(lpf_, rx);
  const Peak si = argmax_earliest(
      correlate_filtered(f, rx.start, rx.size(), pss_template_for(own_root), lags));

  SyncResult res;
  res.si_peak = si.value;
  res.si_detected = si.value >= opts_.detection_threshold;
  const std::int64_t s = cfg_.symbol_len();
  res.si_start_index = refine(rx, rx.start + static_cast<std::int64_t>(si.lag) + s, own_root);

  Peak desired;
  if (tx_ref != nullptr && !tx_ref->empty() && opts_.suppress_si && res.si_detected) {
    const SampleStream cleaned = remove_si(rx, *tx_ref, res.si_start_index - s);
    const SampleStream fc = dsp::fir_apply(lpf_, cleaned);
    desired = argmax_earliest(
        correlate_filtered(fc, rx.start, rx.size(), pss_template_for(peer_root), lags));
    res.desired_start_index =
        refine(cleaned, rx.start + static_cast<std::int64_t>(desired.lag) + s, peer_root);
    res.si_suppressed = true;
  } else {
    desired = argmax_earliest(
        correlate_filtered(f, rx.start, rx.size(), pss_template_for(peer_root), lags));
    res.desired_start_index =
        refine(rx, rx.start + static_cast<std::int64_t>(desired.lag) + s, peer_root);
  }
  res.desired_peak = desired.value;
  res.desired_detected = desired.value >= opts_.detection_threshold;

  if (!res.desired_detected && !res.si_detected)
    throw SyncError("no PSS above the detection threshold", res.desired_peak, res.si_peak);
  return res;
}

SyncResult synchronize(const FrameConfig& cfg, const SampleStream& rx, int own_root,
                       int peer_root, const SampleStream* tx_ref, SyncOptions opts) {
  return Synchronizer(cfg, opts).run(rx, own_root, peer_root, tx_ref);
}

// --- Channel estimation -----------------------------------------------------

std::vector<RsSymbolEstimate> ls_estimate_rs(const FrameConfig& cfg, const ResourceGrid& grid_rx,
                                             const RsPattern& pattern,
                                             std::span<const cplx> known_rs) {
  if (known_rs.size() != pattern.cells.size())
    throw EstimationError("known RS count does not match the pattern");
  std::vector<RsSymbolEstimate> out;
  for (std::size_t i = 0; i < pattern.cells.size(); ++i) {
    const RsCell& c = pattern.cells[i];
    if (c.symbol >= grid_rx.num_symbols()) break;
    if (out.empty() || out.back().symbol != c.symbol) out.push_back({c.symbol, {}, {}});
    out.back().used_index.push_back(c.used_index);
    out.back().h.push_back(grid_rx.value(c.symbol, cfg.subcarrier_of(c.used_index)) / known_rs[i]);
  }
  return out;
}

std::vector<RsSymbolEstimate> ls_estimate_rs(const FrameConfig& cfg, const ResourceGrid& grid_rx,
                                             const RsPattern& pattern) {
  CVec known(pattern.cells.size());
  for (std::size_t i = 0; i < known.size(); ++i) known[i] = pattern.cells[i].value;
  return ls_estimate_rs(cfg, grid_rx, pattern, known);
}

RsSymbolEstimate ls_estimate_symbol(const RsPattern& pattern, int symbol,
                                    std::span<const cplx> rx_used) {
  RsSymbolEstimate est{symbol, {}, {}};
  auto lo = std::lower_bound(pattern.cells.begin(), pattern.cells.end(), symbol,
                             [](const RsCell& c, int s) { return c.symbol < s; });
  for (auto it = lo; it != pattern.cells.end() && it->symbol == symbol; ++it) {
    est.used_index.push_back(it->used_index);
    est.h.push_back(rx_used[static_cast<std::size_t>(it->used_index)] / it->value);
  }
  return est;
}

CVec interpolate_linear(const RsSymbolEstimate& est, const FrameConfig& cfg,
                        double timing_offset) {
  const std::size_t n_rs = est.h.size();
  if (n_rs < 2 || est.used_index.size() != n_rs)
    throw EstimationError("linear interpolation needs at least two RS cells, got " +
                          std::to_string(n_rs));
  const double w = 2.0 * kPi * timing_offset / cfg.fft_size;
  std::vector<double> pos(n_rs);
  CVec h(n_rs);
  for (std::size_t i = 0; i < n_rs; ++i) {
    const int k = cfg.subcarrier_of(est.used_index[i]);
    pos[i] = k;
    h[i] = est.h[i] * std::polar(1.0, w * k);
  }

  CVec out(static_cast<std::size_t>(cfg.used_subcarriers));
  std::size_t seg = 0;
  for (int ui = 0; ui < cfg.used_subcarriers; ++ui) {
    const int k = cfg.subcarrier_of(ui);
    cplx v;
    if (k <= pos.front()) {
      v = h.front();
    } else if (k >= pos.back()) {
      v = h.back();
    } else {
      while (pos[seg + 1] < k) ++seg;
      const double t = (k - pos[seg]) / (pos[seg + 1] - pos[seg]);
      v = h[seg] + t * (h[seg + 1] - h[seg]);
    }
    out[static_cast<std::size_t>(ui)] = v * std::polar(1.0, -w * k);
  }
  return out;
}

const CVec& ChannelEstimate::for_symbol(int symbol) const {
  if (h.empty()) throw EstimationError("channel estimate holds no RS symbols");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < rs_symbols.size(); ++i)
    if (rs_symbols[i] <= symbol) idx = i;
  return h[idx];
}

ChannelEstimate build_estimate(const std::vector<RsSymbolEstimate>& sparse, const FrameConfig& cfg,
                               EstimateKind kind, double timing_offset) {
  ChannelEstimate e;
  e.kind = kind;
  for (const auto& s : sparse) {
    e.rs_symbols.push_back(s.symbol);
    e.h.push_back(interpolate_linear(s, cfg, timing_offset));
  }
  return e;
}

std::pair<ChannelEstimate, ChannelEstimate> estimate_both(const FrameConfig& cfg,
                                                          const ResourceGrid& grid_rx,
                                                          double inter_timing_offset,
                                                          double intra_timing_offset) {
  const RsPattern own = rs_pattern(cfg, cfg.node_id);
  const RsPattern peer = rs_pattern(cfg, 1 - cfg.node_id);
  return {build_estimate(ls_estimate_rs(cfg, grid_rx, peer), cfg, EstimateKind::InterNode,
                         inter_timing_offset),
          build_estimate(ls_estimate_rs(cfg, grid_rx, own), cfg, EstimateKind::IntraNode,
                         intra_timing_offset)};
}

}  // namespace fdr
