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

#include "fdr/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "fdr/cancel_decode.hpp"
#include "fdr/dsp.hpp"
#include "fdr/frontend.hpp"
#include "fdr/harness.hpp"
#include "fdr/metrics.hpp"
#include "fdr/sync_est.hpp"
#include "fdr/waveform.hpp"

namespace fdr {

namespace {

std::string fmt(const char* f, double v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

CheckResult parseval() {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  CVec x(2048);
  for (auto& v : x) v = {n(rng), n(rng)};
  const CVec X = dsp::dft(x);
  const double et = dsp::energy(x);
  const double ef = dsp::energy(X) / 2048.0;
  const double rel = std::abs(et - ef) / et;
  return {"parseval", rel < 1e-9, fmt("relative energy mismatch %.2e", rel)};
}

CheckResult ofdm_round_trip() {
  const FrameConfig cfg = FrameConfig::make(Profile::FullDuplex20MHz, 16, 0);
  const ResourceGrid g = build_frame(cfg, prbs_bits(5, payload_bits_per_frame(cfg)));
  const ResourceGrid back = ofdm_demodulate(cfg, ofdm_modulate(cfg, g), 0);
  double worst = 0.0;
  for (int s = 0; s < cfg.symbols_per_frame(); ++s)
    for (int i = 0; i < cfg.used_subcarriers; ++i) {
      const int k = cfg.subcarrier_of(i);
      worst = std::max(worst, std::abs(back.value(s, k) - g.value(s, k)));
    }
  return {"ofdm_round_trip", worst < 1e-9, fmt("max cell error %.2e", worst)};
}

CheckResult ls_exactness() {
  const FrameConfig cfg = FrameConfig::make(Profile::FullDuplex20MHz, 4, 0);
  const ChannelRealization ch = ChannelRealization::from_db({{0, 0.0, 20.0}, {7, -6.0, -75.0}});
  ResourceGrid g = build_frame(cfg, prbs_bits(9, payload_bits_per_frame(cfg)));
  for (int s = 0; s < g.num_symbols(); ++s)
    for (int i = 0; i < cfg.used_subcarriers; ++i) {
      const int k = cfg.subcarrier_of(i);
      g.set_value(s, k, g.value(s, k) * ch.frequency_response(k, cfg.fft_size));
    }
  double worst = 0.0;
  for (const auto& est : ls_estimate_rs(cfg, g, rs_pattern(cfg, 0)))
    for (std::size_t j = 0; j < est.h.size(); ++j) {
      const cplx h = ch.frequency_response(cfg.subcarrier_of(est.used_index[j]), cfg.fft_size);
      worst = std::max(worst, std::abs(est.h[j] - h));
    }
  return {"ls_exactness", worst < 1e-12, fmt("max RS-cell error %.2e", worst)};
}

CheckResult interpolator_affine() {
  const FrameConfig cfg = FrameConfig::make(Profile::FullDuplex20MHz, 4, 0);
  const cplx a{0.3, -1.1}, b{0.002, 0.0015};
  double worst = 0.0;
  for (int node = 0; node < 2; ++node) {
    const RsPattern p = rs_pattern(cfg, node);
    RsSymbolEstimate est{0, {}, {}};
    for (const auto& c : p.cells)
      if (c.symbol == 0) {
        est.used_index.push_back(c.used_index);
        est.h.push_back(a + b * static_cast<double>(cfg.subcarrier_of(c.used_index)));
      }
    const CVec h = interpolate_linear(est, cfg);
    const int lo = cfg.subcarrier_of(est.used_index.front());
    const int hi = cfg.subcarrier_of(est.used_index.back());
    for (int i = 0; i < cfg.used_subcarriers; ++i) {
      const int k = cfg.subcarrier_of(i);
      if (k < lo || k > hi) continue;
      worst = std::max(worst, std::abs(h[static_cast<std::size_t>(i)] - (a + b * static_cast<double>(k))));
    }
  }
  return {"interpolator_affine", worst < 1e-12, fmt("max interior error %.2e", worst)};
}

CheckResult subtraction_linearity() {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  CVec y(1200), s(1200);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = {n(rng), n(rng)};
    s[i] = {n(rng), n(rng)};
  }
  const CVec c = cancel_digital(y, s);
  double worst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double scale = std::max({std::abs(y[i]), std::abs(s[i]), 1e-300});
    worst = std::max(worst, std::abs(c[i] + s[i] - y[i]) / scale);
  }
  return {"subtraction_linearity", worst <= 4.0 * std::numeric_limits<double>::epsilon(),
          fmt("max relative round-off %.2e", worst)};
}

CheckResult cp_misalignment() {
  double worst_inside = kDepthCapDb, best_outside = 0.0;
  for (int d : {0, 1, 37, 256, 511, 512}) worst_inside = std::min(worst_inside, cp_misalignment_depth_db(d));
  for (int d : {513, 600, 1024}) best_outside = std::max(best_outside, cp_misalignment_depth_db(d));
  char buf[160];
  std::snprintf(buf, sizeof buf, "worst depth for delay <= 512: %.1f dB; best for delay > 512: %.1f dB",
                worst_inside, best_outside);
  return {"cp_misalignment", worst_inside > 100.0 && best_outside < 40.0, buf};
}

CheckResult lpf_response() {
  const dsp::FirFilter f = dsp::design_lowpass(dsp::sync_lowpass_spec(30.72e6));
  const dsp::ResponseCheck r = dsp::measure_response(f);
  char buf[160];
  std::snprintf(buf, sizeof buf, "stopband %.2f dB beyond %.3f MHz, ripple %.4f dB, %zu taps",
                r.max_stopband_gain_db, f.stopband_edge_hz / 1e6, r.passband_ripple_db, f.taps.size());
  const bool ok = r.max_stopband_gain_db <= -50.0 && r.passband_ripple_db <= 0.1 &&
                  std::abs(f.passband_edge_hz - 1.4e6) < 1.0;
  return {"lpf_response", ok, buf};
}

CheckResult reproducibility() {
  Scenario s;
  s.id = "repro";
  s.profile = Profile::Fdd10MHz;
  s.qam_down = 16;
  s.qam_up = 16;
  s.snr_db = 18.0;
  s.seed = 99;
  s.both_directions = false;
  SuiteConfig suite;
  suite.scenarios = {s};
  const std::string a = run_suite(suite).csv;
  const std::string b = run_suite(suite).csv;
  return {"seeded_reproducibility", a == b && !a.empty(), a == b ? "identical CSV bytes" : "CSV differs"};
}

}  // namespace

double cp_misalignment_depth_db(int delay) {
  const FrameConfig cfg = FrameConfig::make(Profile::FullDuplex20MHz, 4, 0);
  const ResourceGrid g = build_frame(cfg, prbs_bits(17, payload_bits_per_frame(cfg)));
  const SampleStream si = scaled(delayed(ofdm_modulate(cfg, g), delay), std::polar(0.5, 0.5));
  const RsPattern own = rs_pattern(cfg, 0);
  const std::int64_t s = cfg.symbol_len();

  CancellerState st;
  st.num_tx_symbols = cfg.symbols_per_frame();
  const std::vector<ResourceGrid> frames{g};
  double before = 0.0, after = 0.0;
  for (int t = 1; t < cfg.symbols_per_frame(); ++t) {
    const std::int64_t w = t * s + cfg.cp_len;
    const CVec y = demodulate_symbol(cfg, si, w);
    if (cfg.is_rs_symbol(t))
      st.intra_node_estimate = interpolate_linear(ls_estimate_symbol(own, t, y), cfg, delay);
    if (st.intra_node_estimate.empty()) continue;
    st.counter = t;
    const CVec r = cancel_digital(y, rebuild_si(st, counter_tx_symbol(st, cfg, frames)));
    before += dsp::energy(y);
    after += dsp::energy(r);
  }
  return report_depth_db(cancellation_depth_db(before, after));
}

std::vector<CheckResult> run_selftest() {
  return {parseval(),           ofdm_round_trip(), ls_exactness(),  interpolator_affine(),
          subtraction_linearity(), cp_misalignment(), lpf_response(), reproducibility()};
}

}  // namespace fdr
