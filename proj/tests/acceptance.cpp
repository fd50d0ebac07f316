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

// Acceptance run: one PASS/FAIL line per criterion, exit code 0 only when
// every criterion passes.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fdr/dsp.hpp"
#include "fdr/frontend.hpp"
#include "fdr/harness.hpp"
#include "fdr/metrics.hpp"
#include "fdr/selftest.hpp"
#include "fdr/sync_est.hpp"
#include "fdr/waveform.hpp"

using namespace fdr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// 4-QAM own transmission, 64-QAM desired, two-path coupling with a dominant
// direct path, tuned active tap, 16/14-bit converters.
Scenario constellation_scenario(bool digital, int frames, std::uint64_t seed) {
  Scenario s;
  s.id = digital ? "constellation_digital_on" : "constellation_digital_off";
  s.qam_down = 4;
  s.qam_up = 64;
  s.snr_db = 32.1;
  s.si_tx_db = 67.0;
  s.si_channel = {{0.0, 0.0, 0.0}, {3.0, -20.0, 40.0}};
  s.impairments = ImpairmentConfig::hardware_default();
  s.analog.passive_isolation_db = 42.0;
  s.analog.active_enabled = true;
  s.digital_canceller = digital;
  s.both_directions = false;
  s.num_frames = frames;
  s.seed = seed;
  return s;
}

Outcome check_analog_cancellation() {
  const LinkReport r = run_scenario(constellation_scenario(true, 1, 1));
  const double active = r.analog_total_db - r.analog_passive_db;
  const bool pass = r.ok && r.analog_total_db >= 60.0 && std::abs(r.analog_passive_db - 42.0) <= 1.0 &&
                    active >= 18.0;
  return {pass, fmt("passive %.2f dB, active %.2f dB, total %.2f dB (need total >= 60, passive 42 +/- 1, "
                    "active >= 18)",
                    r.analog_passive_db, active, r.analog_total_db)};
}

Outcome check_digital_depth() {
  double lo = 1e9, hi = -1e9, sum = 0.0;
  int bad = 0;
  double analog = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Scenario s = constellation_scenario(true, 1, seed);
    s.id = "digital_depth";
    s.noise_below_si_db = 50.0;
    const LinkReport r = run_scenario(s);
    if (!r.ok) {
      ++bad;
      continue;
    }
    lo = std::min(lo, r.digital_db);
    hi = std::max(hi, r.digital_db);
    sum += r.digital_db;
    analog += r.analog_total_db;
  }
  const bool pass = bad == 0 && lo >= 43.0 && hi <= 48.0;
  return {pass, fmt("20 seeds: digital depth min %.2f / mean %.2f / max %.2f dB, residual SI %.1f dB below Tx, "
                    "%d failed runs (need all in [43, 48])",
                    lo, sum / std::max(1, 20 - bad), hi, analog / std::max(1, 20 - bad), bad)};
}

Outcome check_constellation() {
  const LinkReport off = run_scenario(constellation_scenario(false, 10, 7));
  const LinkReport on = run_scenario(constellation_scenario(true, 10, 7));
  const bool pass = off.ok && on.ok && off.evm_percent > 15.0 && on.evm_percent < 4.0 && on.ber < 1e-3;
  return {pass, fmt("10 frames: canceller off EVM %.2f%% (BER %.3g); on EVM %.3f%%, BER %.3g, "
                    "post-cancel SINR %.1f dB (need off > 15%%, on < 4%% and BER < 1e-3)",
                    off.evm_percent, off.ber, on.evm_percent, on.ber, on.post_cancel_sinr_db)};
}

Outcome check_throughput_ratio() {
  bool pass = true;
  std::string detail;
  for (int q : {4, 16, 64}) {
    Scenario fd;
    fd.id = "throughput_fd";
    fd.qam_down = q;
    fd.qam_up = q;
    fd.snr_db = 40.0;
    fd.si_tx_db = 67.0;
    fd.si_channel = {{0.0, 0.0, 0.0}, {3.0, -20.0, 40.0}};
    fd.impairments = ImpairmentConfig::hardware_default();
    fd.analog.active_enabled = true;
    fd.both_directions = true;
    fd.seed = 40 + static_cast<std::uint64_t>(q);
    Scenario fdd = fd;
    fdd.id = "throughput_fdd";
    fdd.profile = Profile::Fdd10MHz;

    const LinkReport a = run_scenario(fd);
    const LinkReport b = run_scenario(fdd);
    const double ratio = b.throughput_bps > 0.0 ? a.throughput_bps / b.throughput_bps : 0.0;
    const double oracle = capacity_throughput_ratio(q);
    const double lo = q == 64 ? 1.84 : 1.85;
    const bool ok = a.ok && b.ok && ratio >= lo && ratio <= 2.0 && std::abs(ratio - oracle) <= 0.01;
    pass = pass && ok;
    detail += fmt("%s%d-QAM %.1f/%.1f Mbps = %.4f (cells %.4f)", detail.empty() ? "" : "; ", q,
                  a.throughput_bps / 1e6, b.throughput_bps / 1e6, ratio, oracle);
  }
  return {pass, detail + " (need [1.85, 2.00], [1.84, 2.00] for 64-QAM, within 0.01 of cells)"};
}

Outcome check_sync_robustness() {
  const FrameConfig c0 = FrameConfig::make(Profile::FullDuplex20MHz, 4, 0);
  const FrameConfig c1 = FrameConfig::make(Profile::FullDuplex20MHz, 64, 1);
  const Synchronizer sync(c0);
  const std::int64_t s6 = 6 * static_cast<std::int64_t>(c0.symbol_len());
  std::mt19937_64 rng(2016);
  std::uniform_int_distribution<std::int64_t> offset(0, c0.half_frame_len() - 1);  // [0, 5 ms)

  auto capture = [&](std::int64_t d_des, const SampleStream& des, std::int64_t d_si, const SampleStream* si,
                     double si_db, double snr_db, std::uint64_t seed) {
    SampleStream rx(0, CVec(static_cast<std::size_t>(c0.frame_len() + c0.half_frame_len())));
    SampleStream a = des;
    a.start = d_des;
    accumulate(rx, a);
    if (si) {
      SampleStream b = *si;
      b.start = d_si;
      accumulate(rx, b, dsp::amplitude_from_db(si_db));
    }
    rx.samples.resize(static_cast<std::size_t>(c0.frame_len() + c0.half_frame_len()));
    add_noise(rx, 1.0 / (c0.fft_size * dsp::from_db(snr_db)), seed);
    return rx;
  };

  int exact = 0;
  constexpr int kTrials = 200;
  for (int t = 0; t < kTrials; ++t) {
    const SampleStream des =
        ofdm_modulate(c1, build_frame(c1, prbs_bits(5000 + static_cast<std::uint64_t>(t), payload_bits_per_frame(c1))));
    const std::int64_t d = offset(rng);
    const SampleStream rx = capture(d, des, 0, nullptr, 0.0, 0.0, 9000 + static_cast<std::uint64_t>(t));
    try {
      const SyncResult r = sync.run(rx, 25, 29);
      exact += r.desired_detected && r.desired_start_index == d + s6;
    } catch (const SyncError&) {
    }
  }

  int both = 0;
  constexpr int kSiTrials = 20;
  for (int t = 0; t < kSiTrials; ++t) {
    const SampleStream des =
        ofdm_modulate(c1, build_frame(c1, prbs_bits(7000 + static_cast<std::uint64_t>(t), payload_bits_per_frame(c1))));
    SampleStream own =
        ofdm_modulate(c0, build_frame(c0, prbs_bits(8000 + static_cast<std::uint64_t>(t), payload_bits_per_frame(c0))));
    const std::int64_t d = offset(rng), d0 = offset(rng);
    const SampleStream rx = capture(d, des, d0, &own, 40.0, 0.0, 9500 + static_cast<std::uint64_t>(t));
    own.start = d0;
    try {
      const SyncResult r = sync.run(rx, 25, 29, &own);
      both += r.desired_detected && r.si_detected && r.desired_start_index == d + s6 && r.si_start_index == d0 + s6;
    } catch (const SyncError&) {
    }
  }
  const double rate = static_cast<double>(exact) / kTrials;
  const bool pass = rate >= 0.99 && both == kSiTrials;
  return {pass, fmt("0 dB SNR, offsets in [0, 5 ms): %d/%d sample-exact (%.1f%%); SI at +40 dB: %d/%d with both "
                    "indices exact (need >= 99%% and all)",
                    exact, kTrials, 100.0 * rate, both, kSiTrials)};
}

Outcome check_properties() {
  bool pass = true;
  std::string failed;
  for (const auto& c : run_selftest()) {
    std::printf("      %s %-24s %s\n", c.passed ? "ok  " : "FAIL", c.name.c_str(), c.detail.c_str());
    if (!c.passed) {
      pass = false;
      failed += " " + c.name;
    }
  }
  return {pass, pass ? "all invariant checks hold" : "failing:" + failed};
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Eb/N0 (dB) where uncoded 4-QAM reaches `ber`: Q(sqrt(2 Eb/N0)) = ber.
double theory_ebn0_db(double ber) {
  double lo = 0.0, hi = 20.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (q_function(std::sqrt(2.0 * dsp::from_db(mid))) > ber ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Outcome check_ber_sanity() {
  // Uncoded 4-QAM through the OFDM modulator, AWGN, demodulator and demapper.
  const FrameConfig cfg = FrameConfig::make(Profile::FullDuplex20MHz, 4, 0);
  const std::size_t per_frame = payload_bits_per_frame(cfg);
  const int frames = static_cast<int>((1'000'000 + per_frame - 1) / per_frame);
  std::vector<double> grid, ber;
  for (double eb = 5.0; eb <= 10.01; eb += 0.5) {
    std::size_t errors = 0, bits = 0;
    for (int f = 0; f < frames; ++f) {
      const auto payload = prbs_bits(300 + static_cast<std::uint64_t>(f), per_frame);
      SampleStream x = ofdm_modulate(cfg, build_frame(cfg, payload));
      const double n0 = 1.0 / (2.0 * dsp::from_db(eb));  // Es = 2 Eb per subcarrier
      add_noise(x, n0 / cfg.fft_size, static_cast<std::uint64_t>(eb * 100) * 1000 + static_cast<std::uint64_t>(f));
      const auto out = qam_demap(data_symbols(cfg, ofdm_demodulate(cfg, x, 0)), 4);
      for (std::size_t i = 0; i < payload.size(); ++i) errors += out[i] != payload[i];
      bits += payload.size();
    }
    grid.push_back(eb);
    ber.push_back(static_cast<double>(errors) / static_cast<double>(bits));
  }
  // Eb/N0 where the measured curve crosses the target, log-linear between points.
  auto crossing = [&](double target) {
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
      if (ber[i] >= target && ber[i + 1] < target && ber[i + 1] > 0.0) {
        const double t = (std::log10(ber[i]) - std::log10(target)) / (std::log10(ber[i]) - std::log10(ber[i + 1]));
        return grid[i] + t * (grid[i + 1] - grid[i]);
      }
    return std::nan("");
  };
  bool pass = true;
  std::string detail = fmt("%d frames (%zu bits) per point;", frames, per_frame * static_cast<std::size_t>(frames));
  for (double target : {1e-3, 1e-4}) {
    const double meas = crossing(target), theory = theory_ebn0_db(target);
    const bool ok = std::isfinite(meas) && std::abs(meas - theory) <= 0.5;
    pass = pass && ok;
    detail += fmt(" BER %.0e at %.2f dB vs theory %.2f dB;", target, meas, theory);
  }
  return {pass, detail + " (need within 0.5 dB)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 analog cancellation", check_analog_cancellation},
      {"2 digital cancellation depth", check_digital_depth},
      {"3 constellation, canceller off/on", check_constellation},
      {"4 full-duplex / FDD throughput", check_throughput_ratio},
      {"5 synchronization robustness", check_sync_robustness},
      {"6 property suites", check_properties},
      {"7 4-QAM BER vs Q-function", check_ber_sanity},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  criterion %-36s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
