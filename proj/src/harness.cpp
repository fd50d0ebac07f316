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

#include "fdr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "fdr/dsp.hpp"
#include "fdr/sync_est.hpp"

namespace fdr {

void Scenario::validate() const {
  if (id.empty()) throw ConfigError("scenario id is empty");
  bits_per_qam_symbol(qam_down);
  bits_per_qam_symbol(qam_up);
  if (num_frames < 1) throw ConfigError("num_frames must be at least 1");
  if (!std::isfinite(snr_db) || !std::isfinite(si_tx_db)) throw ConfigError("levels must be finite");
  const FrameConfig cfg = FrameConfig::make(profile, qam_up, 0);
  ChannelRealization::from_db(si_channel).validate_si(cfg.cp_len);
  ChannelRealization::from_db(desired_channel).validate();
  if (analog.passive_isolation_db < 0.0) throw ConfigError("passive isolation must be non-negative");
  if (active_max_delay < 0) throw ConfigError("active_max_delay must be non-negative");
  if (impairments.dac_bits < 0 || impairments.adc_bits < 0 || impairments.dac_bits > 30 ||
      impairments.adc_bits > 30)
    throw ConfigError("converter bits must be in [0, 30]");
  if (peer_lag >= cfg.cp_len / 4) throw ConfigError("peer_lag must stay below a quarter of the CP");
  if (own_offset >= cfg.half_frame_len() / 2)
    throw ConfigError("own_offset must lie in the first quarter frame");
}

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = seed ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xC2B2AE3D27D4EB4FULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct Node {
  FrameConfig cfg;
  std::vector<ResourceGrid> frames;
  SampleStream ideal;   // baseband the node knows it sent
  SampleStream on_air;  // after level and hardware impairments
};

Node make_node(const Scenario& s, int node_id, int qam, std::int64_t start, double level_db) {
  Node n;
  n.cfg = FrameConfig::make(s.profile, qam, node_id);
  n.ideal.start = start;
  for (int f = 0; f < s.num_frames; ++f) {
    n.frames.push_back(build_frame(
        n.cfg, prbs_bits(mix(s.seed, 1 + static_cast<std::uint64_t>(node_id), static_cast<std::uint64_t>(f)),
                         payload_bits_per_frame(n.cfg))));
    const SampleStream x = ofdm_modulate(n.cfg, n.frames.back());
    n.ideal.samples.insert(n.ideal.samples.end(), x.samples.begin(), x.samples.end());
  }
  ImpairmentConfig imp = s.impairments;
  const SampleStream leveled = scaled(n.ideal, dsp::amplitude_from_db(level_db));
  if (imp.dac_bits > 0)
    imp.dac_full_scale = std::sqrt(dsp::mean_power(leveled.samples)) * dsp::amplitude_from_db(s.dac_headroom_db);
  n.on_air = apply_impairments(imp, leveled);
  return n;
}

double stream_power(const SampleStream& x) { return x.empty() ? 0.0 : dsp::mean_power(x.samples); }

// Mean per-subcarrier power gain of the coupling channel after isolation and
// the active tap.
double residual_si_gain(const Scenario& s, const AnalogCancelConfig& a, const FrameConfig& cfg) {
  const ChannelRealization ch = ChannelRealization::from_db(s.si_channel);
  const double iso = dsp::amplitude_from_db(-a.passive_isolation_db);
  const cplx g = a.active_enabled ? a.active_tap.gain() : cplx{};
  double acc = 0.0;
  for (int i = 0; i < cfg.used_subcarriers; ++i) {
    const int k = cfg.subcarrier_of(i);
    const cplx h = iso * ch.frequency_response(k, cfg.fft_size) -
                   g * std::polar(1.0, -2.0 * kPi * k * a.active_tap.delay_samples / cfg.fft_size);
    acc += std::norm(h);
  }
  return acc / cfg.used_subcarriers;
}

struct Direction {
  DecodeResult dec;
  SyncResult sync;
  bool ok = true;
  std::string error;
  double coupled_power = 0.0, passive_power = 0.0, residual_power = 0.0;
  TapTuning tuning;
};

struct Capture {
  SampleStream rx, si_component, desired_component;
  SampleStream coupled, passive, residual;
};

Direction run_direction(const Scenario& s, const Node& own, const Node& peer, bool full_duplex,
                        std::uint64_t noise_seed, RunArtifacts* art) {
  Direction d;
  const FrameConfig& cfg = own.cfg;
  const std::int64_t cap_end =
      std::max(own.on_air.end(), peer.on_air.end()) + 4 * static_cast<std::int64_t>(cfg.symbol_len());
  Capture c;

  AnalogCancelConfig analog = s.analog;
  if (full_duplex) {
    c.coupled = apply_channel(ChannelRealization::from_db(s.si_channel), own.on_air);
    c.passive = apply_passive_isolation(analog.passive_isolation_db, c.coupled);
    if (analog.active_enabled && s.tune_active_tap) {
      const auto probe_len = static_cast<std::size_t>(4 * cfg.symbol_len());
      const SampleStream ref{own.on_air.start,
                             CVec(own.on_air.samples.begin(),
                                  own.on_air.samples.begin() + static_cast<std::ptrdiff_t>(probe_len))};
      const SampleStream probe{c.passive.start,
                               CVec(c.passive.samples.begin(),
                                    c.passive.samples.begin() + static_cast<std::ptrdiff_t>(probe_len))};
      d.tuning = tune_active_tap(ref, probe, s.active_max_delay);
      analog.active_tap = d.tuning.tap;
    }
    c.residual = analog_cancel(analog, c.passive, own.on_air);
    d.coupled_power = stream_power(c.coupled);
    d.passive_power = stream_power(c.passive);
    d.residual_power = stream_power(c.residual);
  }
  c.desired_component = apply_channel(ChannelRealization::from_db(s.desired_channel), peer.on_air);

  double n0;  // per-subcarrier noise power
  if (full_duplex && s.noise_below_si_db) {
    n0 = dsp::from_db(s.si_tx_db) * residual_si_gain(s, analog, cfg) / dsp::from_db(*s.noise_below_si_db);
  } else {
    n0 = 1.0 / dsp::from_db(s.snr_db);
  }
  SampleStream noise{0, CVec(static_cast<std::size_t>(cap_end))};
  add_noise(noise, n0 / cfg.fft_size, noise_seed);

  c.si_component = noise;
  if (full_duplex) accumulate(c.si_component, c.residual);
  c.rx = c.si_component;
  accumulate(c.rx, c.desired_component);
  if (s.impairments.adc_bits > 0) {
    ImpairmentConfig imp = s.impairments;
    imp.adc_full_scale = std::sqrt(stream_power(c.rx)) * dsp::amplitude_from_db(s.adc_headroom_db);
    c.rx = apply_adc(imp, c.rx);
  }

  try {
    const SampleStream* tx_ref = full_duplex ? &own.ideal : nullptr;
    d.sync = Synchronizer(cfg).run(c.rx, cfg.pss_root(), peer.cfg.pss_root(), tx_ref);
    if (!d.sync.desired_detected)
      throw SyncError("desired PSS below the detection threshold", d.sync.desired_peak,
                      d.sync.si_peak);
    ReceiverConfig rc;
    rc.own_cfg = own.cfg;
    rc.peer_cfg = peer.cfg;
    rc.full_duplex = full_duplex;
    // Without an SI timing there is nothing to rebuild against.
    rc.digital_canceller = full_duplex && s.digital_canceller && d.sync.si_detected;
    ReceiveInputs in;
    in.rx = &c.rx;
    in.desired_frame_start = frame_start_from_sync(cfg, d.sync.desired_start_index);
    in.si_frame_start = full_duplex ? frame_start_from_sync(cfg, d.sync.si_start_index) : 0;
    in.num_frames = s.num_frames;
    in.own_frames = own.frames;
    in.peer_frames = peer.frames;
    in.si_component = &c.si_component;
    in.desired_component = &c.desired_component;
    d.dec = decode_frames(rc, in, DecodeMode::Pipelined);
  } catch (const SyncError& e) {
    d.ok = false;
    d.error = std::string("sync: ") + e.what();
    d.sync.desired_peak = e.desired_peak;
    d.sync.si_peak = e.si_peak;
  } catch (const std::exception& e) {
    d.ok = false;
    d.error = e.what();
  }

  if (art) {
    art->rx = std::move(c.rx);
    art->si_coupled = std::move(c.coupled);
    art->si_passive = std::move(c.passive);
    art->si_residual = std::move(c.residual);
    art->sync = d.sync;
    art->tuning = d.tuning;
    const std::int64_t pss_after = static_cast<std::int64_t>(cfg.first_pss_symbol() + 1) * cfg.symbol_len();
    art->true_desired_index = peer.on_air.start + pss_after;
    art->true_si_index = own.on_air.start + pss_after;
  }
  return d;
}

}  // namespace

LinkReport run_scenario(const Scenario& s, RunArtifacts* art) {
  s.validate();
  const bool fd = s.duplex_mode() == DuplexMode::Full;
  const FrameConfig probe = FrameConfig::make(s.profile, s.qam_up, 0);

  const std::int64_t own_offset =
      s.own_offset >= 0 ? s.own_offset : static_cast<std::int64_t>(mix(s.seed, 11) % 4096);
  const std::int64_t lag = s.peer_lag >= 0
                               ? s.peer_lag
                               : static_cast<std::int64_t>(mix(s.seed, 12) % static_cast<std::uint64_t>(probe.cp_len / 16));

  const double own_level = fd ? s.si_tx_db : 0.0;
  const Node n0 = make_node(s, 0, s.qam_down, own_offset, own_level);
  const Node n1 = make_node(s, 1, s.qam_up, own_offset + lag, 0.0);

  LinkReport r;
  r.scenario_id = s.id;
  r.seed = s.seed;
  r.duplex_mode = s.duplex_mode();
  r.qam_order = s.qam_up;
  r.snr_db = s.snr_db;

  // Primary direction: node 0 receives node 1.
  const Direction a = run_direction(s, n0, n1, fd, mix(s.seed, 21), art);
  std::vector<LinkTally> tallies;
  tallies.push_back({a.ok ? a.dec.correct_bits : 0, s.num_frames, probe.frame_duration_s()});

  if (s.both_directions) {
    // Node 1 hears its own burst as SI and node 0's as the desired signal; in
    // the reverse direction node 0 is the peer.
    const Node m1 = make_node(s, 1, s.qam_up, own_offset + lag, own_level);
    const Node m0 = make_node(s, 0, s.qam_down, own_offset, 0.0);
    const Direction b = run_direction(s, m1, m0, fd, mix(s.seed, 22), nullptr);
    tallies.push_back({b.ok ? b.dec.correct_bits : 0, s.num_frames, probe.frame_duration_s()});
    if (art && b.ok) art->reverse = b.dec;
    if (!b.ok && r.error.empty()) r.error = "reverse " + b.error;
    r.ok = r.ok && b.ok;
  }

  r.ok = r.ok && a.ok;
  if (!a.ok) r.error = a.error;
  r.desired_start_index = a.sync.desired_start_index;
  r.si_start_index = a.sync.si_start_index;
  r.desired_peak = a.sync.desired_peak;
  r.si_peak = a.sync.si_peak;
  r.throughput_bps = throughput_bps(tallies);

  if (fd && a.coupled_power > 0.0) {
    r.analog_passive_db = report_depth_db(cancellation_depth_db(a.coupled_power, a.passive_power));
    r.analog_total_db = report_depth_db(cancellation_depth_db(a.coupled_power, a.residual_power));
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (a.ok) {
    if (fd && a.dec.si_before > 0.0) r.digital_db = a.dec.digital_depth_db();
    r.evm_percent = a.dec.reference_power > 0.0 ? a.dec.evm_percent() : nan;
    r.ber = a.dec.ber();
    r.post_cancel_sinr_db = a.dec.desired_power > 0.0 ? a.dec.post_cancel_sinr_db() : nan;
    r.failed_symbols = a.dec.failed_symbols;
    r.erased_cells = a.dec.erased_cells;
    if (art) art->primary = a.dec;
  } else {
    r.evm_percent = nan;
    r.ber = 0.5;
  }
  r.total_cancellation_db = r.analog_total_db + r.digital_db;
  return r;
}

bool SuiteResult::all_ok() const {
  return std::all_of(reports.begin(), reports.end(), [](const LinkReport& r) { return r.ok; });
}

SuiteResult run_suite(const SuiteConfig& suite, const SuiteOptions& opts) {
  std::vector<Scenario> scenarios = suite.scenarios;
  if (opts.seed_override)
    for (auto& s : scenarios) s.seed = *opts.seed_override;

  if (!opts.out_dir.empty()) std::filesystem::create_directories(opts.out_dir);
  const bool dumps = !opts.out_dir.empty();

  std::vector<std::vector<LinkReport>> shards(scenarios.size());
  auto work = [&](std::size_t i) {
    const Scenario& s = scenarios[i];
    LinkReport r;
    try {
      RunArtifacts art;
      r = run_scenario(s, dumps ? &art : nullptr);
      if (dumps) write_dumps(opts.out_dir, s, art, opts.dump_iq);
    } catch (const std::exception& e) {
      r.scenario_id = s.id;
      r.seed = s.seed;
      r.duplex_mode = s.duplex_mode();
      r.qam_order = s.qam_up;
      r.snr_db = s.snr_db;
      r.ok = false;
      r.error = e.what();
      r.evm_percent = std::numeric_limits<double>::quiet_NaN();
      r.ber = 0.5;
    }
    shards[i].push_back(std::move(r));
  };

  const int threads = std::max(1, opts.threads);
  if (threads == 1 || scenarios.size() < 2) {
    for (std::size_t i = 0; i < scenarios.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) work(i);
      });
  }

  SuiteResult out;
  out.reports = merge_reports(std::move(shards));
  std::ostringstream csv;
  write_csv(csv, out.reports);
  out.csv = csv.str();
  if (!opts.out_dir.empty()) {
    std::ofstream f(std::filesystem::path(opts.out_dir) / (suite.name + ".csv"), std::ios::binary);
    f << out.csv;
  }
  return out;
}

SuiteResult run_suite(const std::string& config_path, const SuiteOptions& opts) {
  return run_suite(load_suite(config_path), opts);
}

// --- Dumps ------------------------------------------------------------------

Psd welch_psd(const SampleStream& x, double sample_rate_hz, int segment) {
  if (!dsp::is_power_of_two(static_cast<std::size_t>(segment)))
    throw ConfigError("PSD segment must be a power of two");
  Psd out;
  const auto n = static_cast<std::size_t>(segment);
  std::vector<double> win(n), acc(n, 0.0);
  double wpow = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    win[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
    wpow += win[i] * win[i];
  }
  std::size_t segs = 0;
  for (std::size_t off = 0; off + n <= x.size(); off += n / 2, ++segs) {
    CVec buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = x.samples[off + i] * win[i];
    dsp::fft_inplace(buf, false);
    for (std::size_t i = 0; i < n; ++i) acc[i] += std::norm(buf[i]);
  }
  out.freq_hz.resize(n);
  out.power_db.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bin = (i + n / 2) % n;  // centre DC
    const double p = segs ? acc[bin] / (static_cast<double>(segs) * wpow * sample_rate_hz) : 0.0;
    out.freq_hz[i] = (static_cast<double>(i) - static_cast<double>(n / 2)) * sample_rate_hz / static_cast<double>(n);
    out.power_db[i] = 10.0 * std::log10(std::max(p, 1e-30));
  }
  return out;
}

void write_dumps(const std::string& out_dir, const Scenario& s, const RunArtifacts& a, bool dump_iq) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string base = (fs::path(out_dir) / s.id).string();

  {
    std::ofstream f(base + "_constellation.csv", std::ios::binary);
    f << "symbol,re,im\n";
    std::size_t written = 0;
    char buf[96];
    for (const auto& d : a.primary.symbols) {
      if (written >= 20000) break;
      for (std::size_t c = 0; c < d.equalized.size() && written < 20000; ++c, ++written) {
        if (!d.erased.empty() && d.erased[c]) continue;
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f\n", d.index, d.equalized[c].real(),
                      d.equalized[c].imag());
        f << buf;
      }
    }
  }

  const FrameConfig cfg = FrameConfig::make(s.profile, s.qam_up, 0);
  const std::vector<std::pair<std::string, const SampleStream*>> stages{
      {"si_coupled", &a.si_coupled}, {"si_passive", &a.si_passive},
      {"si_residual", &a.si_residual}, {"rx", &a.rx}};
  std::vector<Psd> psds;
  std::vector<std::string> names;
  for (const auto& [name, x] : stages) {
    if (x->size() < 1024) continue;
    psds.push_back(welch_psd(*x, cfg.sample_rate_hz));
    names.push_back(name);
  }
  if (!psds.empty()) {
    std::ofstream f(base + "_psd.csv", std::ios::binary);
    f << "freq_hz";
    for (const auto& n : names) f << ',' << n << "_db";
    f << '\n';
    char buf[64];
    for (std::size_t i = 0; i < psds[0].freq_hz.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.1f", psds[0].freq_hz[i]);
      f << buf;
      for (const auto& p : psds) {
        std::snprintf(buf, sizeof buf, ",%.2f", p.power_db[i]);
        f << buf;
      }
      f << '\n';
    }
  }

  if (dump_iq && !a.rx.empty()) {
    write_iq_f32(base + "_rx.f32", a.rx.samples);
    write_sidecar(base + "_rx.txt", {{"profile", to_string(s.profile)},
                                     {"node_id", "0"},
                                     {"qam_order", std::to_string(s.qam_up)},
                                     {"seed", std::to_string(s.seed)},
                                     {"start_index", std::to_string(a.rx.start)},
                                     {"sample_rate_hz", std::to_string(static_cast<long long>(cfg.sample_rate_hz))},
                                     {"samples", std::to_string(a.rx.size())}});
  }
}

std::vector<std::string> write_goldens(const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> paths;
  constexpr std::uint64_t kSeed = 2016;
  for (Profile p : {Profile::FullDuplex20MHz, Profile::Fdd10MHz}) {
    for (int node = 0; node < 2; ++node) {
      const FrameConfig cfg = FrameConfig::make(p, 4, node);
      const ResourceGrid g = build_frame(cfg, prbs_bits(kSeed + static_cast<std::uint64_t>(node),
                                                        payload_bits_per_frame(cfg)));
      const SampleStream x = ofdm_modulate(cfg, g);
      const std::string base =
          (fs::path(out_dir) / ("golden_" + to_string(p) + "_node" + std::to_string(node))).string();
      write_iq_f32(base + ".f32", x.samples);
      write_sidecar(base + ".txt", {{"profile", to_string(p)},
                                    {"node_id", std::to_string(node)},
                                    {"qam_order", "4"},
                                    {"seed", std::to_string(kSeed + static_cast<std::uint64_t>(node))}});
      paths.push_back(base);
    }
  }
  return paths;
}

}  // namespace fdr
