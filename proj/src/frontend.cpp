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

#include "fdr/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "fdr/dsp.hpp"

namespace fdr {

ChannelRealization ChannelRealization::from_db(const std::vector<std::array<double, 3>>& taps_db,
                                               double noise_power) {
  ChannelRealization ch;
  ch.taps.clear();
  for (const auto& t : taps_db)
    ch.taps.push_back({static_cast<int>(t[0]),
                       std::polar(dsp::amplitude_from_db(t[1]), t[2] * kPi / 180.0)});
  ch.noise_power = noise_power;
  ch.validate();
  return ch;
}

void ChannelRealization::validate() const {
  if (taps.empty()) throw ConfigError("channel needs at least one tap");
  for (std::size_t i = 0; i < taps.size(); ++i) {
    if (taps[i].delay < 0) throw ConfigError("channel tap delays must be non-negative");
    if (i > 0 && taps[i].delay <= taps[i - 1].delay)
      throw ConfigError("channel tap delays must be strictly increasing");
  }
  if (noise_power < 0.0) throw ConfigError("noise power must be non-negative");
}

void ChannelRealization::validate_si(int cp_len) const {
  validate();
  if (max_delay() >= cp_len)
    throw ConfigError("self-interference delay spread " + std::to_string(max_delay()) +
                      " is not below the CP length " + std::to_string(cp_len));
}

double ChannelRealization::power_gain() const {
  double p = 0.0;
  for (const auto& t : taps) p += std::norm(t.gain);
  return p;
}

cplx ChannelRealization::frequency_response(int k, int fft_size) const {
  cplx h{};
  for (const auto& t : taps)
    h += t.gain * std::polar(1.0, -2.0 * kPi * k * t.delay / static_cast<double>(fft_size));
  return h;
}

ImpairmentConfig ImpairmentConfig::hardware_default() {
  ImpairmentConfig c;
  c.dac_bits = 16;
  c.adc_bits = 14;
  return c;
}

CVec quantize(std::span<const cplx> x, int bits, double full_scale) {
  if (bits <= 0) return CVec(x.begin(), x.end());
  if (full_scale <= 0.0) throw ConfigError("quantizer full scale must be positive");
  const double step = 2.0 * full_scale / std::ldexp(1.0, bits);
  const double lo = -std::ldexp(1.0, bits - 1);
  const double hi = std::ldexp(1.0, bits - 1) - 1.0;
  auto q = [&](double v) { return std::clamp(std::round(v / step), lo, hi) * step; };
  CVec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = {q(x[i].real()), q(x[i].imag())};
  return out;
}

SampleStream apply_impairments(const ImpairmentConfig& cfg, const SampleStream& x) {
  SampleStream y{x.start + cfg.timing_offset_samples, quantize(x.samples, cfg.dac_bits, cfg.dac_full_scale)};

  if (cfg.iq_gain_mismatch_db != 0.0 || cfg.iq_phase_mismatch_deg != 0.0) {
    const double g = dsp::amplitude_from_db(cfg.iq_gain_mismatch_db);
    const double phi = cfg.iq_phase_mismatch_deg * kPi / 180.0;
    const cplx mu = 0.5 * (1.0 + g * std::polar(1.0, -phi));
    const cplx nu = 0.5 * (1.0 - g * std::polar(1.0, phi));
    for (auto& s : y.samples) s = mu * s + nu * std::conj(s);
  }

  if (cfg.tx_gain_db != 0.0 || cfg.tx_phase_deg != 0.0) {
    const cplx g = std::polar(dsp::amplitude_from_db(cfg.tx_gain_db), cfg.tx_phase_deg * kPi / 180.0);
    for (auto& s : y.samples) s *= g;
  }

  if (cfg.pa.enabled) {
    for (auto& s : y.samples) s = cfg.pa.a1 * s + cfg.pa.a3 * s * std::norm(s);
  }
  return y;
}

SampleStream apply_adc(const ImpairmentConfig& cfg, const SampleStream& x) {
  return {x.start, quantize(x.samples, cfg.adc_bits, cfg.adc_full_scale)};
}

SampleStream apply_channel(const ChannelRealization& ch, const SampleStream& x,
                           std::uint64_t noise_seed) {
  ch.validate();
  SampleStream y;
  y.start = x.start;
  y.samples.assign(x.size() + static_cast<std::size_t>(ch.max_delay()), cplx{});
  for (const auto& t : ch.taps) {
    cplx* out = y.samples.data() + t.delay;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] += t.gain * x.samples[i];
  }
  if (ch.noise_power > 0.0) add_noise(y, ch.noise_power, noise_seed);
  return y;
}

void add_noise(SampleStream& x, double noise_power, std::uint64_t seed) {
  if (noise_power <= 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, std::sqrt(noise_power / 2.0));
  for (auto& s : x.samples) s += cplx{n(rng), n(rng)};
}

void accumulate(SampleStream& dst, const SampleStream& src, cplx gain) {
  if (src.empty()) return;
  if (dst.empty()) {
    dst = scaled(src, gain);
    return;
  }
  const std::int64_t lo = std::min(dst.start, src.start);
  const std::int64_t hi = std::max(dst.end(), src.end());
  if (lo < dst.start || hi > dst.end()) {
    CVec grown(static_cast<std::size_t>(hi - lo));
    std::copy(dst.samples.begin(), dst.samples.end(), grown.begin() + (dst.start - lo));
    dst.samples = std::move(grown);
    dst.start = lo;
  }
  cplx* out = dst.samples.data() + (src.start - dst.start);
  for (std::size_t i = 0; i < src.size(); ++i) out[i] += gain * src.samples[i];
}

SampleStream scaled(const SampleStream& x, cplx gain) {
  SampleStream y = x;
  for (auto& s : y.samples) s *= gain;
  return y;
}

SampleStream delayed(const SampleStream& x, std::int64_t delay) {
  return {x.start + delay, x.samples};
}

cplx ActiveTap::gain() const {
  return std::polar(dsp::amplitude_from_db(-attenuation_db), phase_rad);
}

SampleStream apply_passive_isolation(double isolation_db, const SampleStream& x) {
  if (isolation_db < 0.0) throw ConfigError("passive isolation must be non-negative");
  return scaled(x, dsp::amplitude_from_db(-isolation_db));
}

SampleStream analog_cancel(const AnalogCancelConfig& cfg, const SampleStream& si_at_rx,
                           const SampleStream& tx_ref) {
  if (!cfg.active_enabled) return si_at_rx;
  SampleStream out = si_at_rx;
  const cplx g = cfg.active_tap.gain();
  const std::int64_t d = cfg.active_tap.delay_samples;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.samples[i] -= g * tx_ref.at(out.start + static_cast<std::int64_t>(i) - d);
  return out;
}

TapTuning tune_active_tap(const SampleStream& tx_ref, const SampleStream& si_at_rx, int max_delay) {
  const double ey = dsp::energy(si_at_rx.samples);
  if (ey <= 0.0 || dsp::energy(tx_ref.samples) <= 0.0)
    throw TuningError("active tap tuning needs a probe with non-zero energy");
  if (max_delay < 0) throw ConfigError("max_delay must be non-negative");

  TapTuning best;
  best.residual_power = std::numeric_limits<double>::infinity();
  const auto n = static_cast<double>(si_at_rx.size());
  best.probe_power = ey / n;
  for (int d = 0; d <= max_delay; ++d) {
    cplx cross{};
    double ex = 0.0;
    for (std::size_t i = 0; i < si_at_rx.size(); ++i) {
      const cplx xd = tx_ref.at(si_at_rx.start + static_cast<std::int64_t>(i) - d);
      cross += si_at_rx.samples[i] * std::conj(xd);
      ex += std::norm(xd);
    }
    if (ex <= 0.0) continue;
    const double residual = std::max(0.0, ey - std::norm(cross) / ex) / n;
    if (residual < best.residual_power) {
      const cplx g = cross / ex;
      best.residual_power = residual;
      best.tap.delay_samples = d;
      best.tap.attenuation_db = -20.0 * std::log10(std::abs(g));
      best.tap.phase_rad = std::arg(g);
    }
  }
  if (!std::isfinite(best.residual_power))
    throw TuningError("transmit reference does not overlap the probe at any delay");
  return best;
}

}  // namespace fdr
