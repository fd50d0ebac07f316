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

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fdr/types.hpp"

namespace fdr {

struct Tap {
  int delay = 0;  // samples
  cplx gain{1.0, 0.0};
};

/// Tapped-delay-line channel plus receiver noise.
struct ChannelRealization {
  std::vector<Tap> taps{Tap{}};
  double noise_power = 0.0;  // variance per complex sample

  /// Taps given as (delay, gain_db, phase_deg).
  static ChannelRealization from_db(const std::vector<std::array<double, 3>>& taps_db,
                                    double noise_power = 0.0);

  /// Delays non-negative and strictly increasing.
  void validate() const;
  /// Additionally checks the frequency-domain cancellation regime.
  void validate_si(int cp_len) const;

  int max_delay() const { return taps.empty() ? 0 : taps.back().delay; }
  double power_gain() const;
  /// H(k) = sum gain * exp(-j 2 pi k delay / fft_size).
  cplx frequency_response(int k, int fft_size) const;
};

struct PaModel {
  bool enabled = false;
  double a1 = 1.0;
  cplx a3{0.0, 0.0};
};

/// Transmit and receive hardware impairments. Each stage is bypassed at its
/// neutral setting (bits = 0, mismatch = 0, PA disabled).
struct ImpairmentConfig {
  int dac_bits = 0;
  double dac_full_scale = 1.0;
  double iq_gain_mismatch_db = 0.0;
  double iq_phase_mismatch_deg = 0.0;
  double tx_gain_db = 0.0;
  double tx_phase_deg = 0.0;
  PaModel pa;
  int adc_bits = 0;
  double adc_full_scale = 1.0;
  // Integer-sample timing jitter, applied as a shift of the transmit stream.
  int timing_offset_samples = 0;

  static ImpairmentConfig hardware_default();  // 16-bit DAC, 14-bit ADC, nothing else
};

/// Uniform mid-tread quantizer applied to I and Q independently, clipping at
/// +/- full_scale.
CVec quantize(std::span<const cplx> x, int bits, double full_scale);

/// Transmit chain: DAC quantization, I/Q imbalance, gain/phase offset, then
/// the PA polynomial y = a1 x + a3 x |x|^2.
SampleStream apply_impairments(const ImpairmentConfig& cfg, const SampleStream& x);

/// Receive-side ADC quantization.
SampleStream apply_adc(const ImpairmentConfig& cfg, const SampleStream& x);

/// y[n] = sum gain * x[n - delay] + w[n]. The output keeps the input start
/// index and extends by the channel's maximum delay. Noise is drawn from a
/// generator seeded with `noise_seed`.
SampleStream apply_channel(const ChannelRealization& ch, const SampleStream& x,
                           std::uint64_t noise_seed = 0);

/// Adds circular complex Gaussian noise of the given variance.
void add_noise(SampleStream& x, double noise_power, std::uint64_t seed);

/// dst[n] += gain * src[n] on the overlap of global indices; `dst` grows to
/// cover `src`.
void accumulate(SampleStream& dst, const SampleStream& src, cplx gain = {1.0, 0.0});

SampleStream scaled(const SampleStream& x, cplx gain);
SampleStream delayed(const SampleStream& x, std::int64_t delay);

struct ActiveTap {
  double attenuation_db = 0.0;
  double phase_rad = 0.0;
  int delay_samples = 0;

  cplx gain() const;
};

struct AnalogCancelConfig {
  double passive_isolation_db = 42.0;
  ActiveTap active_tap;
  bool active_enabled = false;
};

/// Passive dual-polarization isolation as a power scale of 10^(-db/10).
SampleStream apply_passive_isolation(double isolation_db, const SampleStream& x);

/// si_at_rx - tap(tx_ref), where the tap scales, rotates and delays the
/// transmitted stream. Identity when the active path is disabled.
SampleStream analog_cancel(const AnalogCancelConfig& cfg, const SampleStream& si_at_rx,
                           const SampleStream& tx_ref);

struct TapTuning {
  ActiveTap tap;
  double residual_power = 0.0;  // mean residual over the probe
  double probe_power = 0.0;     // mean si_at_rx power over the probe
};

/// Exhaustive integer-delay search over [0, max_delay]; for each delay the
/// complex gain is the closed-form least-squares fit. Throws TuningError on a
/// zero-energy probe.
TapTuning tune_active_tap(const SampleStream& tx_ref, const SampleStream& si_at_rx,
                          int max_delay);

}  // namespace fdr
