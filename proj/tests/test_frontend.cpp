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

#include <doctest.h>

#include <cmath>
#include <random>

#include "fdr/dsp.hpp"
#include "fdr/frontend.hpp"
#include "fdr/waveform.hpp"

using namespace fdr;

namespace {

SampleStream noise_stream(std::size_t n, std::uint64_t seed, std::int64_t start = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  CVec x(n);
  for (auto& v : x) v = {g(rng), g(rng)};
  return {start, x};
}

SampleStream tone(std::size_t n, double cycles_per_sample, double amp) {
  CVec x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::polar(amp, 2.0 * kPi * cycles_per_sample * static_cast<double>(i));
  return {0, x};
}

}  // namespace

TEST_CASE("impairment chain with every stage off is the identity") {
  const SampleStream x = noise_stream(5000, 1, 17);
  const ImpairmentConfig off;
  const SampleStream y = apply_impairments(off, x);
  CHECK(y.start == x.start);
  CHECK(y.samples == x.samples);
  CHECK(apply_adc(off, x).samples == x.samples);
}

TEST_CASE("third-order PA on a complex tone and on two tones") {
  ImpairmentConfig c;
  c.pa = {true, 1.0, {-0.05, 0.01}};
  const double amp = 0.8;
  const SampleStream x = tone(1024, 10.0 / 1024, amp);
  const SampleStream y = apply_impairments(c, x);
  // a1 x + a3 x |x|^2 = (a1 + a3 A^2) x for a constant-envelope tone.
  const cplx g = 1.0 + c.pa.a3 * amp * amp;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(y.samples[i] - g * x.samples[i]));
  CHECK(worst < 1e-12);

  // Two tones at bins 10 and 14: products at 2*10-14 = 6 and 2*14-10 = 18 only.
  SampleStream two = tone(1024, 10.0 / 1024, 0.5);
  const SampleStream t2 = tone(1024, 14.0 / 1024, 0.5);
  for (std::size_t i = 0; i < two.size(); ++i) two.samples[i] += t2.samples[i];
  const CVec Y = dsp::dft(apply_impairments(c, two).samples);
  for (int k = 0; k < 1024; ++k) {
    const bool expected = k == 6 || k == 10 || k == 14 || k == 18;
    if (expected) CHECK(std::abs(Y[static_cast<std::size_t>(k)]) > 1.0);
    else CHECK(std::abs(Y[static_cast<std::size_t>(k)]) < 1e-9);
  }
}

TEST_CASE("16-bit quantization of a full-scale sinusoid") {
  const SampleStream x = tone(1 << 16, 0.01234567, 1.0);
  const CVec q = quantize(x.samples, 16, 1.0);
  double s = 0.0, n = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    s += std::norm(x.samples[i]);
    n += std::norm(q[i] - x.samples[i]);
  }
  CHECK(10.0 * std::log10(s / n) == doctest::Approx(6.02 * 16 + 1.76).epsilon(1.0 / 98.0));
  CHECK(quantize(x.samples, 0, 1.0) == x.samples);
}

TEST_CASE("channel application") {
  const SampleStream x = noise_stream(300, 2, 40);
  CHECK(apply_channel(ChannelRealization{}, x).samples.size() == x.size());
  CHECK(apply_channel(ChannelRealization{}, x).samples == x.samples);

  ChannelRealization ch;
  ch.taps = {Tap{5, {0.0, -0.5}}};
  const SampleStream y = apply_channel(ch, x);
  CHECK(y.start == x.start);
  for (std::int64_t n = x.start; n < x.end() + 5; ++n) CHECK(y.at(n) == cplx{0.0, -0.5} * x.at(n - 5));

  // Two taps: frequency response equals the DFT of the tap vector.
  const ChannelRealization two = ChannelRealization::from_db({{0, 0.0, 0.0}, {7, -6.0, 30.0}});
  CVec taps(2048);
  for (const auto& t : two.taps) taps[static_cast<std::size_t>(t.delay)] = t.gain;
  const CVec H = dsp::dft(taps);
  for (int k : {-600, -1, 1, 77, 599})
    CHECK(std::abs(two.frequency_response(k, 2048) - H[static_cast<std::size_t>((k + 2048) % 2048)]) < 1e-12);
  CHECK(std::abs(two.taps[1].gain) == doctest::Approx(std::pow(10.0, -6.0 / 20.0)));

  // Linearity without noise.
  const SampleStream a = noise_stream(400, 3), b = noise_stream(400, 4);
  SampleStream mix = scaled(a, {2.0, 1.0});
  accumulate(mix, b, {-0.5, 0.0});
  const SampleStream lhs = apply_channel(two, mix);
  SampleStream rhs = scaled(apply_channel(two, a), {2.0, 1.0});
  accumulate(rhs, apply_channel(two, b), {-0.5, 0.0});
  double worst = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) worst = std::max(worst, std::abs(lhs.samples[i] - rhs.samples[i]));
  CHECK(worst < 1e-12);

  ChannelRealization bad;
  bad.taps = {Tap{3, 1.0}, Tap{1, 1.0}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("noise power") {
  SampleStream z(0, CVec(200000));
  add_noise(z, 0.25, 9);
  CHECK(dsp::mean_power(z.samples) == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("passive isolation and analog cancellation") {
  const SampleStream x = noise_stream(20000, 5);
  const SampleStream p = apply_passive_isolation(42.0, x);
  CHECK(dsp::energy(x.samples) / dsp::energy(p.samples) == doctest::Approx(std::pow(10.0, 4.2)).epsilon(1e-12));
  CHECK_THROWS_AS(apply_passive_isolation(-1.0, x), ConfigError);

  AnalogCancelConfig off;
  off.active_tap = {10.0, 1.0, 3};
  CHECK(analog_cancel(off, p, x).samples == p.samples);

  // Exact single-tap match cancels to zero.
  AnalogCancelConfig on;
  on.active_enabled = true;
  on.active_tap = {20.0, 0.7, 4};
  const SampleStream si = delayed(scaled(x, on.active_tap.gain()), 4);
  const SampleStream r = analog_cancel(on, si, x);
  CHECK(dsp::energy(r.samples) <= 1e-28 * dsp::energy(si.samples));
}

TEST_CASE("active tap tuning") {
  const SampleStream tx = noise_stream(8192, 6);
  const cplx g = std::polar(0.02, -1.1);
  const SampleStream si = delayed(scaled(tx, g), 9);

  const TapTuning t = tune_active_tap(tx, si, 32);
  CHECK(t.tap.delay_samples == 9);
  CHECK(std::abs(t.tap.gain() - g) < 1e-12);
  CHECK(10.0 * std::log10(t.residual_power / t.probe_power) < -100.0);

  SampleStream noisy = si;
  add_noise(noisy, dsp::mean_power(si.samples) * 1e-4, 7);
  const TapTuning tn = tune_active_tap(tx, noisy, 32);
  AnalogCancelConfig c;
  c.active_enabled = true;
  c.active_tap = tn.tap;
  const SampleStream res = analog_cancel(c, si, tx);
  CHECK(10.0 * std::log10(dsp::energy(si.samples) / dsp::energy(res.samples)) >= 35.0);

  // Two taps: the LS fit cannot null both, and no grid point beats it.
  SampleStream two = si;
  accumulate(two, delayed(scaled(tx, std::polar(0.006, 0.4)), 12));
  const TapTuning t2 = tune_active_tap(tx, two, 32);
  const double achieved = t2.residual_power / t2.probe_power;
  CHECK(10.0 * std::log10(achieved) > -15.0);
  double grid_best = 1e9;
  for (int d : {9, 12})  // other delays only add power
    for (double att = 20.0; att <= 50.0; att += 0.5)
      for (double ph = -kPi; ph < kPi; ph += kPi / 90.0) {
        AnalogCancelConfig gc;
        gc.active_enabled = true;
        gc.active_tap = {att, ph, d};
        grid_best = std::min(grid_best, dsp::mean_power(analog_cancel(gc, two, tx).samples) / t2.probe_power);
      }
  CHECK(achieved <= grid_best * (1.0 + 1e-9));

  CHECK_THROWS_AS(tune_active_tap(tx, SampleStream(0, CVec(10)), 4), TuningError);
}
