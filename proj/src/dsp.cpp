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

#include "fdr/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>

namespace fdr::dsp {

namespace {

// Immutable once built; shared by every caller of a given size.
struct FftPlan {
  std::size_t n = 0;
  std::vector<std::size_t> bitrev;
  CVec twiddle;  // e^{-j 2 pi k / n}, k < n/2
};

const FftPlan& plan_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<FftPlan>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    auto p = std::make_unique<FftPlan>();
    p->n = n;
    p->bitrev.resize(n);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      p->bitrev[i] = r;
    }
    p->twiddle.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double a = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
      p->twiddle[k] = {std::cos(a), std::sin(a)};
    }
    slot = std::move(p);
  }
  return *slot;
}

void require_size(std::size_t len, std::size_t size) {
  if (!is_power_of_two(size))
    throw ConfigError("DFT size " + std::to_string(size) + " is not a power of two");
  if (len != size)
    throw ConfigError("DFT input length " + std::to_string(len) + " does not match size " +
                      std::to_string(size));
}

double kaiser_beta(double atten_db) {
  if (atten_db > 50.0) return 0.1102 * (atten_db - 8.7);
  if (atten_db > 21.0)
    return 0.5842 * std::pow(atten_db - 21.0, 0.4) + 0.07886 * (atten_db - 21.0);
  return 0.0;
}

double bessel_i0(double x) { return std::cyl_bessel_i(0.0, x); }

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_inplace(CVec& data, bool inverse) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n))
    throw ConfigError("DFT size " + std::to_string(n) + " is not a power of two");
  const FftPlan& plan = plan_for(n);
  for (std::size_t i = 0; i < n; ++i)
    if (i < plan.bitrev[i]) std::swap(data[i], data[plan.bitrev[i]]);

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t base = 0; base < n; base += len) {
      for (std::size_t j = 0; j < half; ++j) {
        cplx w = plan.twiddle[j * step];
        if (inverse) w = std::conj(w);
        const cplx u = data[base + j];
        const cplx v = data[base + j + half] * w;
        data[base + j] = u + v;
        data[base + j + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& s : data) s *= scale;
  }
}

CVec dft(std::span<const cplx> x, std::size_t size) {
  require_size(x.size(), size);
  CVec out(x.begin(), x.end());
  fft_inplace(out, false);
  return out;
}

CVec dft(std::span<const cplx> x) { return dft(x, x.size()); }

CVec idft(std::span<const cplx> x, std::size_t size) {
  require_size(x.size(), size);
  CVec out(x.begin(), x.end());
  fft_inplace(out, true);
  return out;
}

CVec idft(std::span<const cplx> x) { return idft(x, x.size()); }

FirSpec sync_lowpass_spec(double sample_rate_hz) {
  FirSpec spec;
  spec.sample_rate_hz = sample_rate_hz;
  // 151 taps at 30.72 MS/s; same transition width at other rates.
  int taps = static_cast<int>(std::lround(150.0 * sample_rate_hz / 30.72e6)) + 1;
  if (taps % 2 == 0) ++taps;
  spec.num_taps = taps;
  return spec;
}

std::vector<double> magnitude_response_db(const FirFilter& f, std::span<const double> freqs_hz) {
  std::vector<double> out;
  out.reserve(freqs_hz.size());
  for (double fr : freqs_hz) {
    const double w = 2.0 * kPi * fr / f.sample_rate_hz;
    cplx acc{};
    for (std::size_t n = 0; n < f.taps.size(); ++n)
      acc += f.taps[n] * std::polar(1.0, -w * static_cast<double>(n));
    out.push_back(20.0 * std::log10(std::max(std::abs(acc), 1e-300)));
  }
  return out;
}

ResponseCheck measure_response(const FirFilter& f, int grid_points) {
  std::vector<double> freqs(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i)
    freqs[static_cast<std::size_t>(i)] = 0.5 * f.sample_rate_hz * i / (grid_points - 1);
  const auto mag = magnitude_response_db(f, freqs);

  ResponseCheck rc;
  rc.max_stopband_gain_db = -1e300;
  double pmax = -1e300, pmin = 1e300;
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    if (freqs[i] <= f.passband_edge_hz) {
      pmax = std::max(pmax, mag[i]);
      pmin = std::min(pmin, mag[i]);
    }
    if (freqs[i] >= f.stopband_edge_hz)
      rc.max_stopband_gain_db = std::max(rc.max_stopband_gain_db, mag[i]);
  }
  rc.passband_ripple_db = pmax - pmin;
  rc.dc_gain_db = mag.front();
  return rc;
}

FirFilter design_lowpass(const FirSpec& spec) {
  const double nyq = spec.sample_rate_hz / 2.0;
  if (spec.sample_rate_hz <= 0.0) throw ConfigError("sample rate must be positive");
  if (spec.cutoff_hz <= 0.0 || spec.cutoff_hz >= nyq)
    throw ConfigError("cutoff must lie strictly between 0 and Nyquist");
  if (spec.num_taps < 3 || spec.num_taps % 2 == 0)
    throw ConfigError("num_taps must be odd and at least 3");
  if (spec.stopband_atten_db <= 0.0 || spec.passband_ripple_db <= 0.0)
    throw ConfigError("attenuation and ripple must be positive");

  // Kaiser uses one deviation for both bands; take the tighter of the two.
  const double rlin = std::pow(10.0, spec.passband_ripple_db / 20.0);
  const double ripple_atten = -20.0 * std::log10((rlin - 1.0) / (rlin + 1.0));
  const double base_atten = std::max(spec.stopband_atten_db, ripple_atten);

  const int m = spec.num_taps - 1;
  std::string last_violation;
  for (double atten = base_atten; atten <= base_atten + 6.0; atten += 0.5) {
    const double beta = kaiser_beta(atten);
    const double dw = (atten - 7.95) / (2.285 * m);
    const double transition_hz = dw * spec.sample_rate_hz / (2.0 * kPi);
    const double stop_edge = spec.cutoff_hz + transition_hz;
    if (stop_edge >= nyq)
      throw DesignError("stopband edge " + std::to_string(stop_edge) +
                        " Hz exceeds Nyquist for " + std::to_string(spec.num_taps) + " taps");

    const double fc = (spec.cutoff_hz + transition_hz / 2.0) / spec.sample_rate_hz;
    FirFilter f;
    f.taps.resize(static_cast<std::size_t>(spec.num_taps));
    const double i0b = bessel_i0(beta);
    const double half = m / 2.0;
    for (int n = 0; n <= m; ++n) {
      const double t = n - half;
      const double sinc = (t == 0.0) ? 2.0 * fc : std::sin(2.0 * kPi * fc * t) / (kPi * t);
      const double r = t / half;
      const double w = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
      f.taps[static_cast<std::size_t>(n)] = sinc * w;
    }
    const double dc = std::accumulate(f.taps.begin(), f.taps.end(), 0.0);
    for (auto& t : f.taps) t /= dc;
    // Enforce exact symmetry after normalization.
    for (int n = 0; n < spec.num_taps / 2; ++n)
      f.taps[static_cast<std::size_t>(m - n)] = f.taps[static_cast<std::size_t>(n)];
    f.group_delay_samples = m / 2;
    f.passband_edge_hz = spec.cutoff_hz;
    f.stopband_edge_hz = stop_edge;
    f.sample_rate_hz = spec.sample_rate_hz;

    const auto rc = measure_response(f);
    const bool stop_ok = rc.max_stopband_gain_db <= -spec.stopband_atten_db;
    const bool ripple_ok = rc.passband_ripple_db <= spec.passband_ripple_db;
    if (stop_ok && ripple_ok) return f;
    last_violation = !stop_ok ? "stopband attenuation" : "passband ripple";
  }
  throw DesignError("cannot meet " + last_violation + " with " + std::to_string(spec.num_taps) +
                    " taps");
}

SampleStream fir_apply(const FirFilter& f, const SampleStream& x) {
  const std::size_t nt = f.taps.size();
  SampleStream y;
  y.start = x.start - f.group_delay_samples;
  if (x.empty() || nt == 0) return y;
  const std::size_t n = x.size();
  y.samples.assign(n + nt - 1, cplx{});
  const cplx* in = x.samples.data();
  cplx* out = y.samples.data();
  for (std::size_t i = 0; i < nt; ++i) {
    const double t = f.taps[i];
    if (t == 0.0) continue;
    cplx* o = out + i;
    for (std::size_t k = 0; k < n; ++k) o[k] += t * in[k];
  }
  return y;
}

double energy(std::span<const cplx> x) {
  double e = 0.0;
  for (const auto& s : x) e += std::norm(s);
  return e;
}

double mean_power(std::span<const cplx> x) {
  return x.empty() ? 0.0 : energy(x) / static_cast<double>(x.size());
}

std::vector<double> sliding_xcorr(std::span<const cplx> x, std::span<const cplx> ref,
                                  std::size_t max_lags) {
  if (ref.empty()) throw ConfigError("correlation reference must be non-empty");
  if (x.size() < ref.size()) return {};
  std::size_t lags = x.size() - ref.size() + 1;
  if (max_lags != 0) lags = std::min(lags, max_lags);
  const std::size_t span_len = lags + ref.size() - 1;

  std::size_t m = 1;
  while (m < span_len + ref.size()) m <<= 1;
  CVec xf(m), rf(m);
  std::copy_n(x.begin(), span_len, xf.begin());
  std::copy(ref.begin(), ref.end(), rf.begin());
  fft_inplace(xf, false);
  fft_inplace(rf, false);
  for (std::size_t i = 0; i < m; ++i) xf[i] *= std::conj(rf[i]);
  fft_inplace(xf, true);

  std::vector<long double> prefix(span_len + 1, 0.0L);
  for (std::size_t i = 0; i < span_len; ++i) prefix[i + 1] = prefix[i] + std::norm(x[i]);
  std::vector<double> win(lags);
  double max_win = 0.0;
  for (std::size_t n = 0; n < lags; ++n) {
    win[n] = static_cast<double>(prefix[n + ref.size()] - prefix[n]);
    max_win = std::max(max_win, win[n]);
  }

  const double eref = energy(ref);
  const double floor = max_win * 1e-12;
  std::vector<double> out(lags, 0.0);
  if (eref <= 0.0 || max_win <= 0.0) return out;
  for (std::size_t n = 0; n < lags; ++n) {
    if (win[n] <= floor) continue;
    out[n] = std::clamp(std::norm(xf[n]) / (eref * win[n]), 0.0, 1.0);
  }
  return out;
}

}  // namespace fdr::dsp
