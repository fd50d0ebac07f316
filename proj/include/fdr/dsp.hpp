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

#include <cmath>
#include <span>
#include <vector>

#include "fdr/types.hpp"

namespace fdr::dsp {

// Transform convention used throughout the project: the forward transform is
// unnormalized, the inverse carries the 1/N factor.

bool is_power_of_two(std::size_t n);

/// Forward DFT. `x.size()` must equal `size`, which must be a power of two.
CVec dft(std::span<const cplx> x, std::size_t size);
CVec dft(std::span<const cplx> x);

/// Inverse DFT including the 1/N scale.
CVec idft(std::span<const cplx> x, std::size_t size);
CVec idft(std::span<const cplx> x);

/// In-place radix-2 transform; `data.size()` must be a power of two.
void fft_inplace(CVec& data, bool inverse);

struct FirSpec {
  double cutoff_hz = 1.4e6;  // passband edge
  double stopband_atten_db = 50.0;
  double passband_ripple_db = 0.1;  // peak-to-peak
  double sample_rate_hz = 30.72e6;
  int num_taps = 151;
};

/// Real, symmetric (linear-phase) FIR.
struct FirFilter {
  std::vector<double> taps;
  int group_delay_samples = 0;
  // Edges the design was verified against.
  double passband_edge_hz = 0.0;
  double stopband_edge_hz = 0.0;
  double sample_rate_hz = 0.0;
};

/// The synchronization low-pass used ahead of PSS correlation: 1.4 MHz
/// passband edge, 50 dB stopband, 0.1 dB ripple, tap count scaled with the
/// sample rate so the transition band stays near 0.6 MHz.
FirSpec sync_lowpass_spec(double sample_rate_hz);

/// Kaiser-windowed sinc design. Beta and the transition width follow the
/// Kaiser closed forms for the requested attenuation and tap count; the
/// result is then measured on a dense grid and the design attenuation is
/// raised in 0.5 dB steps until every response number is met.
/// Throws ConfigError for malformed specs and DesignError when the tap
/// budget cannot satisfy them.
FirFilter design_lowpass(const FirSpec& spec);

/// |H(f)| in dB at each frequency.
std::vector<double> magnitude_response_db(const FirFilter& f,
                                          std::span<const double> freqs_hz);

struct ResponseCheck {
  double max_stopband_gain_db = 0.0;  // worst gain at or beyond the stopband edge
  double passband_ripple_db = 0.0;    // peak-to-peak over [0, passband edge]
  double dc_gain_db = 0.0;
};

/// Measures a designed filter on `grid_points` uniformly spaced frequencies in
/// [0, fs/2].
ResponseCheck measure_response(const FirFilter& f, int grid_points = 4096);

/// Full linear convolution. The result's start index is moved back by the
/// group delay, so a global index in the output refers to the same instant as
/// in the input.
SampleStream fir_apply(const FirFilter& f, const SampleStream& x);

/// Normalized magnitude-squared sliding correlation:
///   out[n] = |sum_k x[n+k] conj(ref[k])|^2 / (sum|ref|^2 * sum_k |x[n+k]|^2)
/// for lags n = 0 .. x.size() - ref.size() (capped at `max_lags` if nonzero).
/// Windows whose energy is negligible next to the strongest window report 0.
std::vector<double> sliding_xcorr(std::span<const cplx> x, std::span<const cplx> ref,
                                  std::size_t max_lags = 0);

inline std::vector<double> sliding_xcorr(const SampleStream& x, std::span<const cplx> ref,
                                         std::size_t max_lags = 0) {
  return sliding_xcorr(std::span<const cplx>(x.samples), ref, max_lags);
}

double energy(std::span<const cplx> x);
double mean_power(std::span<const cplx> x);

inline double to_db(double linear_power_ratio) { return 10.0 * std::log10(linear_power_ratio); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }
inline double amplitude_from_db(double db) { return std::pow(10.0, db / 20.0); }

}  // namespace fdr::dsp
