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
#include "fdr/sync_est.hpp"
#include "fdr/waveform.hpp"

using namespace fdr;

namespace {

SampleStream frame_stream(const FrameConfig& cfg, std::uint64_t seed, std::int64_t start) {
  const ResourceGrid g = build_frame(cfg, prbs_bits(seed, payload_bits_per_frame(cfg)));
  SampleStream s = ofdm_modulate(cfg, g);
  s.start = start;
  return s;
}

// Received grid with the given channel applied cell by cell.
ResourceGrid through(const FrameConfig& cfg, const ResourceGrid& g, const ChannelRealization& ch) {
  ResourceGrid out = g;
  for (int s = 0; s < g.num_symbols(); ++s)
    for (int i = 0; i < cfg.used_subcarriers; ++i) {
      const int k = cfg.subcarrier_of(i);
      out.set_value(s, k, g.value(s, k) * ch.frequency_response(k, cfg.fft_size));
    }
  return out;
}

}  // namespace

TEST_CASE("noise-free loopback recovers the inserted offset") {
  const FrameConfig cfg = FrameConfig::make(Profile::FullDuplex20MHz, 4, 0);
  const Synchronizer sync(cfg);
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::int64_t> off(0, cfg.half_frame_len() - 1);
  const SampleStream tx = frame_stream(cfg, 1, 0);
  int exact = 0;
  constexpr int kTrials = 100;
  for (int t = 0; t < kTrials; ++t) {
    const std::int64_t d = off(rng);
    // Capture starts at 0; the frame begins d samples in.
    SampleStream rx(0, CVec(static_cast<std::size_t>(cfg.frame_len())));
    SampleStream shifted = tx;
    shifted.start = d;
    accumulate(rx, shifted);
    rx.samples.resize(static_cast<std::size_t>(cfg.frame_len()));
    const SyncResult r = sync.run(rx, 29, 25);
    exact += r.desired_detected && r.desired_start_index == d + 6 * cfg.symbol_len() &&
             frame_start_from_sync(cfg, r.desired_start_index) == d;
  }
  CHECK(exact == kTrials);
}

TEST_CASE("silent capture fails to synchronize") {
  const FrameConfig cfg = FrameConfig::make(Profile::Fdd10MHz, 4, 0);
  const SampleStream zeros(0, CVec(static_cast<std::size_t>(cfg.frame_len())));
  CHECK_THROWS_AS(synchronize(cfg, zeros, 25, 29), SyncError);
}

TEST_CASE("desired and SI found together with orthogonal roots") {
  const FrameConfig c0 = FrameConfig::make(Profile::FullDuplex20MHz, 4, 0);
  const FrameConfig c1 = FrameConfig::make(Profile::FullDuplex20MHz, 64, 1);
  const std::int64_t own = 12345, peer = 12345 + 97;
  const SampleStream si = frame_stream(c0, 3, own);
  const SampleStream des = frame_stream(c1, 4, peer);
  SampleStream rx(0, CVec(static_cast<std::size_t>(c0.frame_len())));
  accumulate(rx, si, std::pow(10.0, 40.0 / 20.0));
  accumulate(rx, des);
  rx.samples.resize(static_cast<std::size_t>(c0.frame_len()));
  add_noise(rx, std::pow(10.0, -10.0 / 10.0) / c0.fft_size, 5);  // desired at 10 dB per subcarrier

  SampleStream tx_ref = si;
  tx_ref.start = own;
  const SyncResult r = synchronize(c0, rx, 25, 29, &tx_ref);
  CHECK(r.si_detected);
  CHECK(r.desired_detected);
  CHECK(r.si_start_index == own + 6 * c0.symbol_len());
  CHECK(r.desired_start_index == peer + 6 * c0.symbol_len());
  CHECK(r.desired_peak <= 1.0);
  CHECK(r.si_peak <= 1.0);
}

TEST_CASE("LS estimation") {
  const FrameConfig cfg = FrameConfig::make(Profile::FullDuplex20MHz, 16, 0);
  const ResourceGrid g = build_frame(cfg, prbs_bits(6, payload_bits_per_frame(cfg)));
  const ChannelRealization ch = ChannelRealization::from_db({{0, -1.0, 10.0}, {11, -9.0, 70.0}});
  const RsPattern pat = rs_pattern(cfg, 0);

  SUBCASE("exact without noise") {
    double worst = 0.0;
    for (const auto& e : ls_estimate_rs(cfg, through(cfg, g, ch), pat))
      for (std::size_t j = 0; j < e.h.size(); ++j)
        worst = std::max(worst, std::abs(e.h[j] - ch.frequency_response(cfg.subcarrier_of(e.used_index[j]), cfg.fft_size)));
    CHECK(worst < 1e-13);
  }
  SUBCASE("MSE equals the noise variance on a flat channel") {
    const double var = 0.01;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, std::sqrt(var / 2));
    double mse = 0.0;
    std::size_t cells = 0;
    for (int frame = 0; frame < 2; ++frame) {
      ResourceGrid noisy = g;
      for (int s = 0; s < noisy.num_symbols(); ++s)
        for (int i = 0; i < cfg.used_subcarriers; ++i) {
          const int k = cfg.subcarrier_of(i);
          noisy.set_value(s, k, noisy.value(s, k) + cplx{n(rng), n(rng)});
        }
      for (const auto& e : ls_estimate_rs(cfg, noisy, pat))
        for (const auto& h : e.h) {
          mse += std::norm(h - 1.0);
          ++cells;
        }
    }
    CHECK(cells >= 10000u);
    CHECK(mse / static_cast<double>(cells) == doctest::Approx(var).epsilon(0.1));
  }
  SUBCASE("zero grid gives zero estimates") {
    const ResourceGrid zero(120, cfg.fft_size);
    for (const auto& e : ls_estimate_rs(cfg, zero, pat))
      for (const auto& h : e.h) CHECK(h == cplx{});
  }
}

TEST_CASE("linear interpolation") {
  const FrameConfig cfg = FrameConfig::make(Profile::FullDuplex20MHz, 4, 0);
  SUBCASE("constant") {
    RsSymbolEstimate e{0, {0, 6, 12, 600, 1194}, CVec(5, cplx{0.3, -0.2})};
    for (const auto& v : interpolate_linear(e, cfg)) CHECK(std::abs(v - cplx{0.3, -0.2}) < 1e-15);
  }
  SUBCASE("midpoint") {
    RsSymbolEstimate e{0, {0, 6}, CVec{0.0, 6.0}};
    const CVec h = interpolate_linear(e, cfg);
    CHECK(std::abs(h[3] - 3.0) < 1e-15);
    CHECK(std::abs(h[1000] - 6.0) < 1e-15);
  }
  SUBCASE("affine channel reproduced between RS cells") {
    // Two taps at delays 0 and 1 with a tiny second tap: response is
    // affine in k to first order; use an exactly affine target instead.
    const cplx a{1.0, 0.5}, b{-0.001, 0.0007};
    RsSymbolEstimate e{0, {}, {}};
    for (int i = 3; i < cfg.used_subcarriers; i += 6) {
      e.used_index.push_back(i);
      e.h.push_back(a + b * static_cast<double>(cfg.subcarrier_of(i)));
    }
    const CVec h = interpolate_linear(e, cfg);
    for (int i = 3; i <= e.used_index.back(); ++i)
      CHECK(std::abs(h[static_cast<std::size_t>(i)] - (a + b * static_cast<double>(cfg.subcarrier_of(i)))) < 1e-12);
  }
  SUBCASE("timing offset ramp is restored exactly") {
    const ChannelRealization delay = ChannelRealization::from_db({{40, 0.0, 0.0}});
    RsSymbolEstimate e{0, {}, {}};
    for (int i = 0; i < cfg.used_subcarriers; i += 6) {
      e.used_index.push_back(i);
      e.h.push_back(delay.frequency_response(cfg.subcarrier_of(i), cfg.fft_size));
    }
    const CVec h = interpolate_linear(e, cfg, 40.0);
    for (int i = 0; i <= e.used_index.back(); ++i)
      CHECK(std::abs(h[static_cast<std::size_t>(i)] - delay.frequency_response(cfg.subcarrier_of(i), cfg.fft_size)) < 1e-12);
  }
  RsSymbolEstimate one{0, {0}, CVec{1.0}};
  CHECK_THROWS_AS(interpolate_linear(one, cfg), EstimationError);
}

TEST_CASE("intra and inter estimates separate by cell-disjoint RS") {
  const FrameConfig c0 = FrameConfig::make(Profile::FullDuplex20MHz, 4, 0);
  const FrameConfig c1 = FrameConfig::make(Profile::FullDuplex20MHz, 16, 1);
  const ResourceGrid own = build_frame(c0, prbs_bits(1, payload_bits_per_frame(c0)));
  const ResourceGrid peer = build_frame(c1, prbs_bits(2, payload_bits_per_frame(c1)));
  const ChannelRealization hs = ChannelRealization::from_db({{0, 0.0, 30.0}, {3, -20.0, 0.0}});
  const ChannelRealization hd = ChannelRealization::from_db({{0, -3.0, -60.0}, {5, -12.0, 10.0}});

  auto sum = [&](const ResourceGrid& a, const ResourceGrid& b) {
    ResourceGrid out = a;
    for (int s = 0; s < 120; ++s)
      for (int k = -c0.fft_size / 2; k < c0.fft_size / 2; ++k) out.set_value(s, k, a.value(s, k) + b.value(s, k));
    return out;
  };
  auto err_db = [&](const ChannelEstimate& e, const ChannelRealization& ch) {
    double err = 0.0, ref = 0.0;
    for (std::size_t j = 0; j < e.h.size(); ++j)
      for (int i = 0; i < c0.used_subcarriers; ++i) {
        const cplx t = ch.frequency_response(c0.subcarrier_of(i), c0.fft_size);
        err += std::norm(e.h[j][static_cast<std::size_t>(i)] - t);
        ref += std::norm(t);
      }
    return 10.0 * std::log10(err / ref);
  };
  const ResourceGrid rs = through(c0, own, hs), rd = through(c1, peer, hd);

  SUBCASE("SI only") {
    const auto [inter, intra] = estimate_both(c0, rs);
    CHECK(err_db(intra, hs) < -30.0);
    double p = 0.0;
    for (const auto& h : inter.h) p += dsp::energy(h);
    CHECK(p == 0.0);
  }
  SUBCASE("peer only, seen from node 1") {
    const auto [inter, intra] = estimate_both(c1, rd);
    CHECK(err_db(intra, hd) < -30.0);
    double p = 0.0;
    for (const auto& h : inter.h) p += dsp::energy(h);
    CHECK(p == 0.0);
  }
  SUBCASE("both active, roles swapped give the same estimates") {
    const ResourceGrid both = sum(rs, rd);
    const auto [inter0, intra0] = estimate_both(c0, both);
    const auto [inter1, intra1] = estimate_both(FrameConfig::make(Profile::FullDuplex20MHz, 4, 1), both);
    CHECK(err_db(intra0, hs) < -30.0);
    CHECK(err_db(inter0, hd) < -30.0);
    CHECK(inter0.h == intra1.h);
    CHECK(intra0.h == inter1.h);
  }
}
