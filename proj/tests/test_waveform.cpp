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
#include <filesystem>
#include <random>
#include <set>

#include "fdr/dsp.hpp"
#include "fdr/frontend.hpp"
#include "fdr/waveform.hpp"

using namespace fdr;

namespace {

// Leading rows of the LTE Gray tables, bits MSB first, unnormalized.
struct GrayRow {
  unsigned bits;
  double re, im;
};
const GrayRow kQpsk[] = {{0b00, 1, 1}, {0b01, 1, -1}, {0b10, -1, 1}, {0b11, -1, -1}};
const GrayRow kQam16[] = {{0b0000, 1, 1},  {0b0001, 1, 3},   {0b0010, 3, 1},   {0b0011, 3, 3},
                          {0b0100, 1, -1}, {0b0101, 1, -3},  {0b0110, 3, -1},  {0b0111, 3, -3},
                          {0b1000, -1, 1}, {0b1001, -1, 3},  {0b1010, -3, 1},  {0b1011, -3, 3},
                          {0b1100, -1, -1}, {0b1101, -1, -3}, {0b1110, -3, -1}, {0b1111, -3, -3}};
const GrayRow kQam64[] = {{0b000000, 3, 3}, {0b000001, 3, 1}, {0b000010, 1, 3}, {0b000011, 1, 1},
                          {0b000100, 3, 5}, {0b000101, 3, 7}, {0b000110, 1, 5}, {0b000111, 1, 7},
                          {0b010000, 3, -3}, {0b101000, -5, 3}, {0b111111, -7, -7}, {0b110110, -1, -5}};

template <std::size_t N>
void check_table(const GrayRow (&rows)[N], int order, double scale) {
  const CVec pts = constellation(order);
  for (const auto& r : rows) {
    CAPTURE(r.bits);
    CHECK(std::abs(pts[r.bits] - cplx{r.re, r.im} / scale) < 1e-12);
  }
}

std::vector<std::uint8_t> random_bits(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> b(n);
  for (auto& v : b) v = static_cast<std::uint8_t>(rng() & 1u);
  return b;
}

}  // namespace

TEST_CASE("constellations follow the Gray tables") {
  check_table(kQpsk, 4, std::sqrt(2.0));
  check_table(kQam16, 16, std::sqrt(10.0));
  check_table(kQam64, 64, std::sqrt(42.0));
  for (int order : {4, 16, 64}) {
    double e = 0.0;
    for (const auto& p : constellation(order)) e += std::norm(p);
    CHECK(e / order == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(qam_map(std::vector<std::uint8_t>{}, 16).empty());
  CHECK_THROWS_AS(constellation(8), ConfigError);
}

TEST_CASE("qam_demap inverts qam_map and matches brute-force nearest point") {
  for (int order : {4, 16, 64}) {
    const int nb = bits_per_qam_symbol(order);
    const auto bits = random_bits(static_cast<std::size_t>(nb) * 3000, static_cast<std::uint64_t>(order));
    CHECK(qam_demap(qam_map(bits, order), order) == bits);

    const CVec pts = constellation(order);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 0.3);
    for (int t = 0; t < 2000; ++t) {
      const cplx z{g(rng) * 3, g(rng) * 3};
      std::size_t best = 0;
      for (std::size_t i = 1; i < pts.size(); ++i)
        if (std::norm(z - pts[i]) < std::norm(z - pts[best])) best = i;
      const auto got = qam_demap(std::span<const cplx>(&z, 1), order);
      unsigned idx = 0;
      for (auto b : got) idx = (idx << 1) | b;
      CHECK(idx == best);
    }
  }
}

TEST_CASE("qam_demap tie goes to the lower index") {
  const CVec pts = constellation(4);
  const cplx mid = 0.5 * (pts[0] + pts[2]);  // 00 and 10 differ on I only
  const auto b = qam_demap(std::span<const cplx>(&mid, 1), 4);
  CHECK(b == std::vector<std::uint8_t>{0, 0});
}

TEST_CASE("4-QAM over AWGN at 20 dB: BER below 1e-5") {
  const auto bits = random_bits(1'000'000, 77);
  CVec s = qam_map(bits, 4);
  std::mt19937_64 rng(78);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5 * std::pow(10.0, -2.0)));
  for (auto& v : s) v += cplx{g(rng), g(rng)};
  const auto out = qam_demap(s, 4);
  std::size_t err = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) err += out[i] != bits[i];
  CHECK(static_cast<double>(err) / 1e6 < 1e-5);
}

TEST_CASE("PSS closed form") {
  const PssSequence p = generate_pss(25);
  // k = 1 uses (k+1)(k+2) = 2*3.
  const long double ang = -std::acos(-1.0L) * 25.0L * 6.0L / 63.0L;
  CHECK(std::abs(p.at(1) - cplx(static_cast<double>(std::cos(ang)), static_cast<double>(std::sin(ang)))) < 1e-13);
  const long double ang2 = -std::acos(-1.0L) * 25.0L * (-31.0L) * (-30.0L) / 63.0L;
  CHECK(std::abs(p.at(-31) - cplx(static_cast<double>(std::cos(ang2)), static_cast<double>(std::sin(ang2)))) < 1e-12);
  for (int u : {25, 29, 34})
    for (const auto& v : generate_pss(u).values) CHECK(std::abs(v) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(generate_pss(21), ConfigError);
  CHECK(pss_root_for_node(0) == 25);
  CHECK(pss_root_for_node(1) == 29);
}

TEST_CASE("frame timing is 10 ms in both profiles") {
  for (Profile p : {Profile::FullDuplex20MHz, Profile::Fdd10MHz}) {
    const FrameConfig c = FrameConfig::make(p, 4, 0);
    CHECK(c.symbols_per_frame() == 120);
    CHECK(c.frame_duration_s() == doctest::Approx(0.01).epsilon(1e-12));
  }
}

TEST_CASE("capacity equals direct cell enumeration") {
  for (Profile p : {Profile::FullDuplex20MHz, Profile::Fdd10MHz}) {
    const FrameConfig c = FrameConfig::make(p, 16, 0);
    std::size_t data = 0, pss = 0;
    for (int s = 0; s < 120; ++s) {
      const int slot_sym = s % 6;
      const bool rs_sym = slot_sym == 0 || slot_sym == 3;
      const bool pss_sym = s == 5 || s == 65;
      for (int i = 0; i < c.used_subcarriers; ++i) {
        const int k = c.subcarrier_of(i);
        if (pss_sym && std::abs(k) <= 31) {
          ++pss;
          continue;
        }
        if (rs_sym && (i % 6 == 0 || (c.reserve_peer_rs && i % 6 == 3))) continue;
        ++data;
      }
    }
    CHECK(pss == 124);
    CHECK(data_capacity(c) == data);
    const ResourceGrid g = frame_layout(c);
    CHECK(g.count(CellKind::Data) == data);
    CHECK(g.count(CellKind::Pss) == 124);
  }
  CHECK(data_capacity(FrameConfig::make(Profile::FullDuplex20MHz, 4, 0)) == 127876);
  CHECK(data_capacity(FrameConfig::make(Profile::Fdd10MHz, 4, 0)) == 67876);
}

TEST_CASE("RS patterns are cell-disjoint") {
  const FrameConfig c = FrameConfig::make(Profile::FullDuplex20MHz, 4, 0);
  std::set<std::pair<int, int>> cells;
  for (int node = 0; node < 2; ++node)
    for (const auto& cell : rs_pattern(c, node).cells) {
      CHECK(cells.insert({cell.symbol, cell.used_index}).second);
      CHECK(std::abs(cell.value) == doctest::Approx(1.0));
    }
  CHECK(cells.size() == 2u * 40u * 200u);
}

TEST_CASE("build_frame fill order and errors") {
  const FrameConfig c = FrameConfig::make(Profile::Fdd10MHz, 16, 0);
  const auto bits = prbs_bits(3, payload_bits_per_frame(c));
  const ResourceGrid g = build_frame(c, bits);
  const CVec want = qam_map(bits, 16);
  // Fill order: subcarrier first, then symbol.
  std::size_t n = 0;
  bool order_ok = true;
  for (int s = 0; s < g.num_symbols(); ++s)
    for (int i = 0; i < c.used_subcarriers; ++i) {
      const int k = c.subcarrier_of(i);
      if (g.kind(s, k) != CellKind::Data) continue;
      order_ok = order_ok && g.value(s, k) == want[n++];
    }
  CHECK(order_ok);
  CHECK(n == want.size());
  CHECK(data_symbols(c, g) == want);

  try {
    build_frame(c, std::vector<std::uint8_t>(5));
    FAIL("expected FramingError");
  } catch (const FramingError& e) {
    CHECK(e.expected == payload_bits_per_frame(c));
  }

  const ResourceGrid pilots = build_frame(c, {});
  CHECK(pilots.count(CellKind::Data) == 0);
  for (int s = 0; s < pilots.num_symbols(); ++s)
    for (int k = -c.fft_size / 2; k < c.fft_size / 2; ++k) {
      const CellKind kind = pilots.kind(s, k);
      if (kind != CellKind::Rs && kind != CellKind::Pss) CHECK(pilots.value(s, k) == cplx{});
    }
}

TEST_CASE("node grids differ in PSS root and RS placement only") {
  const FrameConfig c0 = FrameConfig::make(Profile::FullDuplex20MHz, 4, 0);
  const FrameConfig c1 = FrameConfig::make(Profile::FullDuplex20MHz, 4, 1);
  const auto bits = prbs_bits(8, payload_bits_per_frame(c0));
  const ResourceGrid a = build_frame(c0, bits), b = build_frame(c1, bits);
  bool ok = true;
  for (int s = 0; s < 120; ++s)
    for (int i = 0; i < c0.used_subcarriers; ++i) {
      const int k = c0.subcarrier_of(i);
      const CellKind ka = a.kind(s, k), kb = b.kind(s, k);
      if (ka == CellKind::Data || kb == CellKind::Data) ok = ok && ka == kb && a.value(s, k) == b.value(s, k);
      if (ka == CellKind::Pss) ok = ok && kb == CellKind::Pss;
      if (ka == CellKind::Rs) ok = ok && kb == CellKind::Null;
      if (kb == CellKind::Rs) ok = ok && ka == CellKind::Null;
    }
  CHECK(ok);
}

TEST_CASE("OFDM modulation basics") {
  const FrameConfig c = FrameConfig::make(Profile::FullDuplex20MHz, 4, 0);
  const ResourceGrid empty(120, c.fft_size);
  const SampleStream z = ofdm_modulate(c, empty);
  CHECK(z.size() == static_cast<std::size_t>(c.frame_len()));
  for (const auto& v : z.samples) CHECK(v == cplx{});

  ResourceGrid one(120, c.fft_size);
  one.set(0, 1, CellKind::Data, 1.0);
  const SampleStream x = ofdm_modulate(c, one);
  const cplx first = x.samples[static_cast<std::size_t>(c.cp_len)];
  double worst = 0.0;
  for (int n = 0; n < c.fft_size; ++n) {
    const cplx want = first * std::polar(1.0, 2.0 * kPi * n / c.fft_size);
    worst = std::max(worst, std::abs(x.samples[static_cast<std::size_t>(c.cp_len + n)] - want) / std::abs(first));
  }
  CHECK(worst < 1e-9);
  // CP is a copy of the tail.
  for (int n = 0; n < c.cp_len; n += 17)
    CHECK(x.samples[static_cast<std::size_t>(n)] == x.samples[static_cast<std::size_t>(n + c.fft_size)]);
}

TEST_CASE("OFDM round trip and timing offsets") {
  const FrameConfig c = FrameConfig::make(Profile::FullDuplex20MHz, 64, 0);
  const ResourceGrid g = build_frame(c, prbs_bits(4, payload_bits_per_frame(c)));
  const SampleStream x = ofdm_modulate(c, g);
  const ResourceGrid back = ofdm_demodulate(c, x, 0);
  double worst = 0.0;
  for (int s = 0; s < 120; ++s)
    for (int i = 0; i < c.used_subcarriers; ++i) {
      const int k = c.subcarrier_of(i);
      worst = std::max(worst, std::abs(back.value(s, k) - g.value(s, k)));
    }
  CHECK(worst < 1e-9);

  auto evm_after_delay = [&](int delta, bool ramp) {
    const SampleStream y = delayed(x, delta);
    double err = 0.0, ref = 0.0;
    for (int s = 1; s < 20; ++s) {
      const CVec v = demodulate_symbol(c, y, static_cast<std::int64_t>(s) * c.symbol_len() + c.cp_len);
      const CVec want = g.used_values(c, s);
      for (int i = 0; i < c.used_subcarriers; ++i) {
        const int k = c.subcarrier_of(i);
        const cplx r = ramp ? std::polar(1.0, -2.0 * kPi * k * delta / c.fft_size) : cplx{1.0, 0.0};
        err += std::norm(v[static_cast<std::size_t>(i)] - want[static_cast<std::size_t>(i)] * r);
        ref += std::norm(want[static_cast<std::size_t>(i)]);
      }
    }
    return std::sqrt(err / ref);
  };
  for (int d : {1, 100, 512}) CHECK(evm_after_delay(d, true) < 1e-9);
  CHECK(evm_after_delay(700, true) > 0.1);

  CHECK_THROWS_AS(demodulate_symbol(c, x, x.end() - 100), TruncationError);
}

TEST_CASE("prbs, IQ files and sidecars") {
  CHECK(prbs_bits(1, 64) == prbs_bits(1, 64));
  CHECK(prbs_bits(1, 64) != prbs_bits(2, 64));
  const auto dir = std::filesystem::temp_directory_path() / "fdr_waveform_test";
  std::filesystem::create_directories(dir);
  const CVec v{{1.0, -2.0}, {0.5, 0.25}};
  write_iq_f32((dir / "a.f32").string(), v);
  CHECK(read_iq_f32((dir / "a.f32").string()) == v);
  CHECK(std::filesystem::file_size(dir / "a.f32") == 16u);
  write_sidecar((dir / "a.txt").string(), {{"seed", "3"}, {"profile", "fd20"}});
  const auto m = read_sidecar((dir / "a.txt").string());
  CHECK(m.at("seed") == "3");
  CHECK(m.at("profile") == "fd20");
  std::filesystem::remove_all(dir);
}
