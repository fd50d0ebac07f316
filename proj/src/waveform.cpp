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

#include "fdr/waveform.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fdr/dsp.hpp"

namespace fdr {

std::string to_string(Profile p) {
  return p == Profile::FullDuplex20MHz ? "fd_20mhz" : "fdd_10mhz";
}

Profile profile_from_string(const std::string& s) {
  if (s == "fd_20mhz") return Profile::FullDuplex20MHz;
  if (s == "fdd_10mhz") return Profile::Fdd10MHz;
  throw ConfigError("unknown profile '" + s + "' (expected fd_20mhz or fdd_10mhz)");
}

FrameConfig FrameConfig::make(Profile profile, int qam_order, int node_id) {
  FrameConfig c;
  c.profile = profile;
  c.qam_order = qam_order;
  c.node_id = node_id;
  if (profile == Profile::Fdd10MHz) {
    c.fft_size = 1024;
    c.cp_len = 256;
    c.sample_rate_hz = 15.36e6;
    c.used_subcarriers = 600;
    c.reserve_peer_rs = false;
  }
  c.validate();
  return c;
}

void FrameConfig::validate() const {
  if (!dsp::is_power_of_two(static_cast<std::size_t>(fft_size)))
    throw ConfigError("fft_size must be a power of two");
  if (used_subcarriers <= 0 || used_subcarriers % 2 != 0 || used_subcarriers > fft_size - 1)
    throw ConfigError("used_subcarriers must be even and at most fft_size - 1");
  if (cp_len <= 0 || cp_len >= fft_size) throw ConfigError("cp_len out of range");
  if (node_id != 0 && node_id != 1) throw ConfigError("node_id must be 0 or 1");
  bits_per_qam_symbol(qam_order);
  const double frame_s = frame_duration_s();
  if (std::abs(frame_s - 0.01) > 1e-12)
    throw ConfigError("numerology does not give a 10 ms frame");
  if (used_subcarriers % rs_stride != 0) throw ConfigError("used_subcarriers must be a multiple of the RS stride");
}

int FrameConfig::bits_per_symbol() const { return bits_per_qam_symbol(qam_order); }

int FrameConfig::subcarrier_of(int used_index) const {
  const int half = used_subcarriers / 2;
  return used_index < half ? used_index - half : used_index - half + 1;
}

bool FrameConfig::is_rs_symbol(int symbol) const {
  const int pos = symbol % symbols_per_slot;
  return pos == rs_symbols_in_slot[0] || pos == rs_symbols_in_slot[1];
}

bool FrameConfig::is_pss_symbol(int symbol) const {
  for (int slot : pss_slots)
    if (symbol == slot * symbols_per_slot + symbols_per_slot - 1) return true;
  return false;
}

int FrameConfig::pss_root() const { return pss_root_for_node(node_id); }

// --- QAM ---------------------------------------------------------------------

int bits_per_qam_symbol(int order) {
  switch (order) {
    case 4: return 2;
    case 16: return 4;
    case 64: return 6;
    default: throw ConfigError("unsupported QAM order " + std::to_string(order));
  }
}

namespace {

double qam_scale(int order) {
  switch (order) {
    case 4: return 1.0 / std::sqrt(2.0);
    case 16: return 1.0 / std::sqrt(10.0);
    default: return 1.0 / std::sqrt(42.0);
  }
}

// Amplitude level of one axis from its bits (sign bit first), unscaled.
int pam_level(unsigned code, int bits_per_axis) {
  auto bit = [&](int i) { return static_cast<int>((code >> (bits_per_axis - 1 - i)) & 1u); };
  switch (bits_per_axis) {
    case 1: return 1 - 2 * bit(0);
    case 2: return (1 - 2 * bit(0)) * (1 + 2 * bit(1));
    default: return (1 - 2 * bit(0)) * (4 - (1 - 2 * bit(1)) * (2 - (1 - 2 * bit(2))));
  }
}

struct AxisTable {
  int bits = 1;
  std::vector<double> level;  // by code
};

AxisTable axis_table(int order) {
  AxisTable t;
  t.bits = bits_per_qam_symbol(order) / 2;
  const double s = qam_scale(order);
  for (unsigned c = 0; c < (1u << t.bits); ++c) t.level.push_back(pam_level(c, t.bits) * s);
  return t;
}

}  // namespace

CVec constellation(int order) {
  const int nb = bits_per_qam_symbol(order);
  CVec pts(static_cast<std::size_t>(order));
  for (int i = 0; i < order; ++i) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(nb));
    for (int b = 0; b < nb; ++b) bits[static_cast<std::size_t>(b)] = (i >> (nb - 1 - b)) & 1;
    pts[static_cast<std::size_t>(i)] = qam_map(bits, order)[0];
  }
  return pts;
}

CVec qam_map(std::span<const std::uint8_t> bits, int order) {
  const int nb = bits_per_qam_symbol(order);
  if (bits.size() % static_cast<std::size_t>(nb) != 0)
    throw ConfigError("bit count " + std::to_string(bits.size()) + " not divisible by " +
                      std::to_string(nb));
  const AxisTable t = axis_table(order);
  CVec out(bits.size() / static_cast<std::size_t>(nb));
  for (std::size_t s = 0; s < out.size(); ++s) {
    const std::uint8_t* b = bits.data() + s * static_cast<std::size_t>(nb);
    unsigned ci = 0, cq = 0;
    // Even bit positions drive I, odd positions drive Q.
    for (int j = 0; j < nb; ++j) {
      if (j % 2 == 0) ci = (ci << 1) | (b[j] & 1u);
      else cq = (cq << 1) | (b[j] & 1u);
    }
    out[s] = {t.level[ci], t.level[cq]};
  }
  return out;
}

std::vector<std::uint8_t> qam_demap(std::span<const cplx> symbols, int order) {
  const int nb = bits_per_qam_symbol(order);
  const AxisTable t = axis_table(order);
  auto slice = [&](double v) {
    unsigned best = 0;
    double bd = std::abs(v - t.level[0]);
    for (unsigned c = 1; c < t.level.size(); ++c) {
      const double d = std::abs(v - t.level[c]);
      if (d < bd) {
        bd = d;
        best = c;
      }
    }
    return best;
  };
  std::vector<std::uint8_t> out(symbols.size() * static_cast<std::size_t>(nb));
  for (std::size_t s = 0; s < symbols.size(); ++s) {
    const unsigned ci = slice(symbols[s].real());
    const unsigned cq = slice(symbols[s].imag());
    std::uint8_t* b = out.data() + s * static_cast<std::size_t>(nb);
    for (int j = 0; j < t.bits; ++j) {
      b[2 * j] = static_cast<std::uint8_t>((ci >> (t.bits - 1 - j)) & 1u);
      b[2 * j + 1] = static_cast<std::uint8_t>((cq >> (t.bits - 1 - j)) & 1u);
    }
  }
  return out;
}

// --- PSS ---------------------------------------------------------------------

PssSequence generate_pss(int root_u) {
  if (root_u <= 0 || std::gcd(root_u, 63) != 1)
    throw ConfigError("PSS root " + std::to_string(root_u) + " is not coprime to 63");
  PssSequence p;
  p.root_u = root_u;
  for (int k = -31; k <= 31; ++k) {
    if (k == 0) continue;
    // Phase reduced mod 2*63 in integers before the trig call.
    const long long num = k < 0 ? static_cast<long long>(root_u) * k * (k + 1)
                                : static_cast<long long>(root_u) * (k + 1) * (k + 2);
    const long long red = ((num % 126) + 126) % 126;
    const double phase = -kPi * static_cast<double>(red) / 63.0;
    p.values[static_cast<std::size_t>(k < 0 ? k + 31 : k + 30)] = std::polar(1.0, phase);
  }
  return p;
}

int pss_root_for_node(int node_id) { return node_id == 0 ? 25 : 29; }

// --- RS ----------------------------------------------------------------------

RsPattern rs_pattern(const FrameConfig& cfg, int node_id) {
  RsPattern p;
  p.node_id = node_id;
  p.subcarrier_offset = cfg.rs_offset(node_id);
  p.subcarrier_stride = cfg.rs_stride;
  p.symbol_indices.assign(cfg.rs_symbols_in_slot.begin(), cfg.rs_symbols_in_slot.end());
  std::uint64_t state = 0x5EED5EEDULL + static_cast<std::uint64_t>(node_id) * 0x9E3779B97F4A7C15ULL;
  const double a = 1.0 / std::sqrt(2.0);
  for (int s = 0; s < cfg.symbols_per_frame(); ++s) {
    if (!cfg.is_rs_symbol(s)) continue;
    for (int i = p.subcarrier_offset; i < cfg.used_subcarriers; i += p.subcarrier_stride) {
      state = state * 6364136223846793005ULL + 1442695040888963407ULL;
      const double re = (state >> 63) ? -a : a;
      const double im = ((state >> 62) & 1u) ? -a : a;
      p.cells.push_back({s, i, {re, im}});
    }
  }
  return p;
}

// --- Grid --------------------------------------------------------------------

ResourceGrid::ResourceGrid(int num_symbols, int fft_size)
    : num_symbols_(num_symbols),
      fft_size_(fft_size),
      kinds_(static_cast<std::size_t>(num_symbols) * static_cast<std::size_t>(fft_size),
             CellKind::Null),
      values_(kinds_.size()) {}

CVec ResourceGrid::used_values(const FrameConfig& cfg, int symbol) const {
  CVec v(static_cast<std::size_t>(cfg.used_subcarriers));
  for (int i = 0; i < cfg.used_subcarriers; ++i)
    v[static_cast<std::size_t>(i)] = value(symbol, cfg.subcarrier_of(i));
  return v;
}

void ResourceGrid::set_used_values(const FrameConfig& cfg, int symbol, std::span<const cplx> v) {
  for (int i = 0; i < cfg.used_subcarriers; ++i)
    set_value(symbol, cfg.subcarrier_of(i), v[static_cast<std::size_t>(i)]);
}

std::size_t ResourceGrid::count(CellKind k) const {
  return static_cast<std::size_t>(std::count(kinds_.begin(), kinds_.end(), k));
}

ResourceGrid frame_layout(const FrameConfig& cfg) {
  cfg.validate();
  ResourceGrid g(cfg.symbols_per_frame(), cfg.fft_size);
  const int own = cfg.rs_offset(cfg.node_id);
  const int peer = cfg.rs_offset(1 - cfg.node_id);
  for (int s = 0; s < cfg.symbols_per_frame(); ++s) {
    const bool rs_sym = cfg.is_rs_symbol(s);
    const bool pss_sym = cfg.is_pss_symbol(s);
    for (int i = 0; i < cfg.used_subcarriers; ++i) {
      const int k = cfg.subcarrier_of(i);
      CellKind kind = CellKind::Data;
      if (rs_sym && i % cfg.rs_stride == own) kind = CellKind::Rs;
      else if (rs_sym && cfg.reserve_peer_rs && i % cfg.rs_stride == peer) kind = CellKind::Null;
      else if (pss_sym && std::abs(k) <= 31) kind = CellKind::Pss;
      g.set(s, k, kind, {});
    }
  }
  return g;
}

std::size_t data_capacity(const FrameConfig& cfg) { return frame_layout(cfg).count(CellKind::Data); }

ResourceGrid build_frame(const FrameConfig& cfg, std::span<const std::uint8_t> payload_bits) {
  ResourceGrid g = frame_layout(cfg);
  const std::size_t cap = g.count(CellKind::Data);
  const std::size_t expected = cap * static_cast<std::size_t>(cfg.bits_per_symbol());
  const bool pilot_only = payload_bits.empty();
  if (!pilot_only && payload_bits.size() != expected)
    throw FramingError("payload has " + std::to_string(payload_bits.size()) +
                           " bits; frame expects " + std::to_string(expected),
                       expected);

  const CVec data = pilot_only ? CVec{} : qam_map(payload_bits, cfg.qam_order);
  const RsPattern rs = rs_pattern(cfg, cfg.node_id);
  const PssSequence pss = generate_pss(cfg.pss_root());

  for (const auto& c : rs.cells) g.set_value(c.symbol, cfg.subcarrier_of(c.used_index), c.value);
  std::size_t next = 0;
  for (int s = 0; s < cfg.symbols_per_frame(); ++s) {
    for (int i = 0; i < cfg.used_subcarriers; ++i) {
      const int k = cfg.subcarrier_of(i);
      switch (g.kind(s, k)) {
        case CellKind::Data:
          if (pilot_only) g.set(s, k, CellKind::Null, {});
          else g.set_value(s, k, data[next++]);
          break;
        case CellKind::Pss: g.set_value(s, k, pss.at(k)); break;
        default: break;
      }
    }
  }
  return g;
}

CVec data_symbols(const FrameConfig& cfg, const ResourceGrid& grid) {
  CVec out;
  for (int s = 0; s < grid.num_symbols(); ++s)
    for (int i = 0; i < cfg.used_subcarriers; ++i) {
      const int k = cfg.subcarrier_of(i);
      if (grid.kind(s, k) == CellKind::Data) out.push_back(grid.value(s, k));
    }
  return out;
}

CVec modulate_symbol(const FrameConfig& cfg, std::span<const cplx> used_values) {
  CVec bins(static_cast<std::size_t>(cfg.fft_size));
  for (int i = 0; i < cfg.used_subcarriers; ++i)
    bins[static_cast<std::size_t>(cfg.bin_of(cfg.subcarrier_of(i)))] = used_values[static_cast<std::size_t>(i)];
  dsp::fft_inplace(bins, true);
  CVec out;
  out.reserve(static_cast<std::size_t>(cfg.symbol_len()));
  out.insert(out.end(), bins.end() - cfg.cp_len, bins.end());
  out.insert(out.end(), bins.begin(), bins.end());
  return out;
}

CVec demodulate_symbol(const FrameConfig& cfg, const SampleStream& stream, std::int64_t window_start) {
  if (window_start < stream.start || window_start + cfg.fft_size > stream.end())
    throw TruncationError("stream [" + std::to_string(stream.start) + ", " +
                          std::to_string(stream.end()) + ") does not cover FFT window at " +
                          std::to_string(window_start));
  const auto off = static_cast<std::size_t>(window_start - stream.start);
  CVec bins(stream.samples.begin() + static_cast<std::ptrdiff_t>(off),
            stream.samples.begin() + static_cast<std::ptrdiff_t>(off) + cfg.fft_size);
  dsp::fft_inplace(bins, false);
  CVec used(static_cast<std::size_t>(cfg.used_subcarriers));
  for (int i = 0; i < cfg.used_subcarriers; ++i)
    used[static_cast<std::size_t>(i)] = bins[static_cast<std::size_t>(cfg.bin_of(cfg.subcarrier_of(i)))];
  return used;
}

SampleStream ofdm_modulate(const FrameConfig& cfg, const ResourceGrid& grid) {
  if (grid.fft_size() != cfg.fft_size || grid.num_symbols() != cfg.symbols_per_frame())
    throw ConfigError("grid dimensions do not match frame configuration");
  SampleStream out;
  out.samples.reserve(static_cast<std::size_t>(cfg.frame_len()));
  for (int s = 0; s < grid.num_symbols(); ++s) {
    const CVec sym = modulate_symbol(cfg, grid.used_values(cfg, s));
    out.samples.insert(out.samples.end(), sym.begin(), sym.end());
  }
  return out;
}

ResourceGrid ofdm_demodulate(const FrameConfig& cfg, const SampleStream& stream,
                             std::int64_t start_index, int num_symbols) {
  ResourceGrid g = frame_layout(cfg);
  const int n = num_symbols < 0 ? cfg.symbols_per_frame() : std::min(num_symbols, cfg.symbols_per_frame());
  if (start_index + cfg.symbol_len() > stream.end() || start_index < stream.start)
    throw TruncationError("stream shorter than one symbol from start index " +
                          std::to_string(start_index));
  for (int s = 0; s < n; ++s) {
    const std::int64_t w = start_index + static_cast<std::int64_t>(s) * cfg.symbol_len() + cfg.cp_len;
    g.set_used_values(cfg, s, demodulate_symbol(cfg, stream, w));
  }
  return g;
}

CVec pss_template(const FrameConfig& cfg, int root_u) {
  const PssSequence p = generate_pss(root_u);
  CVec used(static_cast<std::size_t>(cfg.used_subcarriers));
  for (int i = 0; i < cfg.used_subcarriers; ++i) {
    const int k = cfg.subcarrier_of(i);
    if (std::abs(k) <= 31) used[static_cast<std::size_t>(i)] = p.at(k);
  }
  return modulate_symbol(cfg, used);
}

// --- Payload and golden files ---------------------------------------------------

std::vector<std::uint8_t> prbs_bits(std::uint64_t seed, std::size_t count) {
  std::vector<std::uint8_t> out(count);
  std::uint64_t state = seed;
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (i % 64 == 0) {
      state += 0x9E3779B97F4A7C15ULL;
      std::uint64_t z = state;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      word = z ^ (z >> 31);
    }
    out[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
  }
  return out;
}

void write_iq_f32(const std::string& path, std::span<const cplx> samples) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  std::vector<char> buf(samples.size() * 8);
  auto put = [&](std::size_t at, float v) {
    const auto u = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) buf[at + static_cast<std::size_t>(b)] = static_cast<char>((u >> (8 * b)) & 0xFFu);
  };
  for (std::size_t i = 0; i < samples.size(); ++i) {
    put(8 * i, static_cast<float>(samples[i].real()));
    put(8 * i + 4, static_cast<float>(samples[i].imag()));
  }
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

CVec read_iq_f32(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() % 8 != 0) throw std::runtime_error(path + ": size is not a multiple of 8 bytes");
  auto get = [&](std::size_t at) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(buf[at + static_cast<std::size_t>(b)]) << (8 * b);
    return static_cast<double>(std::bit_cast<float>(u));
  };
  CVec out(buf.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {get(8 * i), get(8 * i + 4)};
  return out;
}

void write_sidecar(const std::string& path, const std::map<std::string, std::string>& fields) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& [k, v] : fields) f << k << " = " << v << '\n';
}

std::map<std::string, std::string> read_sidecar(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::map<std::string, std::string> out;
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  while (std::getline(f, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace fdr
