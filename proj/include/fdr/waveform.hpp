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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fdr/types.hpp"

namespace fdr {

enum class Profile { FullDuplex20MHz, Fdd10MHz };

std::string to_string(Profile p);
Profile profile_from_string(const std::string& s);

/// Frame numerology. Two profiles exist: the 20 MHz full-duplex frame
/// (2048 FFT, 512 CP, 30.72 MS/s, 1200 used subcarriers) and the 10 MHz FDD
/// baseline (1024 FFT, 256 CP, 15.36 MS/s, 600 used subcarriers). Both give a
/// 10 ms frame of 20 slots x 6 extended-CP symbols.
struct FrameConfig {
  Profile profile = Profile::FullDuplex20MHz;
  int fft_size = 2048;
  int cp_len = 512;
  double sample_rate_hz = 30.72e6;
  double subcarrier_spacing_hz = 15e3;
  int slots_per_frame = 20;
  int symbols_per_slot = 6;
  int used_subcarriers = 1200;
  int qam_order = 4;
  int node_id = 0;
  // Full-duplex grids keep the peer's RS cells empty so both nodes can be
  // estimated from one received symbol. FDD links carry one pattern only.
  bool reserve_peer_rs = true;

  int rs_stride = 6;
  std::array<int, 2> rs_symbols_in_slot{0, 3};
  std::array<int, 2> pss_slots{0, 10};

  static FrameConfig make(Profile profile, int qam_order, int node_id);

  void validate() const;

  int symbol_len() const { return fft_size + cp_len; }
  int symbols_per_frame() const { return slots_per_frame * symbols_per_slot; }
  std::int64_t frame_len() const {
    return static_cast<std::int64_t>(symbols_per_frame()) * symbol_len();
  }
  std::int64_t half_frame_len() const { return frame_len() / 2; }
  double frame_duration_s() const { return static_cast<double>(frame_len()) / sample_rate_hz; }
  int bits_per_symbol() const;

  /// Logical subcarrier (DC excluded) of a used-subcarrier index in
  /// [0, used_subcarriers): lowest frequency first.
  int subcarrier_of(int used_index) const;
  /// FFT bin for a logical subcarrier k in [-fft_size/2, fft_size/2).
  int bin_of(int k) const { return (k % fft_size + fft_size) % fft_size; }

  bool is_rs_symbol(int symbol) const;
  bool is_pss_symbol(int symbol) const;
  /// Frame symbol index of the PSS in the first half-frame.
  int first_pss_symbol() const { return pss_slots[0] * symbols_per_slot + symbols_per_slot - 1; }
  int rs_offset(int node) const { return node == 0 ? 0 : rs_stride / 2; }
  int pss_root() const;
};

// --- QAM -------------------------------------------------------------------

int bits_per_qam_symbol(int order);

/// Gray-mapped square constellations in the LTE bit order (see
/// docs/constellations.md), unit average energy. Point i corresponds to the
/// bit pattern of i read MSB first.
CVec constellation(int order);

CVec qam_map(std::span<const std::uint8_t> bits, int order);

/// Minimum-distance hard decision. On an exact tie the point with the lower
/// index wins.
std::vector<std::uint8_t> qam_demap(std::span<const cplx> symbols, int order);

// --- PSS -------------------------------------------------------------------

struct PssSequence {
  int root_u = 25;
  int length = 63;
  std::array<cplx, 62> values{};  // k = -31..-1 then 1..31

  /// Value at subcarrier k (|k| in 1..31).
  cplx at(int k) const { return values[static_cast<std::size_t>(k < 0 ? k + 31 : k + 30)]; }
};

PssSequence generate_pss(int root_u);
int pss_root_for_node(int node_id);

// --- Reference symbols -----------------------------------------------------

struct RsCell {
  int symbol = 0;       // frame symbol index
  int used_index = 0;   // used-subcarrier index
  cplx value;
};

struct RsPattern {
  int node_id = 0;
  int subcarrier_offset = 0;
  int subcarrier_stride = 6;
  std::vector<int> symbol_indices;  // per-slot positions
  std::vector<RsCell> cells;        // symbol-major, ascending subcarrier
};

/// Node RS pattern with unit-modulus QPSK values drawn from a per-node seeded
/// linear-congruential sequence.
RsPattern rs_pattern(const FrameConfig& cfg, int node_id);

// --- Resource grid ---------------------------------------------------------

enum class CellKind : std::uint8_t { Null = 0, Data, Rs, Pss };

class ResourceGrid {
 public:
  ResourceGrid() = default;
  ResourceGrid(int num_symbols, int fft_size);

  int num_symbols() const { return num_symbols_; }
  int fft_size() const { return fft_size_; }

  CellKind kind(int symbol, int k) const { return kinds_[index(symbol, k)]; }
  cplx value(int symbol, int k) const { return values_[index(symbol, k)]; }
  void set(int symbol, int k, CellKind kind, cplx v) {
    kinds_[index(symbol, k)] = kind;
    values_[index(symbol, k)] = v;
  }
  void set_value(int symbol, int k, cplx v) { values_[index(symbol, k)] = v; }

  /// Values of the used subcarriers of one symbol, in used-index order.
  CVec used_values(const FrameConfig& cfg, int symbol) const;
  void set_used_values(const FrameConfig& cfg, int symbol, std::span<const cplx> v);

  std::size_t count(CellKind kind) const;

  bool operator==(const ResourceGrid&) const = default;

 private:
  std::size_t index(int symbol, int k) const {
    return static_cast<std::size_t>(symbol) * static_cast<std::size_t>(fft_size_) +
           static_cast<std::size_t>(k + fft_size_ / 2);
  }
  int num_symbols_ = 0;
  int fft_size_ = 0;
  std::vector<CellKind> kinds_;
  CVec values_;
};

/// Cell kinds of a frame with all values zero.
ResourceGrid frame_layout(const FrameConfig& cfg);

/// Number of Data cells per frame.
std::size_t data_capacity(const FrameConfig& cfg);
inline std::size_t payload_bits_per_frame(const FrameConfig& cfg) {
  return data_capacity(cfg) * static_cast<std::size_t>(cfg.bits_per_symbol());
}

/// Maps the payload onto the Data cells (subcarrier-first, then symbol) and
/// fills RS and PSS cells. An empty payload yields a pilot-only frame.
/// Throws FramingError when the payload length is neither zero nor the
/// frame capacity.
ResourceGrid build_frame(const FrameConfig& cfg, std::span<const std::uint8_t> payload_bits);

/// Data cell values in fill order.
CVec data_symbols(const FrameConfig& cfg, const ResourceGrid& grid);

/// Time-domain samples of one symbol (CP first) from its used-subcarrier values.
CVec modulate_symbol(const FrameConfig& cfg, std::span<const cplx> used_values);

/// Used-subcarrier values from the FFT window starting at `window_start`.
/// Throws TruncationError when the stream does not cover the window.
CVec demodulate_symbol(const FrameConfig& cfg, const SampleStream& stream,
                       std::int64_t window_start);

SampleStream ofdm_modulate(const FrameConfig& cfg, const ResourceGrid& grid);

/// Demodulates `num_symbols` symbols (whole frame by default) whose first CP
/// starts at `start_index`. Cell kinds are copied from the frame layout.
ResourceGrid ofdm_demodulate(const FrameConfig& cfg, const SampleStream& stream,
                             std::int64_t start_index, int num_symbols = -1);

/// Time-domain PSS symbol (CP included) for correlation.
CVec pss_template(const FrameConfig& cfg, int root_u);

// --- Payload and golden vectors --------------------------------------------

/// Deterministic pseudo-random bits (splitmix64), identical on every platform.
std::vector<std::uint8_t> prbs_bits(std::uint64_t seed, std::size_t count);

/// Interleaved little-endian float32 (re, im) pairs.
void write_iq_f32(const std::string& path, std::span<const cplx> samples);
CVec read_iq_f32(const std::string& path);

/// Sidecar header: one `key = value` line per entry, sorted by key.
void write_sidecar(const std::string& path, const std::map<std::string, std::string>& fields);
std::map<std::string, std::string> read_sidecar(const std::string& path);

}  // namespace fdr
