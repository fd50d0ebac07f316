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

#include "fdr/cancel_decode.hpp"

#include <cmath>
#include <exception>
#include <thread>

#include "fdr/bounded_queue.hpp"
#include "fdr/dsp.hpp"
#include "fdr/metrics.hpp"

namespace fdr {

CVec counter_tx_symbol(const CancellerState& state, const FrameConfig& own_cfg,
                       std::span<const ResourceGrid> own_frames) {
  const std::int64_t per_frame = own_cfg.symbols_per_frame();
  const std::int64_t available = std::min<std::int64_t>(
      state.num_tx_symbols, static_cast<std::int64_t>(own_frames.size()) * per_frame);
  if (state.counter < 0 || state.counter >= available)
    throw AlignmentError("counter " + std::to_string(state.counter) +
                         " is outside the transmitted symbols [0, " + std::to_string(available) +
                         ")");
  const auto frame = static_cast<std::size_t>(state.counter / per_frame);
  return own_frames[frame].used_values(own_cfg, static_cast<int>(state.counter % per_frame));
}

CVec rebuild_si(const CancellerState& state, std::span<const cplx> tx_symbol) {
  CVec si(tx_symbol.size());
  if (state.intra_node_estimate.empty()) return si;
  if (state.intra_node_estimate.size() != tx_symbol.size())
    throw AlignmentError("intra-node estimate and transmit symbol sizes differ");
  for (std::size_t k = 0; k < si.size(); ++k) si[k] = state.intra_node_estimate[k] * tx_symbol[k];
  return si;
}

CVec cancel_digital(std::span<const cplx> rx_symbol, std::span<const cplx> rebuilt_si) {
  if (rx_symbol.size() != rebuilt_si.size())
    throw AlignmentError("received symbol and rebuilt SI sizes differ");
  CVec out(rx_symbol.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = rx_symbol[k] - rebuilt_si[k];
  return out;
}

EqualizedSymbol zf_equalize(std::span<const cplx> cleaned, std::span<const cplx> h_inter,
                            double floor) {
  if (cleaned.size() != h_inter.size())
    throw EstimationError("channel estimate does not cover the symbol");
  EqualizedSymbol out{CVec(cleaned.size()), std::vector<std::uint8_t>(cleaned.size(), 0)};
  for (std::size_t k = 0; k < cleaned.size(); ++k) {
    if (std::abs(h_inter[k]) < floor) {
      out.erased[k] = 1;
      continue;
    }
    out.z[k] = cleaned[k] / h_inter[k];
  }
  return out;
}

double DecodeResult::evm_percent() const {
  if (reference_power <= 0.0) throw MeasurementError("no reference power for EVM");
  return 100.0 * std::sqrt(error_power / reference_power);
}

double DecodeResult::ber() const {
  if (counted_bits == 0) return 0.5;
  return static_cast<double>(bit_errors) / static_cast<double>(counted_bits);
}

double DecodeResult::digital_depth_db() const {
  return report_depth_db(cancellation_depth_db(si_before, si_after));
}

double DecodeResult::post_cancel_sinr_db() const {
  if (desired_power <= 0.0) throw MeasurementError("no desired power recorded");
  return report_depth_db(cancellation_depth_db(desired_power, impairment_after));
}

namespace {

std::vector<std::vector<int>> data_cells_by_symbol(const FrameConfig& cfg) {
  const ResourceGrid layout = frame_layout(cfg);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(cfg.symbols_per_frame()));
  for (int s = 0; s < cfg.symbols_per_frame(); ++s)
    for (int i = 0; i < cfg.used_subcarriers; ++i)
      if (layout.kind(s, cfg.subcarrier_of(i)) == CellKind::Data)
        out[static_cast<std::size_t>(s)].push_back(i);
  return out;
}

// FFT of a window that may run off the stored span (zero-filled).
CVec demodulate_padded(const FrameConfig& cfg, const SampleStream& x, std::int64_t w) {
  if (w >= x.start && w + cfg.fft_size <= x.end()) return demodulate_symbol(cfg, x, w);
  SampleStream tmp{w, CVec(static_cast<std::size_t>(cfg.fft_size))};
  for (int i = 0; i < cfg.fft_size; ++i) tmp.samples[static_cast<std::size_t>(i)] = x.at(w + i);
  return demodulate_symbol(cfg, tmp, w);
}

struct FftItem {
  int t = 0;
  std::int64_t window = 0;
  CVec y, y_si, y_des;
  bool failed = false;
  std::string error;
};

struct EqItem {
  int t = 0;
  std::int64_t tx_symbol = -1;
  CVec z;
  std::vector<std::uint8_t> erased;
  bool failed = false;
  std::string error;
  double si_before = 0.0, si_after = 0.0, desired = 0.0, impairment = 0.0;
};

class DemodStage {
 public:
  DemodStage(const ReceiverConfig& cfg, const ReceiveInputs& in) : cfg_(cfg), in_(in) {}

  FftItem operator()(int t) const {
    const FrameConfig& pc = cfg_.peer_cfg;
    FftItem it;
    it.t = t;
    it.window = in_.desired_frame_start + static_cast<std::int64_t>(t) * pc.symbol_len() +
                pc.cp_len - cfg_.backoff();
    try {
      it.y = demodulate_symbol(pc, *in_.rx, it.window);
      if (in_.si_component) it.y_si = demodulate_padded(pc, *in_.si_component, it.window);
      if (in_.desired_component)
        it.y_des = demodulate_padded(pc, *in_.desired_component, it.window);
    } catch (const std::exception& e) {
      it.failed = true;
      it.error = e.what();
    }
    return it;
  }

 private:
  const ReceiverConfig& cfg_;
  const ReceiveInputs& in_;
};

class CancelStage {
 public:
  CancelStage(const ReceiverConfig& cfg, const ReceiveInputs& in)
      : cfg_(cfg),
        in_(in),
        own_rs_(rs_pattern(cfg.own_cfg, cfg.own_cfg.node_id)),
        peer_rs_(rs_pattern(cfg.peer_cfg, cfg.peer_cfg.node_id)),
        data_(data_cells_by_symbol(cfg.peer_cfg)) {
    const FrameConfig& pc = cfg.peer_cfg;
    state_.si_start_index = in.si_frame_start;
    state_.num_tx_symbols =
        static_cast<std::int64_t>(in.own_frames.size()) * cfg.own_cfg.symbols_per_frame();
    const double s = pc.symbol_len();
    state_.counter = std::llround(static_cast<double>(in.desired_frame_start - in.si_frame_start) / s);
  }

  EqItem operator()(const FftItem& f) {
    EqItem out;
    out.t = f.t;
    out.tx_symbol = state_.counter;
    try {
      if (f.failed) throw TruncationError(f.error);
      process(f, out);
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
    }
    state_.advance();
    return out;
  }

 private:
  void process(const FftItem& f, EqItem& out) {
    const FrameConfig& pc = cfg_.peer_cfg;
    const FrameConfig& oc = cfg_.own_cfg;
    const int peer_sym = f.t % pc.symbols_per_frame();

    if (cfg_.full_duplex && state_.counter >= 0) {
      const int own_sym = static_cast<int>(state_.counter % oc.symbols_per_frame());
      if (oc.is_rs_symbol(own_sym)) {
        const std::int64_t body =
            state_.si_start_index + state_.counter * oc.symbol_len() + oc.cp_len;
        state_.intra_node_estimate = interpolate_linear(
            ls_estimate_symbol(own_rs_, own_sym, f.y), oc, static_cast<double>(body - f.window));
      }
    }
    if (pc.is_rs_symbol(peer_sym))
      inter_ = interpolate_linear(ls_estimate_symbol(peer_rs_, peer_sym, f.y), pc,
                                  static_cast<double>(cfg_.backoff()));
    if (inter_.empty()) throw EstimationError("no inter-node estimate before the first data symbol");

    CVec si_hat(f.y.size());
    if (cfg_.full_duplex && cfg_.digital_canceller)
      si_hat = rebuild_si(state_, counter_tx_symbol(state_, oc, in_.own_frames));
    const CVec cleaned = cancel_digital(f.y, si_hat);

    const auto& cells = data_[static_cast<std::size_t>(peer_sym)];
    CVec yc(cells.size()), h(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto i = static_cast<std::size_t>(cells[c]);
      yc[c] = cleaned[i];
      h[c] = inter_[i];
      if (!f.y_si.empty()) {
        out.si_before += std::norm(f.y_si[i]);
        out.si_after += std::norm(f.y_si[i] - si_hat[i]);
      }
      if (!f.y_des.empty()) {
        out.desired += std::norm(f.y_des[i]);
        out.impairment += std::norm(cleaned[i] - f.y_des[i]);
      }
    }
    EqualizedSymbol eq = zf_equalize(yc, h, cfg_.erasure_floor);
    out.z = std::move(eq.z);
    out.erased = std::move(eq.erased);
  }

  const ReceiverConfig& cfg_;
  const ReceiveInputs& in_;
  RsPattern own_rs_, peer_rs_;
  std::vector<std::vector<int>> data_;
  CancellerState state_;
  CVec inter_;
};

class DemapStage {
 public:
  DemapStage(const ReceiverConfig& cfg, const ReceiveInputs& in, DecodeResult& res)
      : cfg_(cfg), in_(in), res_(res), data_(data_cells_by_symbol(cfg.peer_cfg)) {}

  void operator()(EqItem e) {
    const FrameConfig& pc = cfg_.peer_cfg;
    const int per_frame = pc.symbols_per_frame();
    const int peer_sym = e.t % per_frame;
    const auto frame = static_cast<std::size_t>(e.t / per_frame);
    const auto& cells = data_[static_cast<std::size_t>(peer_sym)];

    DecodedSymbol d;
    d.index = e.t;
    d.tx_symbol = e.tx_symbol;
    res_.data_cells += cells.size();
    if (e.failed) {
      d.failed = true;
      d.error = std::move(e.error);
      ++res_.failed_symbols;
      res_.symbols.push_back(std::move(d));
      return;
    }

    const int bps = pc.bits_per_symbol();
    d.bits = qam_demap(e.z, pc.qam_order);
    d.erased = e.erased;
    CVec ref(cells.size());
    const bool truth = frame < in_.peer_frames.size();
    if (truth) {
      for (std::size_t c = 0; c < cells.size(); ++c)
        ref[c] = in_.peer_frames[frame].value(peer_sym, pc.subcarrier_of(cells[c]));
    } else {
      const CVec pts = constellation(pc.qam_order);
      for (std::size_t c = 0; c < cells.size(); ++c) {
        unsigned idx = 0;
        for (int b = 0; b < bps; ++b)
          idx = (idx << 1) | d.bits[c * static_cast<std::size_t>(bps) + static_cast<std::size_t>(b)];
        ref[c] = pts[idx];
      }
    }
    const std::vector<std::uint8_t> ref_bits = qam_demap(ref, pc.qam_order);

    double err = 0.0, pref = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (e.erased[c]) {
        ++res_.erased_cells;
        continue;
      }
      err += std::norm(e.z[c] - ref[c]);
      pref += std::norm(ref[c]);
      std::size_t wrong = 0;
      for (int b = 0; b < bps; ++b) {
        const std::size_t j = c * static_cast<std::size_t>(bps) + static_cast<std::size_t>(b);
        wrong += d.bits[j] != ref_bits[j];
      }
      d.bit_errors += wrong;
      d.counted_bits += static_cast<std::size_t>(bps);
      if (wrong == 0) d.correct_bits += static_cast<std::size_t>(bps);
    }
    d.equalized = std::move(e.z);
    d.evm_db = pref > 0.0 ? dsp::to_db(std::max(err, 1e-300) / pref) : 0.0;

    res_.error_power += err;
    res_.reference_power += pref;
    res_.bit_errors += d.bit_errors;
    res_.counted_bits += d.counted_bits;
    res_.correct_bits += d.correct_bits;
    res_.si_before += e.si_before;
    res_.si_after += e.si_after;
    res_.desired_power += e.desired;
    res_.impairment_after += e.impairment;
    res_.symbols.push_back(std::move(d));
  }

 private:
  const ReceiverConfig& cfg_;
  const ReceiveInputs& in_;
  DecodeResult& res_;
  std::vector<std::vector<int>> data_;
};

}  // namespace

DecodeResult decode_frames(const ReceiverConfig& cfg, const ReceiveInputs& in, DecodeMode mode) {
  if (in.rx == nullptr) throw ConfigError("decode needs a received stream");
  if (in.num_frames < 1) throw ConfigError("decode needs at least one frame");
  if (cfg.peer_cfg.symbol_len() != cfg.own_cfg.symbol_len() && cfg.full_duplex)
    throw ConfigError("full-duplex nodes must share one numerology");

  DecodeResult res;
  DemodStage demod(cfg, in);
  CancelStage cancel(cfg, in);
  DemapStage demap(cfg, in, res);
  const int total = in.num_frames * cfg.peer_cfg.symbols_per_frame();

  if (mode == DecodeMode::Sequential) {
    for (int t = 0; t < total; ++t) demap(cancel(demod(t)));
    return res;
  }

  BoundedQueue<FftItem> q1(cfg.queue_capacity);
  BoundedQueue<EqItem> q2(cfg.queue_capacity);
  std::exception_ptr err1, err2;
  {
    std::jthread producer([&] {
      try {
        for (int t = 0; t < total; ++t)
          if (!q1.push(demod(t))) break;
      } catch (...) {
        err1 = std::current_exception();
      }
      q1.close();
    });
    std::jthread middle([&] {
      try {
        while (auto f = q1.pop())
          if (!q2.push(cancel(*f))) break;
      } catch (...) {
        err2 = std::current_exception();
      }
      q1.close();
      q2.close();
    });
    try {
      while (auto e = q2.pop()) demap(std::move(*e));
    } catch (...) {
      q1.close();
      q2.close();
      throw;
    }
  }
  if (err1) std::rethrow_exception(err1);
  if (err2) std::rethrow_exception(err2);
  return res;
}

}  // namespace fdr
