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

#include "fdr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <tuple>

#include "fdr/waveform.hpp"

namespace fdr {

std::string to_string(DuplexMode m) { return m == DuplexMode::Full ? "full" : "fdd_baseline"; }

DuplexMode duplex_mode_from_string(const std::string& s) {
  if (s == "full") return DuplexMode::Full;
  if (s == "fdd_baseline") return DuplexMode::FddBaseline;
  throw ConfigError("unknown duplex mode '" + s + "'");
}

double cancellation_depth_db(double power_before, double power_after) {
  if (!(power_before > 0.0)) throw MeasurementError("cancellation depth needs positive power before");
  if (power_after < 0.0) throw MeasurementError("power after cancellation is negative");
  if (power_after == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(power_before / power_after);
}

double report_depth_db(double db) { return std::clamp(db, -kDepthCapDb, kDepthCapDb); }

double evm_percent(std::span<const cplx> z, std::span<const cplx> ref) {
  if (z.empty() || z.size() != ref.size())
    throw MeasurementError("EVM needs equal, non-empty symbol and reference sets");
  double err = 0.0, pref = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    err += std::norm(z[i] - ref[i]);
    pref += std::norm(ref[i]);
  }
  if (pref <= 0.0) throw MeasurementError("EVM reference has zero power");
  return 100.0 * std::sqrt(err / pref);
}

double evm_percent_blind(std::span<const cplx> z, int qam_order) {
  const CVec pts = constellation(qam_order);
  CVec ref(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const cplx& p : pts) {
      const double d = std::norm(z[i] - p);
      if (d < best) {
        best = d;
        ref[i] = p;
      }
    }
  }
  return evm_percent(z, ref);
}

double throughput_bps(std::span<const LinkTally> directions) {
  double total = 0.0;
  for (const auto& d : directions) {
    if (d.frames < 1 || d.frame_duration_s <= 0.0)
      throw ConfigError("throughput needs at least one frame of positive duration");
    total += static_cast<double>(d.correct_bits) / (d.frames * d.frame_duration_s);
  }
  return total;
}

double capacity_throughput_ratio(int qam_order) {
  const FrameConfig fd = FrameConfig::make(Profile::FullDuplex20MHz, qam_order, 0);
  const FrameConfig fdd = FrameConfig::make(Profile::Fdd10MHz, qam_order, 0);
  const double fd_rate = 2.0 * static_cast<double>(payload_bits_per_frame(fd)) / fd.frame_duration_s();
  const double fdd_rate = 2.0 * static_cast<double>(payload_bits_per_frame(fdd)) / fdd.frame_duration_s();
  return fd_rate / fdd_rate;
}

std::string csv_header() {
  return "scenario_id,seed,duplex_mode,qam_order,snr_db,analog_passive_db,analog_total_db,"
         "digital_db,total_cancellation_db,evm_percent,ber,throughput_bps";
}

std::string csv_row(const LinkReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, ",%llu,%s,%d,%.1f,%.1f,%.1f,%.1f,%.1f,%.3f,%.6e,%.1f",
                static_cast<unsigned long long>(r.seed), to_string(r.duplex_mode).c_str(),
                r.qam_order, r.snr_db, report_depth_db(r.analog_passive_db),
                report_depth_db(r.analog_total_db), report_depth_db(r.digital_db),
                report_depth_db(r.total_cancellation_db), r.evm_percent, r.ber, r.throughput_bps);
  return r.scenario_id + buf;
}

void write_csv(std::ostream& os, std::span<const LinkReport> reports) {
  os << csv_header() << '\n';
  for (const auto& r : reports) os << csv_row(r) << '\n';
}

void write_csv(const std::string& path, std::span<const LinkReport> reports) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(f, reports);
}

std::vector<LinkReport> merge_reports(std::vector<std::vector<LinkReport>> shards) {
  std::vector<LinkReport> out;
  for (auto& s : shards)
    for (auto& r : s) out.push_back(std::move(r));
  std::stable_sort(out.begin(), out.end(), [](const LinkReport& a, const LinkReport& b) {
    return std::tie(a.scenario_id, a.seed, a.duplex_mode) <
           std::tie(b.scenario_id, b.seed, b.duplex_mode);
  });
  return out;
}

}  // namespace fdr
