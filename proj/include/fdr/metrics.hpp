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

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fdr/types.hpp"

namespace fdr {

enum class DuplexMode { Full, FddBaseline };

std::string to_string(DuplexMode m);
DuplexMode duplex_mode_from_string(const std::string& s);

/// One run's measurements. The first block is the CSV row; the rest is kept
/// for reports and tests.
struct LinkReport {
  std::string scenario_id;
  std::uint64_t seed = 0;
  DuplexMode duplex_mode = DuplexMode::Full;
  int qam_order = 4;
  double snr_db = 0.0;
  double analog_passive_db = 0.0;
  double analog_total_db = 0.0;
  double digital_db = 0.0;
  double total_cancellation_db = 0.0;
  double evm_percent = 0.0;
  double ber = 0.0;
  double throughput_bps = 0.0;

  bool ok = true;
  std::string error;
  std::int64_t desired_start_index = 0;
  std::int64_t si_start_index = 0;
  double desired_peak = 0.0;
  double si_peak = 0.0;
  double post_cancel_sinr_db = 0.0;
  std::size_t failed_symbols = 0;
  std::size_t erased_cells = 0;
};

/// Reports never carry values beyond this depth.
inline constexpr double kDepthCapDb = 150.0;

/// 10 log10(before / after); +inf for after = 0. Throws MeasurementError when
/// before is not positive or after is negative.
double cancellation_depth_db(double power_before, double power_after);

/// Clamps a depth to +/- kDepthCapDb.
double report_depth_db(double db);

/// sqrt(mean|z - ref|^2 / mean|ref|^2) * 100. Throws MeasurementError on empty
/// input or zero reference power.
double evm_percent(std::span<const cplx> z, std::span<const cplx> ref);

/// EVM against the nearest constellation point.
double evm_percent_blind(std::span<const cplx> z, int qam_order);

/// Goodput accounting for one transmission direction.
struct LinkTally {
  std::size_t correct_bits = 0;
  int frames = 0;
  double frame_duration_s = 0.01;
};

/// Correct payload bits per simulated second summed over the directions.
/// Throws ConfigError when a direction covers no frames.
double throughput_bps(std::span<const LinkTally> directions);

/// Full-duplex over dual-FDD throughput when every data cell decodes:
/// ratio of the two profiles' data cells per frame.
double capacity_throughput_ratio(int qam_order);

std::string csv_header();
std::string csv_row(const LinkReport& r);
void write_csv(std::ostream& os, std::span<const LinkReport> reports);
void write_csv(const std::string& path, std::span<const LinkReport> reports);

/// Order-independent merge of report shards: concatenation sorted by
/// (scenario_id, seed, duplex mode).
std::vector<LinkReport> merge_reports(std::vector<std::vector<LinkReport>> shards);

}  // namespace fdr
