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
#include <optional>
#include <string>
#include <vector>

#include "fdr/cancel_decode.hpp"
#include "fdr/frontend.hpp"
#include "fdr/metrics.hpp"
#include "fdr/waveform.hpp"

namespace fdr {

using TapList = std::vector<std::array<double, 3>>;  // (delay, gain_db, phase_deg)

/// One experiment. Node 0 is the observing node: it transmits `qam_down`
/// (its own signal is the SI) and receives `qam_up` from node 1.
struct Scenario {
  std::string id = "scenario";
  Profile profile = Profile::FullDuplex20MHz;
  int qam_down = 4;
  int qam_up = 64;
  // Desired in-band Es/N0 per subcarrier at the receiver.
  double snr_db = 30.0;
  // When set, noise is placed this far below the residual SI per subcarrier
  // instead of being derived from snr_db.
  std::optional<double> noise_below_si_db;
  // Own transmit level relative to the received desired signal.
  double si_tx_db = 60.0;
  TapList si_channel{{0.0, 0.0, 0.0}};
  TapList desired_channel{{0.0, 0.0, 0.0}};
  ImpairmentConfig impairments;
  double dac_headroom_db = 12.0;  // DAC/ADC full scale above the stream rms
  double adc_headroom_db = 12.0;
  AnalogCancelConfig analog;
  bool tune_active_tap = true;  // fit the active tap on a probe before the run
  int active_max_delay = 32;
  bool digital_canceller = true;
  bool both_directions = true;
  std::uint64_t seed = 1;
  int num_frames = 1;
  // Burst placement in the capture; negative draws from the seed.
  int own_offset = -1;
  int peer_lag = -1;

  DuplexMode duplex_mode() const {
    return profile == Profile::FullDuplex20MHz ? DuplexMode::Full : DuplexMode::FddBaseline;
  }
  void validate() const;
};

/// Observed-direction outputs kept for dumps and tests.
struct RunArtifacts {
  SampleStream rx;
  SampleStream si_coupled;  // SI after the coupling channel, before isolation
  SampleStream si_passive;
  SampleStream si_residual;  // after active cancellation
  DecodeResult primary;
  std::optional<DecodeResult> reverse;
  SyncResult sync;
  TapTuning tuning;
  std::int64_t true_desired_index = 0;
  std::int64_t true_si_index = 0;
};

/// Runs the scenario end to end. Sync and decode failures are recorded in
/// the report (ok = false) rather than thrown; invalid scenarios throw.
LinkReport run_scenario(const Scenario& s, RunArtifacts* artifacts = nullptr);

// --- Suite configuration ----------------------------------------------------

struct SuiteConfig {
  std::string name = "suite";
  std::vector<Scenario> scenarios;
};

/// Parses the scenario file format described in docs/config.md.
/// Throws ParseError with the line number and field on malformed input,
/// unknown keys and duplicate scenario ids.
SuiteConfig parse_suite(const std::string& text);
SuiteConfig load_suite(const std::string& path);

struct SuiteOptions {
  int threads = 1;
  std::optional<std::uint64_t> seed_override;
  std::string out_dir;  // empty: no files written
  bool dump_iq = false;
};

struct SuiteResult {
  std::vector<LinkReport> reports;  // merged, sorted by scenario id
  std::string csv;
  bool all_ok() const;
};

SuiteResult run_suite(const SuiteConfig& suite, const SuiteOptions& opts = {});
SuiteResult run_suite(const std::string& config_path, const SuiteOptions& opts = {});

// --- Dumps ------------------------------------------------------------------

/// Welch power spectral density (Hann window, 50% overlap), centred, in dB.
struct Psd {
  std::vector<double> freq_hz;
  std::vector<double> power_db;
};
Psd welch_psd(const SampleStream& x, double sample_rate_hz, int segment = 1024);

/// Writes <prefix>_constellation.csv, <prefix>_psd.csv and, with dump_iq,
/// <prefix>_rx.f32 plus its sidecar.
void write_dumps(const std::string& out_dir, const Scenario& s, const RunArtifacts& a,
                 bool dump_iq);

/// Fixed-seed golden vectors: one pilot-and-payload frame per profile.
/// Returns the written base paths.
std::vector<std::string> write_goldens(const std::string& out_dir);

}  // namespace fdr
