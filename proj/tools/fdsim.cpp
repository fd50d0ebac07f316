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

// fdsim: command-line front end for scenario suites, demos, golden vectors
// and the built-in self checks.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "fdr/harness.hpp"
#include "fdr/selftest.hpp"
#include "svg_plot.hpp"

namespace fs = std::filesystem;

namespace {

void print_report(const fdr::LinkReport& r) {
  std::printf("%-24s %-12s qam=%-3d analog=%.1f dB digital=%.1f dB evm=%.3f%% ber=%.3e thr=%.1f Mbps%s%s\n",
              r.scenario_id.c_str(), fdr::to_string(r.duplex_mode).c_str(), r.qam_order,
              r.analog_total_db, r.digital_db, r.evm_percent, r.ber, r.throughput_bps / 1e6,
              r.ok ? "" : "  ERROR: ", r.error.c_str());
}

int plot_dir(const std::string& dir) {
  int made = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string p = e.path().string();
    std::vector<std::string> hdr;
    std::vector<std::vector<double>> cols;
    const auto ends = [&](const std::string& suf) {
      return p.size() > suf.size() && p.compare(p.size() - suf.size(), suf.size(), suf) == 0;
    };
    if (ends("_constellation.csv")) {
      if (!fdsim::read_csv(p, hdr, cols) || cols.size() < 3) continue;
      const std::string stem = p.substr(0, p.size() - 4);
      fdsim::SvgPlot plot(fs::path(stem).filename().string(), "in-phase", "quadrature");
      plot.scatter({"equalized", cols[1], cols[2]});
      plot.save(stem + ".svg");
      ++made;
    } else if (ends("_psd.csv")) {
      if (!fdsim::read_csv(p, hdr, cols) || cols.size() < 2 || cols[0].empty()) continue;
      const std::string stem = p.substr(0, p.size() - 4);
      fdsim::SvgPlot plot(fs::path(stem).filename().string(), "frequency (MHz)", "PSD (dB/Hz)");
      std::vector<double> mhz(cols[0]);
      for (auto& f : mhz) f /= 1e6;
      double lo = 1e300, hi = -1e300;
      for (std::size_t c = 1; c < cols.size(); ++c)
        for (double v : cols[c]) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      lo = std::max(lo, hi - 160.0);
      plot.set_range(mhz.front(), mhz.back(), lo - 5.0, hi + 5.0);
      for (std::size_t c = 1; c < cols.size(); ++c) plot.line({hdr[c], mhz, cols[c]});
      plot.save(stem + ".svg");
      ++made;
    }
  }
  return made;
}

fdr::Scenario demo_scenario(bool digital, int frames, std::uint64_t seed) {
  fdr::Scenario s;
  s.id = digital ? "demo_digital_on" : "demo_digital_off";
  s.qam_down = 4;
  s.qam_up = 64;
  s.snr_db = 32.1;
  s.si_tx_db = 67.0;
  s.si_channel = {{0.0, 0.0, 0.0}, {3.0, -20.0, 40.0}};
  s.impairments = fdr::ImpairmentConfig::hardware_default();
  s.analog.active_enabled = true;
  s.digital_canceller = digital;
  s.both_directions = false;
  s.num_frames = frames;
  s.seed = seed;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Full-duplex OFDM link simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a scenario suite and write the metrics CSV");
  std::string config, out_dir;
  std::uint64_t seed_override = 0;
  bool dump_iq = false;
  int threads = 1;
  run->add_option("--config", config, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--out-dir", out_dir, "Output directory (default: print CSV to stdout)");
  auto* seed_opt = run->add_option("--seed-override", seed_override, "Replace every scenario seed");
  run->add_flag("--dump-iq", dump_iq, "Also write received IQ per scenario");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* demo = app.add_subcommand("demo", "Constellation with the digital canceller off and on");
  std::string demo_dir = "demo_out";
  int demo_frames = 1;
  std::uint64_t demo_seed = 1;
  demo->add_option("--out-dir", demo_dir, "Output directory");
  demo->add_option("--frames", demo_frames, "Frames per run")->check(CLI::PositiveNumber);
  demo->add_option("--seed", demo_seed, "Seed");

  auto* goldens = app.add_subcommand("goldens", "Write fixed-seed golden IQ vectors");
  std::string golden_dir = "goldens";
  goldens->add_option("--out-dir", golden_dir, "Output directory");

  auto* selftest = app.add_subcommand("selftest", "Run the built-in invariant checks");

  auto* plot = app.add_subcommand("plot", "Render constellation and PSD CSVs in a directory as SVG");
  std::string plot_in;
  plot->add_option("dir", plot_in, "Directory holding *_constellation.csv / *_psd.csv")
      ->required()
      ->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      fdr::SuiteOptions opts;
      opts.threads = threads;
      opts.out_dir = out_dir;
      opts.dump_iq = dump_iq;
      if (*seed_opt) opts.seed_override = seed_override;
      const fdr::SuiteResult res = fdr::run_suite(config, opts);
      if (out_dir.empty()) {
        std::cout << res.csv;
      } else {
        for (const auto& r : res.reports) print_report(r);
      }
      for (const auto& r : res.reports)
        if (!r.ok) std::cerr << r.scenario_id << ": " << r.error << '\n';
      return res.all_ok() ? 0 : 1;
    }
    if (*demo) {
      int rc = 0;
      for (bool digital : {false, true}) {
        const fdr::Scenario s = demo_scenario(digital, demo_frames, demo_seed);
        fdr::RunArtifacts a;
        const fdr::LinkReport r = fdr::run_scenario(s, &a);
        print_report(r);
        fdr::write_dumps(demo_dir, s, a, false);
        if (!r.ok) rc = 1;
      }
      plot_dir(demo_dir);
      std::printf("wrote plots to %s\n", demo_dir.c_str());
      return rc;
    }
    if (*goldens) {
      for (const auto& p : fdr::write_goldens(golden_dir)) std::printf("%s.f32\n", p.c_str());
      return 0;
    }
    if (*selftest) {
      bool all = true;
      for (const auto& c : fdr::run_selftest()) {
        std::printf("%s %-24s %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
        all = all && c.passed;
      }
      return all ? 0 : 1;
    }
    if (*plot) {
      std::printf("%d plots written\n", plot_dir(plot_in));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "fdsim: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
