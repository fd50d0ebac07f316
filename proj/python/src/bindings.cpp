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

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fdr/dsp.hpp"
#include "fdr/harness.hpp"
#include "fdr/metrics.hpp"
#include "fdr/selftest.hpp"
#include "fdr/sync_est.hpp"
#include "fdr/waveform.hpp"

namespace py = pybind11;
using namespace fdr;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;
using BitArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

CVec to_cvec(const CArray& a) {
  const auto r = a.unchecked<1>();
  CVec v(static_cast<std::size_t>(r.shape(0)));
  for (py::ssize_t i = 0; i < r.shape(0); ++i) v[static_cast<std::size_t>(i)] = r(i);
  return v;
}

CArray to_array(const CVec& v) {
  CArray a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<std::uint8_t> to_bits(const BitArray& a) {
  const auto r = a.unchecked<1>();
  return std::vector<std::uint8_t>(r.data(0), r.data(0) + r.shape(0));
}

BitArray bits_array(const std::vector<std::uint8_t>& b) {
  BitArray a(static_cast<py::ssize_t>(b.size()));
  std::copy(b.begin(), b.end(), a.mutable_data());
  return a;
}

TapList taps_from(const std::vector<std::array<double, 3>>& t) { return TapList(t.begin(), t.end()); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Full-duplex OFDM link simulator core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<SyncError>(m, "SyncError", PyExc_RuntimeError);
  py::register_exception<FramingError>(m, "FramingError", PyExc_ValueError);

  py::enum_<Profile>(m, "Profile")
      .value("FULL_DUPLEX_20MHZ", Profile::FullDuplex20MHz)
      .value("FDD_10MHZ", Profile::Fdd10MHz);

  py::class_<FrameConfig>(m, "FrameConfig")
      .def_static("make", &FrameConfig::make, py::arg("profile"), py::arg("qam_order") = 4, py::arg("node_id") = 0)
      .def_readonly("profile", &FrameConfig::profile)
      .def_readonly("fft_size", &FrameConfig::fft_size)
      .def_readonly("cp_len", &FrameConfig::cp_len)
      .def_readonly("sample_rate_hz", &FrameConfig::sample_rate_hz)
      .def_readonly("used_subcarriers", &FrameConfig::used_subcarriers)
      .def_readonly("qam_order", &FrameConfig::qam_order)
      .def_readonly("node_id", &FrameConfig::node_id)
      .def_property_readonly("symbol_len", &FrameConfig::symbol_len)
      .def_property_readonly("symbols_per_frame", &FrameConfig::symbols_per_frame)
      .def_property_readonly("frame_len", &FrameConfig::frame_len)
      .def_property_readonly("half_frame_len", &FrameConfig::half_frame_len)
      .def_property_readonly("data_capacity", [](const FrameConfig& c) { return data_capacity(c); })
      .def_property_readonly("payload_bits", [](const FrameConfig& c) { return payload_bits_per_frame(c); });

  m.def("qam_map", [](const BitArray& bits, int order) {
    const auto b = to_bits(bits);
    return to_array(qam_map(b, order));
  }, py::arg("bits"), py::arg("order"));
  m.def("qam_demap", [](const CArray& sym, int order) {
    const CVec s = to_cvec(sym);
    return bits_array(qam_demap(s, order));
  }, py::arg("symbols"), py::arg("order"));
  m.def("constellation", [](int order) { return to_array(constellation(order)); }, py::arg("order"));
  m.def("prbs_bits", [](std::uint64_t seed, std::size_t n) { return bits_array(prbs_bits(seed, n)); },
        py::arg("seed"), py::arg("count"));
  m.def("pss", [](int root) { const auto p = generate_pss(root);
    return to_array(CVec(p.values.begin(), p.values.end())); }, py::arg("root"));

  m.def("modulate_frame", [](const FrameConfig& cfg, const BitArray& bits) {
    const auto b = to_bits(bits);
    return to_array(ofdm_modulate(cfg, build_frame(cfg, b)).samples);
  }, py::arg("cfg"), py::arg("payload_bits"),
        "Time-domain samples of one frame carrying the payload; the frame starts at index 0.");
  m.def("demodulate_frame", [](const FrameConfig& cfg, const CArray& samples, std::int64_t frame_start) {
    const SampleStream x(0, to_cvec(samples));
    return to_array(data_symbols(cfg, ofdm_demodulate(cfg, x, frame_start)));
  }, py::arg("cfg"), py::arg("samples"), py::arg("frame_start") = 0,
        "Data-cell values of the frame beginning at frame_start, in fill order.");

  py::class_<SyncResult>(m, "SyncResult")
      .def_readonly("desired_start_index", &SyncResult::desired_start_index)
      .def_readonly("si_start_index", &SyncResult::si_start_index)
      .def_readonly("desired_peak", &SyncResult::desired_peak)
      .def_readonly("si_peak", &SyncResult::si_peak)
      .def_readonly("desired_detected", &SyncResult::desired_detected)
      .def_readonly("si_detected", &SyncResult::si_detected);
  m.def("synchronize", [](const FrameConfig& cfg, const CArray& rx, int own_root, int peer_root) {
    const SampleStream x(0, to_cvec(rx));
    py::gil_scoped_release nogil;
    return Synchronizer(cfg).run(x, own_root, peer_root);
  }, py::arg("cfg"), py::arg("rx"), py::arg("own_root") = 25, py::arg("peer_root") = 29);

  py::class_<Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readwrite("id", &Scenario::id)
      .def_readwrite("profile", &Scenario::profile)
      .def_readwrite("qam_down", &Scenario::qam_down)
      .def_readwrite("qam_up", &Scenario::qam_up)
      .def_readwrite("snr_db", &Scenario::snr_db)
      .def_readwrite("noise_below_si_db", &Scenario::noise_below_si_db)
      .def_readwrite("si_tx_db", &Scenario::si_tx_db)
      .def_property("si_channel", [](const Scenario& s) { return s.si_channel; },
                    [](Scenario& s, const std::vector<std::array<double, 3>>& t) { s.si_channel = taps_from(t); })
      .def_property("desired_channel", [](const Scenario& s) { return s.desired_channel; },
                    [](Scenario& s, const std::vector<std::array<double, 3>>& t) { s.desired_channel = taps_from(t); })
      .def_property("passive_isolation_db", [](const Scenario& s) { return s.analog.passive_isolation_db; },
                    [](Scenario& s, double v) { s.analog.passive_isolation_db = v; })
      .def_property("active_canceller", [](const Scenario& s) { return s.analog.active_enabled; },
                    [](Scenario& s, bool v) { s.analog.active_enabled = v; })
      .def_property("hardware_impairments",
                    [](const Scenario& s) { return s.impairments.dac_bits != 0 || s.impairments.adc_bits != 0; },
                    [](Scenario& s, bool v) { s.impairments = v ? ImpairmentConfig::hardware_default() : ImpairmentConfig{}; })
      .def_readwrite("digital_canceller", &Scenario::digital_canceller)
      .def_readwrite("both_directions", &Scenario::both_directions)
      .def_readwrite("seed", &Scenario::seed)
      .def_readwrite("num_frames", &Scenario::num_frames);

  py::class_<LinkReport>(m, "LinkReport")
      .def_readonly("scenario_id", &LinkReport::scenario_id)
      .def_property_readonly("duplex_mode", [](const LinkReport& r) { return to_string(r.duplex_mode); })
      .def_readonly("qam_order", &LinkReport::qam_order)
      .def_readonly("snr_db", &LinkReport::snr_db)
      .def_readonly("analog_passive_db", &LinkReport::analog_passive_db)
      .def_readonly("analog_total_db", &LinkReport::analog_total_db)
      .def_readonly("digital_db", &LinkReport::digital_db)
      .def_readonly("total_cancellation_db", &LinkReport::total_cancellation_db)
      .def_readonly("evm_percent", &LinkReport::evm_percent)
      .def_readonly("ber", &LinkReport::ber)
      .def_readonly("throughput_bps", &LinkReport::throughput_bps)
      .def_readonly("ok", &LinkReport::ok)
      .def_readonly("error", &LinkReport::error)
      .def("csv_row", [](const LinkReport& r) { return csv_row(r); });

  m.def("run_scenario", [](const Scenario& s) {
    py::gil_scoped_release nogil;
    return run_scenario(s);
  }, py::arg("scenario"));
  m.def("run_suite_text", [](const std::string& text, int threads) {
    const SuiteConfig suite = parse_suite(text);
    SuiteOptions opts;
    opts.threads = threads;
    py::gil_scoped_release nogil;
    return run_suite(suite, opts).csv;
  }, py::arg("text"), py::arg("threads") = 1, "Parses a scenario file body, runs it and returns the metrics CSV.");
  m.def("csv_header", &csv_header);

  m.def("cancellation_depth_db", &cancellation_depth_db, py::arg("power_before"), py::arg("power_after"));
  m.def("evm_percent", [](const CArray& z, const CArray& ref) {
    const CVec a = to_cvec(z), b = to_cvec(ref);
    return evm_percent(a, b);
  }, py::arg("z"), py::arg("ref"));
  m.def("capacity_throughput_ratio", &capacity_throughput_ratio, py::arg("qam_order"));
  m.def("dft", [](const CArray& x) {
    const CVec v = to_cvec(x);
    return to_array(dsp::dft(v));
  }, py::arg("x"));

  m.def("selftest", [] {
    std::vector<std::tuple<std::string, bool, std::string>> out;
    for (const auto& c : run_selftest()) out.emplace_back(c.name, c.passed, c.detail);
    return out;
  });
}
