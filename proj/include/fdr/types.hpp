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

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdr {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

inline constexpr double kPi = std::numbers::pi;

/// Complex baseband samples tagged with the global sample index of the first
/// element. The index is the alignment currency between streams: two streams
/// refer to the same instant when their global indices agree.
struct SampleStream {
  std::int64_t start = 0;
  CVec samples;

  SampleStream() = default;
  SampleStream(std::int64_t start_index, CVec data)
      : start(start_index), samples(std::move(data)) {}

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::int64_t end() const { return start + static_cast<std::int64_t>(samples.size()); }

  /// Sample at a global index; zero outside the stored span.
  cplx at(std::int64_t global) const {
    const std::int64_t i = global - start;
    if (i < 0 || i >= static_cast<std::int64_t>(samples.size())) return {};
    return samples[static_cast<std::size_t>(i)];
  }
};

// Error taxonomy. Each names the stage that rejected its input.

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DesignError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FramingError : std::runtime_error {
  FramingError(const std::string& what, std::size_t expected_bits)
      : std::runtime_error(what), expected(expected_bits) {}
  std::size_t expected;
};

struct TruncationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SyncError : std::runtime_error {
  SyncError(const std::string& what, double desired, double si)
      : std::runtime_error(what), desired_peak(desired), si_peak(si) {}
  double desired_peak;
  double si_peak;
};

struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AlignmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TuningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MeasurementError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, int line_no, std::string field_name)
      : std::runtime_error(what), line(line_no), field(std::move(field_name)) {}
  int line;
  std::string field;
};

}  // namespace fdr
