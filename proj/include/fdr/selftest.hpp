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

#include <string>
#include <vector>

namespace fdr {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Residual SI depth (dB) of frequency-domain cancellation when the SI
/// arrives `delay` samples after the FFT window's nominal symbol start,
/// with noise-free LS estimation on the node's own RS.
double cp_misalignment_depth_db(int delay);

/// Invariant checks that need no calibration: transform identities, OFDM
/// round trip, LS and interpolation exactness, subtraction linearity,
/// CP-bounded misalignment, LPF response and seeded reproducibility.
std::vector<CheckResult> run_selftest();

}  // namespace fdr
