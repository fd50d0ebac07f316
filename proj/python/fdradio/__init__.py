# Copyright 2026 The fdradio Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Full-duplex OFDM link simulator."""

from ._core import (
    ConfigError,
    FramingError,
    FrameConfig,
    LinkReport,
    ParseError,
    Profile,
    Scenario,
    SyncError,
    SyncResult,
    cancellation_depth_db,
    capacity_throughput_ratio,
    constellation,
    csv_header,
    demodulate_frame,
    dft,
    evm_percent,
    modulate_frame,
    prbs_bits,
    pss,
    qam_demap,
    qam_map,
    run_scenario,
    run_suite_text,
    selftest,
    synchronize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
