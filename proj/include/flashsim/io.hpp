// Copyright 2026 The flashsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "flashsim/sampler.hpp"
#include "flashsim/verify.hpp"

namespace flashsim {

/// One line of flashes.jsonl.
struct FlashLogRecord {
    std::size_t trajectory_id = 0;
    std::size_t k = 0;
    double t = 0.0;
    std::size_t site = 0;
    std::vector<double> x;
    std::string label;

    bool operator==(const FlashLogRecord&) const = default;
};

/// Doubles are written with 17 significant digits.
std::string format_double(double v);

void write_flash_log(std::ostream& out, const FlashModel& model,
                     const std::vector<FlashHistory>& trajectories);
std::vector<FlashLogRecord> read_flash_log(std::istream& in);

/// Rows are sites, columns snapshot times; header "site,t=<time>,...".
void write_density_csv(std::ostream& out, const std::vector<double>& times,
                       const std::vector<RealVector>& density);
struct DensityTable {
    std::vector<double> times;
    std::vector<RealVector> density;  // one vector per time
};
DensityTable read_density_csv(std::istream& in);

struct RunSummary {
    std::size_t n_traj = 0;
    std::size_t total_flashes = 0;
    double mean_flash_count = 0.0;
    double var_flash_count = 0.0;
    std::vector<double> snapshot_times;
    std::vector<double> survival_fraction;
    double wall_time_s = 0.0;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};
RunSummary summarize(const EnsembleSummary& ensemble, double wall_time_s, std::uint64_t seed,
                     unsigned threads);
void write_summary(std::ostream& out, const RunSummary& summary);
RunSummary read_summary(std::istream& in);

void write_reports(std::ostream& out, const std::vector<CheckReport>& reports);
std::vector<CheckReport> read_reports(std::istream& in);

}  // namespace flashsim
