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

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "flashsim/model.hpp"
#include "flashsim/rng.hpp"

namespace flashsim {

struct SamplerConfig {
    double t_max_horizon = 1.0;
    /// Survival probabilities below this floor count as certain decay.
    double survival_floor = 1e-12;
    double time_grid_step = 0.1;
    /// Bisection stops once the CDF bracket is narrower than this.
    double refinement_tolerance = 1e-10;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;

    void validate() const;
};

/// Propagators for one (model, config) pair: e^{G dt} for the coarse grid
/// step and e^{G dt / 2^j} for the dyadic refinement levels.
class SamplerPlan {
   public:
    static constexpr int kLevels = 60;

    SamplerPlan(const FlashModel& model, const SamplerConfig& config);

    const FlashModel& model() const noexcept { return *model_; }
    const SamplerConfig& config() const noexcept { return config_; }

    const ComplexMatrix& coarse_step() const noexcept { return coarse_; }
    const ComplexMatrix& level(int j) const { return levels_.at(static_cast<std::size_t>(j - 1)); }

    /// W_duration v using the cached propagators; durations are resolved to
    /// time_grid_step / 2^kLevels.
    ComplexVector advance(const ComplexVector& v, double duration) const;

   private:
    const FlashModel* model_;
    SamplerConfig config_;
    ComplexMatrix coarse_;
    std::vector<ComplexMatrix> levels_;
};

struct WaitingTime {
    double dt = 0.0;
    /// W_dt psi, unnormalized.
    ComplexVector decayed;
};

/// Draws the waiting time to the next flash from a state at `clock` by
/// inverting the survival function ||W_t psi||^2. Returns nullopt when no
/// flash happens before the horizon.
std::optional<WaitingTime> sample_waiting_time(const SamplerPlan& plan, const ComplexVector& psi,
                                               double clock, Philox4x32& rng);

/// Categorical draw of (site, label) with weights <psi|Lambda_i(x)|psi>.
std::pair<std::size_t, std::size_t> sample_flash_site(const FlashModel& model,
                                                      const ComplexVector& psi_decayed,
                                                      Philox4x32& rng);

struct TrajectoryState {
    ComplexVector psi;
    double clock = 0.0;
    FlashHistory flashes;
};

struct StepResult {
    TrajectoryState state;
    bool halted = false;
};

StepResult step(const SamplerPlan& plan, TrajectoryState state, Philox4x32& rng);

struct Trajectory {
    FlashHistory flashes;
    ComplexVector final_state;
    /// Conditional wave function at each requested snapshot time.
    std::vector<ComplexVector> snapshots;
};

/// Runs one trajectory with the stream (cfg.seed, cfg.stream_id).
Trajectory run_trajectory(const FlashModel& model, const ComplexVector& psi0,
                          const SamplerConfig& cfg, const std::vector<double>& snapshot_times = {});
Trajectory run_trajectory(const SamplerPlan& plan, const ComplexVector& psi0, std::uint64_t stream_id,
                          const std::vector<double>& snapshot_times = {});

struct EnsembleSummary {
    std::size_t n_traj = 0;
    std::vector<double> snapshot_times;
    std::vector<std::size_t> flash_counts;
    double mean_flash_count = 0.0;
    double var_flash_count = 0.0;
    /// Fraction of trajectories with no flash up to each snapshot time.
    std::vector<double> survival_fraction;
    /// sum |psi_t><psi_t| / n at each snapshot.
    std::vector<ComplexMatrix> rho;
    /// Average matter density at each snapshot (one entry per site).
    std::vector<RealVector> matter_density;
    /// Flash counts per (label, site) over all trajectories.
    Eigen::MatrixXd flash_histogram;
    /// Kept only when requested.
    std::vector<FlashHistory> trajectories;
};

struct EnsembleOptions {
    std::vector<double> snapshot_times;
    unsigned threads = 1;
    bool keep_trajectories = false;
};

/// Trajectory k uses stream cfg.stream_id + k. The reduction is a fixed
/// pairwise tree over trajectory index, so results do not depend on the
/// number of threads.
EnsembleSummary run_ensemble(const FlashModel& model, const ComplexVector& psi0, std::size_t n_traj,
                             const SamplerConfig& cfg, const EnsembleOptions& options = {});

}  // namespace flashsim
