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

#include "flashsim/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace flashsim {

void SamplerConfig::validate() const {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(t_max_horizon) || !positive(survival_floor) || !positive(time_grid_step) ||
        !positive(refinement_tolerance)) {
        throw Error(ErrorCode::InvalidArgument, "sampler settings must be positive");
    }
    if (time_grid_step > t_max_horizon) {
        throw Error(ErrorCode::InvalidArgument, "time grid step exceeds the horizon");
    }
}

SamplerPlan::SamplerPlan(const FlashModel& model, const SamplerConfig& config)
    : model_(&model), config_(config) {
    config_.validate();
    if (model.dim() == 0) throw Error(ErrorCode::InvalidArgument, "cannot sample a 0-dim model");
    coarse_ = semigroup_exp(model.generator(), config_.time_grid_step);
    levels_.reserve(kLevels);
    for (int j = 1; j <= kLevels; ++j) {
        levels_.push_back(semigroup_exp(model.generator(), std::ldexp(config_.time_grid_step, -j)));
    }
}

ComplexVector SamplerPlan::advance(const ComplexVector& v, double duration) const {
    if (duration < 0.0) throw Error(ErrorCode::NegativeTime, "advance needs duration >= 0");
    const double dt = config_.time_grid_step;
    ComplexVector out = v;
    auto full = static_cast<long long>(std::floor(duration / dt));
    double rest = duration - static_cast<double>(full) * dt;
    if (rest < 0.0) {
        --full;
        rest += dt;
    }
    for (long long k = 0; k < full; ++k) out = coarse_ * out;
    for (int j = 1; j <= kLevels && rest > 0.0; ++j) {
        const double piece = std::ldexp(dt, -j);
        if (rest >= piece) {
            out = levels_[static_cast<std::size_t>(j - 1)] * out;
            rest -= piece;
        }
    }
    return out;
}

std::optional<WaitingTime> sample_waiting_time(const SamplerPlan& plan, const ComplexVector& psi,
                                               double clock, Philox4x32& rng) {
    const SamplerConfig& cfg = plan.config();
    const double u = rng.uniform();
    const double target = std::max(1.0 - u, cfg.survival_floor);
    const double remaining = cfg.t_max_horizon - clock;
    if (!(remaining > 0.0)) return std::nullopt;

    const double dt = cfg.time_grid_step;
    ComplexVector left = psi;
    double t_left = 0.0;
    double s_left = psi.squaredNorm();
    ComplexVector right;
    double s_right = 0.0;
    bool bracketed = false;

    // Coarse march on the uniform grid.
    while (t_left + dt <= remaining) {
        ComplexVector next = plan.coarse_step() * left;
        const double s = next.squaredNorm();
        if (s <= target) {
            right = std::move(next);
            s_right = s;
            bracketed = true;
            break;
        }
        left = std::move(next);
        s_left = s;
        t_left += dt;
    }
    if (!bracketed) {
        const ComplexVector end = plan.advance(left, remaining - t_left);
        if (end.squaredNorm() > target) return std::nullopt;
        right = plan.coarse_step() * left;
        s_right = right.squaredNorm();
    }

    // Dyadic bisection with the cached short propagators.
    double width = dt;
    for (int j = 1; j <= SamplerPlan::kLevels && s_left - s_right > cfg.refinement_tolerance; ++j) {
        ComplexVector mid = plan.level(j) * left;
        const double s = mid.squaredNorm();
        width = std::ldexp(dt, -j);
        if (s <= target) {
            right = std::move(mid);
            s_right = s;
        } else {
            left = std::move(mid);
            s_left = s;
            t_left += width;
        }
    }

    double t_flash = t_left + width;
    if (t_flash > remaining) {
        t_flash = remaining;
        right = plan.advance(psi, remaining);
    }
    return WaitingTime{t_flash, std::move(right)};
}

std::pair<std::size_t, std::size_t> sample_flash_site(const FlashModel& model,
                                                      const ComplexVector& psi_decayed,
                                                      Philox4x32& rng) {
    const RealMatrix rates = flash_rate_density(model, psi_decayed);
    const double total = rates.sum();
    if (!(total > 0.0)) throw Error(ErrorCode::ZeroTotalRate, "no flash can occur in this state");
    const double target = rng.uniform() * total;
    double acc = 0.0;
    std::pair<std::size_t, std::size_t> last{0, 0};
    for (Eigen::Index i = 0; i < rates.rows(); ++i) {
        for (Eigen::Index m = 0; m < rates.cols(); ++m) {
            if (rates(i, m) <= 0.0) continue;
            acc += rates(i, m);
            last = {static_cast<std::size_t>(m), static_cast<std::size_t>(i)};
            if (target < acc) return last;
        }
    }
    return last;
}

StepResult step(const SamplerPlan& plan, TrajectoryState state, Philox4x32& rng) {
    const FlashModel& model = plan.model();
    const double horizon = plan.config().t_max_horizon;
    auto wait = sample_waiting_time(plan, state.psi, state.clock, rng);
    if (!wait) {
        if (state.clock < horizon) {
            const ComplexVector end = plan.advance(state.psi, horizon - state.clock);
            state.psi = end / end.norm();
            state.clock = horizon;
        }
        return StepResult{std::move(state), true};
    }

    double t = state.clock + wait->dt;
    if (!state.flashes.empty() && t <= state.flashes.back().t) {
        t = std::nextafter(state.flashes.back().t, horizon + 1.0);
    }
    const ComplexVector decayed = wait->decayed / wait->decayed.norm();
    const auto [site, label] = sample_flash_site(model, decayed, rng);
    state.psi = collapse(model, decayed, site, label);
    state.clock = t;
    state.flashes.push_back(FlashRecord{t, site, label});
    return StepResult{std::move(state), false};
}

namespace {

void require_snapshot_times(const std::vector<double>& times, double horizon) {
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < 0.0 || times[k] > horizon || (k > 0 && times[k] < times[k - 1])) {
            throw Error(ErrorCode::InvalidArgument,
                        "snapshot times must be sorted and within [0, horizon]");
        }
    }
}

}  // namespace

Trajectory run_trajectory(const SamplerPlan& plan, const ComplexVector& psi0, std::uint64_t stream_id,
                          const std::vector<double>& snapshot_times) {
    require_normalized(plan.model(), psi0);
    require_snapshot_times(snapshot_times, plan.config().t_max_horizon);

    Philox4x32 rng(plan.config().seed, stream_id);
    Trajectory out;
    out.snapshots.reserve(snapshot_times.size());
    std::size_t next_snapshot = 0;

    TrajectoryState state{psi0, 0.0, {}};
    while (true) {
        const ComplexVector psi_before = state.psi;
        const double clock_before = state.clock;
        StepResult r = step(plan, std::move(state), rng);
        state = std::move(r.state);
        // Snapshots strictly before the next flash see the evolved state;
        // after a halt every remaining snapshot is reached.
        while (next_snapshot < snapshot_times.size() &&
               (r.halted || snapshot_times[next_snapshot] < state.clock)) {
            const double s = snapshot_times[next_snapshot];
            ComplexVector v = plan.advance(psi_before, std::max(0.0, s - clock_before));
            out.snapshots.push_back(v / v.norm());
            ++next_snapshot;
        }
        if (r.halted) break;
        const double n = state.psi.norm();
        state.psi /= n;
    }
    out.flashes = std::move(state.flashes);
    out.final_state = std::move(state.psi);
    return out;
}

Trajectory run_trajectory(const FlashModel& model, const ComplexVector& psi0,
                          const SamplerConfig& cfg, const std::vector<double>& snapshot_times) {
    const SamplerPlan plan(model, cfg);
    return run_trajectory(plan, psi0, cfg.stream_id, snapshot_times);
}

namespace {

struct Partial {
    double count_sum = 0.0;
    double count_sq = 0.0;
    std::vector<double> survivors;
    std::vector<ComplexMatrix> rho;
    std::vector<RealVector> density;
    Eigen::MatrixXd histogram;
};

Partial combine(Partial a, const Partial& b) {
    a.count_sum += b.count_sum;
    a.count_sq += b.count_sq;
    for (std::size_t k = 0; k < a.rho.size(); ++k) {
        a.survivors[k] += b.survivors[k];
        a.rho[k] += b.rho[k];
        a.density[k] += b.density[k];
    }
    a.histogram += b.histogram;
    return a;
}

Partial tree_reduce(const std::vector<Partial>& leaves, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return leaves[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    return combine(tree_reduce(leaves, lo, mid), tree_reduce(leaves, mid, hi));
}

}  // namespace

EnsembleSummary run_ensemble(const FlashModel& model, const ComplexVector& psi0, std::size_t n_traj,
                             const SamplerConfig& cfg, const EnsembleOptions& options) {
    if (n_traj == 0) throw Error(ErrorCode::InvalidArgument, "ensemble needs n_traj >= 1");
    require_normalized(model, psi0);
    require_snapshot_times(options.snapshot_times, cfg.t_max_horizon);
    const SamplerPlan plan(model, cfg);
    const std::vector<double>& times = options.snapshot_times;

    std::vector<Partial> leaves(n_traj);
    std::vector<FlashHistory> kept(options.keep_trajectories ? n_traj : 0);
    std::vector<std::size_t> counts(n_traj);

    auto run_one = [&](std::size_t k) {
        Trajectory tr = run_trajectory(plan, psi0, cfg.stream_id + k, times);
        Partial p;
        const auto n = static_cast<double>(tr.flashes.size());
        p.count_sum = n;
        p.count_sq = n * n;
        p.histogram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(model.n_labels()),
                                            static_cast<Eigen::Index>(model.n_sites()));
        for (const FlashRecord& f : tr.flashes) {
            p.histogram(static_cast<Eigen::Index>(f.label), static_cast<Eigen::Index>(f.site)) += 1.0;
        }
        for (std::size_t s = 0; s < times.size(); ++s) {
            const bool survived = tr.flashes.empty() || tr.flashes.front().t > times[s];
            p.survivors.push_back(survived ? 1.0 : 0.0);
            const ComplexVector& v = tr.snapshots[s];
            p.rho.push_back(v * v.adjoint());
            p.density.push_back(matter_density(model, v));
        }
        counts[k] = tr.flashes.size();
        if (options.keep_trajectories) kept[k] = std::move(tr.flashes);
        leaves[k] = std::move(p);
    };

    const unsigned n_threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n_traj)));
    if (n_threads == 1) {
        for (std::size_t k = 0; k < n_traj; ++k) run_one(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> workers;
        for (unsigned w = 0; w < n_threads; ++w) {
            workers.emplace_back([&] {
                while (true) {
                    const std::size_t k = next.fetch_add(1);
                    if (k >= n_traj) return;
                    try {
                        run_one(k);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        next.store(n_traj);
                        return;
                    }
                }
            });
        }
        for (auto& w : workers) w.join();
        if (failure) std::rethrow_exception(failure);
    }

    const Partial total = tree_reduce(leaves, 0, n_traj);
    const auto n = static_cast<double>(n_traj);
    EnsembleSummary out;
    out.n_traj = n_traj;
    out.snapshot_times = times;
    out.flash_counts = std::move(counts);
    out.mean_flash_count = total.count_sum / n;
    out.var_flash_count = n_traj > 1 ? (total.count_sq - n * out.mean_flash_count * out.mean_flash_count) / (n - 1.0) : 0.0;
    for (std::size_t s = 0; s < times.size(); ++s) {
        out.survival_fraction.push_back(total.survivors[s] / n);
        out.rho.push_back(total.rho[s] / n);
        out.matter_density.push_back(total.density[s] / n);
    }
    out.flash_histogram = total.histogram;
    out.trajectories = std::move(kept);
    return out;
}

}  // namespace flashsim
