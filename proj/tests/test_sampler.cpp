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


#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "flashsim/sampler.hpp"
#include "helpers.hpp"

using namespace flashsim;
using namespace flashsim::testing;

namespace {

SamplerConfig config(double horizon, double step = 0.1, std::uint64_t seed = 1) {
    SamplerConfig c;
    c.t_max_horizon = horizon;
    c.time_grid_step = step;
    c.seed = seed;
    return c;
}

double chi2_pvalue(const std::vector<double>& observed, const std::vector<double>& expected) {
    double stat = 0.0;
    int dof = -1;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        if (expected[k] <= 0.0) continue;
        stat += (observed[k] - expected[k]) * (observed[k] - expected[k]) / expected[k];
        ++dof;
    }
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), stat));
}

}  // namespace

TEST_CASE("sampler config validation") {
    SamplerConfig c = config(1.0);
    CHECK_NOTHROW(c.validate());
    c.survival_floor = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = config(1.0, 2.0);
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("advance equals the exact propagator") {
    Philox4x32 rng(21, 0);
    const FlashModel m = random_model(4, 2, 1, rng);
    const SamplerPlan plan(m, config(5.0, 0.25));
    const ComplexVector v = random_state(4, rng);
    for (double t : {0.0, 0.1, 0.25, 0.6180339887, 3.3}) {
        CHECK((plan.advance(v, t) - semigroup_exp(m.generator(), t) * v).norm() < 1e-12);
    }
}

TEST_CASE("no flashes without rates") {
    const FlashModel m = diagonal_model({0.0, 0.0}, 2);
    const SamplerPlan plan(m, config(3.0));
    Philox4x32 rng(1, 0);
    ComplexVector psi = ComplexVector::Zero(2);
    psi(0) = 1.0;
    CHECK_FALSE(sample_waiting_time(plan, psi, 0.0, rng).has_value());
    const Trajectory t = run_trajectory(m, psi, config(3.0));
    CHECK(t.flashes.empty());
    CHECK((t.final_state - psi).norm() < 1e-14);
}

TEST_CASE("waiting times are exponential for a scalar total rate") {
    const double lambda = 2.0;
    const FlashModel m = diagonal_model({lambda, lambda}, 2);
    const SamplerPlan plan(m, config(100.0, 0.1));
    Philox4x32 rng(3, 0);
    ComplexVector psi = ComplexVector::Constant(2, Complex(1.0 / std::sqrt(2.0)));
    const int n = 20000;
    const int bins = 20;
    std::vector<double> observed(bins + 1, 0.0);
    std::vector<double> expected(bins + 1, 0.0);
    const double width = 0.1;
    for (int k = 0; k < n; ++k) {
        const auto w = sample_waiting_time(plan, psi, 0.0, rng);
        REQUIRE(w.has_value());
        CHECK(w->dt > 0.0);
        const int b = std::min(bins, static_cast<int>(w->dt / width));
        observed[b] += 1;
    }
    for (int b = 0; b < bins; ++b) {
        expected[b] = n * (std::exp(-lambda * b * width) - std::exp(-lambda * (b + 1) * width));
    }
    expected[bins] = n * std::exp(-lambda * bins * width);
    CHECK(chi2_pvalue(observed, expected) > 1e-3);
}

TEST_CASE("flash sites follow the rate density") {
    Philox4x32 mrng(22, 0);
    const FlashModel m = random_model(3, 3, 2, mrng);
    const ComplexVector psi = random_state(3, mrng);
    const RealMatrix rates = flash_rate_density(m, psi);
    Philox4x32 rng(4, 0);
    const int n = 30000;
    std::vector<double> observed(6, 0.0);
    std::vector<double> expected(6, 0.0);
    for (int k = 0; k < n; ++k) {
        const auto [site, label] = sample_flash_site(m, psi, rng);
        observed[label * 3 + site] += 1;
    }
    for (int i = 0; i < 2; ++i)
        for (int x = 0; x < 3; ++x) expected[i * 3 + x] = n * rates(i, x) / rates.sum();
    CHECK(chi2_pvalue(observed, expected) > 1e-3);

    const FlashModel zero = diagonal_model({0.0, 0.0}, 2);
    CHECK_THROWS_AS(sample_flash_site(zero, psi.head(2) / psi.head(2).norm(), rng), Error);
}

TEST_CASE("trajectories are time-ordered, bounded and normalized") {
    Philox4x32 mrng(23, 0);
    const FlashModel m = random_model(4, 3, 2, mrng, 2.0);
    const ComplexVector psi = random_state(4, mrng);
    const std::vector<double> snaps{0.0, 0.5, 1.0, 2.0};
    for (std::uint64_t s = 0; s < 20; ++s) {
        SamplerConfig c = config(2.0, 0.1, 9);
        c.stream_id = s;
        const Trajectory t = run_trajectory(m, psi, c, snaps);
        double last = 0.0;
        for (const auto& f : t.flashes) {
            CHECK(f.t > last);
            CHECK(f.t <= 2.0);
            last = f.t;
        }
        CHECK(t.final_state.norm() == doctest::Approx(1.0));
        REQUIRE(t.snapshots.size() == snaps.size());
        CHECK((t.snapshots[0] - psi).norm() < 1e-14);
        for (std::size_t k = 0; k < snaps.size(); ++k) {
            FlashHistory before;
            for (const auto& f : t.flashes) {
                if (f.t <= snaps[k]) before.push_back(f);
            }
            const ComplexVector expect = conditional_wave_function(m, psi, before, snaps[k]);
            CHECK((t.snapshots[k] - expect).norm() < 1e-8);
        }
    }
}

TEST_CASE("same seed, same trajectory; ensembles do not depend on thread count") {
    Philox4x32 mrng(24, 0);
    const FlashModel m = random_model(3, 2, 1, mrng);
    const ComplexVector psi = random_state(3, mrng);
    const SamplerConfig c = config(3.0, 0.2, 77);
    const Trajectory a = run_trajectory(m, psi, c);
    const Trajectory b = run_trajectory(m, psi, c);
    CHECK(a.flashes == b.flashes);

    EnsembleOptions o1;
    o1.snapshot_times = {1.0, 3.0};
    o1.keep_trajectories = true;
    EnsembleOptions o4 = o1;
    o4.threads = 4;
    const EnsembleSummary s1 = run_ensemble(m, psi, 300, c, o1);
    const EnsembleSummary s4 = run_ensemble(m, psi, 300, c, o4);
    CHECK(s1.trajectories == s4.trajectories);
    CHECK(s1.flash_counts == s4.flash_counts);
    CHECK(s1.mean_flash_count == s4.mean_flash_count);
    for (std::size_t k = 0; k < 2; ++k) CHECK(max_abs_diff(s1.rho[k], s4.rho[k]) == 0.0);

    // Trajectory k uses stream stream_id + k.
    SamplerConfig c5 = c;
    c5.stream_id = 5;
    CHECK(run_trajectory(m, psi, c5).flashes == s1.trajectories[5]);
}

TEST_CASE("ensemble summary statistics") {
    const double lambda = 1.5;
    const FlashModel m = diagonal_model({lambda, lambda}, 2);
    ComplexVector psi = ComplexVector::Zero(2);
    psi(1) = 1.0;
    EnsembleOptions o;
    o.snapshot_times = {0.0, 1.0};
    const EnsembleSummary s = run_ensemble(m, psi, 4000, config(2.0, 0.1, 5), o);
    const double mean = lambda * 2.0;
    CHECK(std::abs(s.mean_flash_count - mean) < 3.0 * std::sqrt(mean / 4000.0));
    CHECK(s.survival_fraction[0] == 1.0);
    CHECK(std::abs(s.survival_fraction[1] - std::exp(-lambda)) < 3.0 * std::sqrt(0.25 / 4000.0) + 1e-3);
    CHECK(s.rho[1].trace().real() == doctest::Approx(1.0));
    CHECK(s.flash_histogram.sum() == doctest::Approx(static_cast<double>(
                                          std::accumulate(s.flash_counts.begin(), s.flash_counts.end(), std::size_t{0}))));
    // All flashes at the occupied site.
    CHECK(s.flash_histogram(0, 0) == 0.0);
}
