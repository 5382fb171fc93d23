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


// Acceptance suite: prints one [PASS]/[FAIL] line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "flashsim/io.hpp"
#include "flashsim/verify.hpp"
#include "helpers.hpp"

using namespace flashsim;
using namespace flashsim::testing;

namespace {

struct Outcome {
    bool pass = false;
    std::string summary;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double spectral_norm(const ComplexMatrix& a) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

// Pearson chi-square p-value. Cells with expected count below 5 are pooled.
double chi2_pvalue(const std::vector<double>& observed, const std::vector<double>& expected, int* dof_out) {
    double stat = 0.0;
    int cells = 0;
    double pool_obs = 0.0;
    double pool_exp = 0.0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        if (expected[k] < 5.0) {
            pool_obs += observed[k];
            pool_exp += expected[k];
            continue;
        }
        stat += (observed[k] - expected[k]) * (observed[k] - expected[k]) / expected[k];
        ++cells;
    }
    if (pool_exp > 0.0) {
        stat += (pool_obs - pool_exp) * (pool_obs - pool_exp) / pool_exp;
        ++cells;
    }
    const int dof = cells - 1;
    *dof_out = dof;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), stat));
}

// ---------------------------------------------------------------------------

Outcome criterion_normalization() {
    const auto start = std::chrono::steady_clock::now();
    Philox4x32 rng(101, 0);
    double worst = 0.0;
    const int n_models = 24;
    for (int k = 0; k < n_models; ++k) {
        const Eigen::Index d = 2 + (k * 7) % 15;  // 2..16
        const std::size_t sites = 1 + static_cast<std::size_t>(k % 4);
        const std::size_t labels = 1 + static_cast<std::size_t>(k % 2);
        const FlashModel m = random_model(d, sites, labels, rng);
        const ComplexVector psi = random_state(d, rng);
        const double t_max = 10.0 / spectral_norm(m.total_rate());
        const auto r = check_normalization(m, psi, {t_max, 4096, QuadratureRule::Simpson}, 1e-6);
        worst = std::max(worst, r.metric);
    }
    const double elapsed = seconds_since(start);
    return {worst <= 1e-6 && elapsed < 60.0,
            fmt("%d random models, dim <= 16, Simpson n = 4096: max defect %.3g (<= 1e-6), %.1f s (< 60 s)",
                n_models, worst, elapsed)};
}

Outcome criterion_consistency() {
    Philox4x32 rng(102, 0);
    double min_simpson = 1e9;
    double min_trap = 1e9;
    for (int k = 0; k < 4; ++k) {
        const FlashModel m = random_model(4, 2, 1 + static_cast<std::size_t>(k % 2), rng);
        for (std::size_t n : {1u, 2u}) {
            const auto s = check_consistency(m, n, {3.0, 32, QuadratureRule::Simpson}, 1.0, 4, 7 + k);
            const auto t = check_consistency(m, n, {3.0, 32, QuadratureRule::Trapezoid}, 1.0, 4, 7 + k);
            min_simpson = std::min(min_simpson, s.detail("observed_order"));
            min_trap = std::min(min_trap, t.detail("observed_order"));
        }
    }
    const FlashModel delta = build_grw_model(2, Lattice::ring(3), RateProfile::delta(0.8, {1.0, 1.7}), {});
    double exact = 0.0;
    for (std::size_t n : {1u, 2u, 3u}) {
        exact = std::max(exact, check_consistency(delta, n, {5.0, 2, QuadratureRule::Exact}, 1e-12).metric);
    }
    const bool pass = min_simpson >= 4.0 - 0.2 && min_trap >= 2.0 - 0.2 && exact <= 1e-12;
    return {pass, fmt("n = 1, 2 observed order: Simpson %.2f (>= 3.8), trapezoid %.2f (>= 1.8); "
                      "delta-profile exact error %.2g (<= 1e-12)",
                      min_simpson, min_trap, exact)};
}

Outcome criterion_exponential_law() {
    // One particle on a ring with a wide Gaussian profile: the total rate is
    // a multiple of the identity while H still moves the particle.
    HamiltonianSpec spec;
    spec.hopping = 0.5;
    spec.potential = {0.3, 0.0, -0.2, 0.1, 0.0};
    const FlashModel m = build_grw_model(1, Lattice::ring(5), RateProfile::gaussian(0.4, 2.0), spec);
    const double lambda = m.total_rate()(0, 0).real();
    const ComplexVector psi = ComplexVector::Unit(5, 0);

    SamplerConfig cfg;
    cfg.t_max_horizon = 60.0 / lambda;
    cfg.time_grid_step = 0.1 / lambda;
    cfg.seed = 2026;
    const SamplerPlan plan(m, cfg);
    Philox4x32 rng(cfg.seed, 0);
    const int n = 100000;
    std::vector<double> waits;
    waits.reserve(n);
    for (int k = 0; k < n; ++k) {
        const auto w = sample_waiting_time(plan, psi, 0.0, rng);
        waits.push_back(w ? w->dt : cfg.t_max_horizon);
    }
    std::sort(waits.begin(), waits.end());
    double ks = 0.0;
    for (int k = 0; k < n; ++k) {
        const double f = -std::expm1(-lambda * waits[static_cast<std::size_t>(k)]);
        ks = std::max({ks, (k + 1.0) / n - f, f - static_cast<double>(k) / n});
    }

    const double horizon = 5.0 / lambda;
    SamplerConfig run_cfg = cfg;
    run_cfg.t_max_horizon = horizon;
    run_cfg.time_grid_step = horizon / 20;
    const std::size_t n_traj = 10000;
    const EnsembleSummary s = run_ensemble(m, psi, n_traj, run_cfg);
    const double mu = lambda * horizon;
    const double mean_sigma = std::sqrt(mu / static_cast<double>(n_traj));
    const double var_sigma = std::sqrt((mu + 2.0 * mu * mu) / static_cast<double>(n_traj));
    const double mean_z = (s.mean_flash_count - mu) / mean_sigma;
    const double var_z = (s.var_flash_count - mu) / var_sigma;
    const bool pass = ks < 0.006 && std::abs(mean_z) <= 3.0 && std::abs(var_z) <= 3.0;
    return {pass, fmt("KS distance %.4f (< 0.006) over %d waits; counts over lambda T = %.1f: "
                      "mean z = %.2f, variance z = %.2f (|z| <= 3)",
                      ks, n, mu, mean_z, var_z)};
}

Outcome criterion_joint_law() {
    const auto start = std::chrono::steady_clock::now();
    // Two sites, one particle, two internal levels: dim 4, non-commuting
    // H and rates, two flash labels.
    Philox4x32 mrng(104, 0);
    const FlashModel m = random_model(4, 2, 2, mrng, 0.8);
    const ComplexVector psi = random_state(4, mrng);
    const double t_max = 1.5;
    const std::size_t n_bins = 5;
    const QuadratureGrid bins{t_max, n_bins, QuadratureRule::Simpson};
    const FlashDensityTable one = exact_flash_density(m, psi, 1, bins, 8);
    const FlashDensityTable two = exact_flash_density(m, psi, 2, bins, 8);

    SamplerConfig cfg;
    cfg.t_max_horizon = t_max;
    cfg.time_grid_step = t_max / 15;
    cfg.seed = 4;
    EnsembleOptions opts;
    opts.keep_trajectories = true;
    const std::size_t n = 100000;
    const EnsembleSummary s = run_ensemble(m, psi, n, cfg, opts);

    const double width = t_max / static_cast<double>(n_bins);
    auto cell = [&](const FlashRecord& f) {
        const std::size_t b = std::min(n_bins - 1, static_cast<std::size_t>(f.t / width));
        return one.cell(f.label, f.site, b);
    };
    const std::size_t c1 = one.cells_per_flash();
    std::vector<double> obs1(c1 + 1, 0.0), exp1(c1 + 1, 0.0);
    std::vector<double> obs2(c1 * c1 + 1, 0.0), exp2(c1 * c1 + 1, 0.0);
    for (const auto& h : s.trajectories) {
        obs1[h.empty() ? c1 : cell(h[0])] += 1;
        obs2[h.size() < 2 ? c1 * c1 : cell(h[0]) * c1 + cell(h[1])] += 1;
    }
    for (std::size_t c = 0; c < c1; ++c) exp1[c] = n * one.mass[c];
    exp1[c1] = n * one.remainder;
    for (std::size_t c = 0; c < c1 * c1; ++c) exp2[c] = n * two.mass[c];
    exp2[c1 * c1] = n * two.remainder;

    int dof1 = 0, dof2 = 0;
    const double p1 = chi2_pvalue(obs1, exp1, &dof1);
    const double p2 = chi2_pvalue(obs2, exp2, &dof2);
    const double elapsed = seconds_since(start);
    return {p1 > 1e-3 && p2 > 1e-3 && elapsed < 300.0,
            fmt("dim 4, 2 sites, %zu trajectories: chi2 p(t1, x1) = %.3f [dof %d], p(t1, x1, t2, x2) = %.3f "
                "[dof %d] (> 0.001), %.1f s (< 300 s)",
                n, p1, dof1, p2, dof2, elapsed)};
}

// Product-basis index -> particle coordinates, row-major.
std::vector<std::size_t> digits(std::size_t idx, std::size_t base, std::size_t n) {
    std::vector<std::size_t> r(n);
    for (std::size_t j = n; j-- > 0;) {
        r[j] = idx % base;
        idx /= base;
    }
    return r;
}

// Orthonormal (anti)symmetrized product states, one column per sorted tuple.
ComplexMatrix symmetrized_basis(std::size_t m, std::size_t n, Parity parity) {
    std::vector<std::vector<std::size_t>> tuples;
    const auto full = static_cast<std::size_t>(std::pow(m, n));
    for (std::size_t idx = 0; idx < full; ++idx) {
        const auto t = digits(idx, m, n);
        bool ok = true;
        for (std::size_t j = 1; j < n; ++j) {
            ok = ok && (parity == Parity::Boson ? t[j - 1] <= t[j] : t[j - 1] < t[j]);
        }
        if (ok) tuples.push_back(t);
    }
    ComplexMatrix v = ComplexMatrix::Zero(static_cast<Eigen::Index>(full), static_cast<Eigen::Index>(tuples.size()));
    for (std::size_t c = 0; c < tuples.size(); ++c) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        do {
            int inversions = 0;
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = a + 1; b < n; ++b) inversions += perm[a] > perm[b];
            std::size_t idx = 0;
            for (std::size_t j = 0; j < n; ++j) idx = idx * m + tuples[c][perm[j]];
            const double sign = parity == Parity::Fermion && inversions % 2 ? -1.0 : 1.0;
            v(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(c)) += sign;
        } while (std::next_permutation(perm.begin(), perm.end()));
        v.col(static_cast<Eigen::Index>(c)).normalize();
    }
    return v;
}

Outcome criterion_collapse() {
    const std::size_t m = 4;
    const double strength = 1.3;
    const double width = 1.1;
    const Lattice ring = Lattice::ring(m);
    HamiltonianSpec spec;
    spec.hopping = 0.5;
    const FlashModel one = build_grw_model(1, ring, RateProfile::gaussian(strength, width), spec);
    const FlashModel single(ring, one.hamiltonian(), RateOperatorFamily({"flash"}, {one.rates().operators()[0]}));
    Philox4x32 rng(105, 0);
    double worst = 0.0;
    int cases = 0;
    for (Parity parity : {Parity::Boson, Parity::Fermion}) {
        for (std::size_t n = 1; n <= 3; ++n) {
            const FlashModel model = build_identical_model(n, parity, single);
            const ComplexMatrix v = symmetrized_basis(m, n, parity);
            const ComplexVector psi = random_state(model.dim(), rng);
            const ComplexVector full = v * psi;
            for (std::size_t x = 0; x < m; ++x) {
                ComplexVector phi = full;
                for (Eigen::Index idx = 0; idx < full.size(); ++idx) {
                    double sum = 0.0;
                    for (std::size_t r : digits(static_cast<std::size_t>(idx), m, n)) {
                        const double d = std::min<double>(std::abs(static_cast<double>(x) - static_cast<double>(r)),
                                                          m - std::abs(static_cast<double>(x) - static_cast<double>(r)));
                        sum += std::exp(-d * d / (width * width));
                    }
                    phi(idx) *= std::sqrt(strength * sum);
                }
                phi /= phi.norm();
                const ComplexVector expect = v.adjoint() * phi;
                const ComplexVector got = collapse(model, psi, x, 0);
                worst = std::max(worst, (got - expect).cwiseAbs().maxCoeff());
                // The collapsed state stays in the (anti)symmetric sector.
                worst = std::max(worst, (v * expect - phi).cwiseAbs().maxCoeff());
                ++cases;
            }
        }
    }
    return {worst <= 1e-12,
            fmt("%d collapses, N = 1..3 bosons and fermions on 4 sites: max entry error %.2g (<= 1e-12)", cases,
                worst)};
}

Outcome criterion_master_equation() {
    // Bosons on two sites, up to two particles: dim 6. The source term mixes
    // particle-number sectors.
    HamiltonianSpec spec;
    spec.hopping = 0.6;
    spec.interaction = 0.5;
    spec.source = 0.3;
    const FlashModel m = build_fock_model(2, Lattice::ring(2), RateProfile::gaussian(0.7, 0.9), Parity::Boson, spec);
    ComplexVector psi = ComplexVector::Zero(m.dim());
    psi(1) = std::sqrt(0.5);
    psi(4) = Complex(0.0, std::sqrt(0.5));
    const double lambda = spectral_norm(m.total_rate());
    SamplerConfig cfg;
    cfg.t_max_horizon = 2.0 / lambda;
    cfg.time_grid_step = cfg.t_max_horizon / 20;
    cfg.seed = 6;
    const std::size_t n_traj = 10000;
    const std::vector<double> times{0.5 / lambda, 1.0 / lambda, 2.0 / lambda};
    const CheckReport r = check_master_vs_ensemble(m, psi, times, n_traj, cfg);

    // Short horizon: three flash orders leave a remainder below (lambda t)^4 / 4!.
    const double t = 0.05 / lambda;
    const auto rho = integrate_master_equation(m, DensityMatrixState::pure(psi), t, 400);
    const double series = max_abs_diff(flash_series_density(m, psi, t, 3, 200), rho.rho());
    const bool series_ok = series <= 1e-6;
    return {r.pass && series_ok && m.dim() == 6,
            fmt("dim %ld, %zu trajectories: trace distances %.4f, %.4f, %.4f (<= %.3f); flash series to 3 flashes "
                "vs integrator %.2g (<= 1e-6)",
                static_cast<long>(m.dim()), n_traj, r.detail("trace_distance_0"), r.detail("trace_distance_1"),
                r.detail("trace_distance_2"), r.threshold, series)};
}

Outcome criterion_second_quantization() {
    double worst = 0.0;
    double worst_h = 0.0;
    int blocks = 0;
    HamiltonianSpec spec;
    spec.hopping = 0.7;
    for (std::size_t m = 1; m <= 4; ++m) {
        spec.potential.assign(m, 0.0);
        for (std::size_t x = 0; x < m; ++x) spec.potential[x] = 0.1 * static_cast<double>(x);
        const Lattice ring = Lattice::ring(m);
        const RateProfile profile = RateProfile::gaussian(0.9, 1.2);
        const FlashModel one = build_grw_model(1, ring, profile, spec);
        const FlashModel single(ring, one.hamiltonian(), RateOperatorFamily({"flash"}, {one.rates().operators()[0]}));
        for (Parity parity : {Parity::Boson, Parity::Fermion}) {
            const FlashModel fock = build_fock_model(3, ring, profile, parity, spec);
            for (std::size_t n = 0; n <= 3; ++n) {
                if (parity == Parity::Fermion && n > m) continue;
                const auto r = check_second_quantization(fock, n, build_identical_model(n, parity, single), 1e-12);
                worst = std::max(worst, r.metric);
                worst_h = std::max(worst_h, r.detail("hamiltonian_diff"));
                ++blocks;
            }
        }
    }
    return {worst <= 1e-12 && worst_h <= 1e-12,
            fmt("%d sector blocks (n <= 3, M <= 4, both parities): max rate entry diff %.2g, "
                "Hamiltonian diff %.2g (<= 1e-12)",
                blocks, worst, worst_h)};
}

Outcome criterion_no_signalling() {
    Philox4x32 rng(108, 0);
    const QuadratureGrid bins{2.0, 4, QuadratureRule::Simpson};
    double worst = 0.0;
    double weakest_control = 1e9;
    for (int k = 0; k < 3; ++k) {
        const FlashModel m1 = random_model(2, 2, 1, rng);
        const FlashModel m2a = random_model(2, 2, 1, rng);
        const FlashModel m2b = random_model(2, 2, 2, rng);  // different environment altogether
        ComplexVector psi_a = random_state(4, rng);
        // A unitary on system 2 keeps the reduced state of system 1.
        const ComplexMatrix u = semigroup_exp(Complex(0, -1) * random_hermitian(2, rng), 1.0);
        const ComplexVector psi_b = tensor(ComplexMatrix::Identity(2, 2), u) * psi_a;
        const auto r = check_no_signalling(m1, m2a, m2b, psi_a, psi_b, bins);
        worst = std::max(worst, r.metric);

        NoSignallingOptions coupled;
        const ComplexMatrix a = random_hermitian(2, rng);
        const ComplexMatrix b = random_hermitian(2, rng);
        coupled.interaction_b = tensor(a, b);
        const auto control = check_no_signalling(m1, m2a, m2a, psi_a, psi_b, bins, coupled);
        weakest_control = std::min(weakest_control, control.metric);
    }
    // Disjoint-support route: merged composites, flashes attributed by site.
    auto local = [&](std::vector<std::size_t> sites, const ComplexMatrix& h) {
        std::vector<PositiveOperator> row;
        for (std::size_t x = 0; x < 4; ++x) {
            const bool on = std::find(sites.begin(), sites.end(), x) != sites.end();
            row.emplace_back(on ? random_positive(2, rng) : ComplexMatrix(ComplexMatrix::Zero(2, 2)));
        }
        return FlashModel(Lattice::ring(4), h, RateOperatorFamily({"flash"}, {row}));
    };
    const FlashModel s1 = local({0, 1}, random_hermitian(2, rng));
    const FlashModel s2a = local({2, 3}, random_hermitian(2, rng));
    const FlashModel s2b = local({2, 3}, random_hermitian(2, rng));
    ComplexVector bell = ComplexVector::Zero(4);
    bell(0) = bell(3) = std::sqrt(0.5);
    const auto support = check_no_signalling_by_support(compose_tensor(s1, s2a, ComposeMode::Merged),
                                                        compose_tensor(s1, s2b, ComposeMode::Merged), {0, 1}, bell,
                                                        bell, bins);
    worst = std::max(worst, support.metric);
    return {worst <= 1e-8 && weakest_control > 1e-3,
            fmt("labeled and support routes: max system-1 marginal diff %.2g (<= 1e-8); coupled control "
                "min diff %.3g (> 1e-3)",
                worst, weakest_control)};
}

Outcome criterion_constants() {
    const CheckReport r = check_constants(PhysicalProfile{});
    return {r.pass, fmt("tau = %.4g s for strength 1e5 /(s m^3), width 1e-7 m (in [1e14, 1e16])", r.metric)};
}

Outcome criterion_determinism() {
    Philox4x32 mrng(110, 0);
    const FlashModel m = random_model(4, 3, 2, mrng);
    const ComplexVector psi = random_state(4, mrng);
    SamplerConfig cfg;
    cfg.t_max_horizon = 4.0;
    cfg.time_grid_step = 0.2;
    cfg.seed = 123456789;
    auto log = [&](unsigned threads) {
        EnsembleOptions o;
        o.threads = threads;
        o.keep_trajectories = true;
        const EnsembleSummary s = run_ensemble(m, psi, 2000, cfg, o);
        std::ostringstream out;
        write_flash_log(out, m, s.trajectories);
        return out.str();
    };
    const std::string a = log(1);
    const std::string b = log(1);
    const std::string c = log(8);
    const std::string d = log(8);
    const bool pass = !a.empty() && a == b && a == c && c == d;
    return {pass, fmt("flash logs (%zu bytes): repeat run %s, 1 vs 8 threads %s", a.size(),
                      a == b ? "identical" : "DIFFER", a == c && c == d ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, criterion_normalization},     {2, criterion_consistency},        {3, criterion_exponential_law},
        {4, criterion_joint_law},         {5, criterion_collapse},           {6, criterion_master_equation},
        {7, criterion_second_quantization}, {8, criterion_no_signalling},    {9, criterion_constants},
        {10, criterion_determinism},
    };
    int failures = 0;
    for (const auto& [id, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::printf("[%s] criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, o.summary.c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
