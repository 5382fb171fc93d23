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

// Ensemble density matrix: master equation, flash expansion and the Monte
// Carlo comparison.

#include <algorithm>
#include <cmath>
#include <string>

#include "flashsim/verify.hpp"

namespace flashsim {

namespace {

constexpr double kTraceTolerance = 1e-9;
constexpr double kEigenTolerance = 1e-8;
constexpr double kTraceDrift = 1e-6;

double min_eigenvalue_of(const ComplexMatrix& rho) {
    if (rho.rows() == 0) return 0.0;
    const ComplexMatrix h = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(h, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

// sum_{i,m} S rho S with S = Lambda_i(x_m)^{1/2}.
ComplexMatrix jump_sum(const FlashModel& model, const ComplexMatrix& rho) {
    ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
    for (std::size_t i = 0; i < model.n_labels(); ++i) {
        for (std::size_t m = 0; m < model.n_sites(); ++m) {
            const ComplexMatrix& s = model.sqrt_rate(i, m);
            out.noalias() += s * rho * s;
        }
    }
    return out;
}

ComplexMatrix rk4_step(const FlashModel& model, const ComplexMatrix& rho, double h) {
    const ComplexMatrix k1 = master_rhs(model, rho);
    const ComplexMatrix k2 = master_rhs(model, rho + 0.5 * h * k1);
    const ComplexMatrix k3 = master_rhs(model, rho + 0.5 * h * k2);
    const ComplexMatrix k4 = master_rhs(model, rho + h * k3);
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_step(const ComplexMatrix& rho, double trace0) {
    if (!is_finite(rho)) throw Error(ErrorCode::StepTooLarge, "non-finite density matrix");
    const double drift = std::abs(rho.trace().real() - trace0);
    if (drift > kTraceDrift) {
        throw Error(ErrorCode::StepTooLarge, "trace drift " + std::to_string(drift));
    }
}

}  // namespace

DensityMatrixState::DensityMatrixState(ComplexMatrix rho) : rho_(std::move(rho)) {
    if (rho_.rows() != rho_.cols() || rho_.rows() == 0) {
        throw Error(ErrorCode::InvalidArgument, "density matrix must be square and non-empty");
    }
    if (!is_finite(rho_)) throw Error(ErrorCode::InvalidArgument, "density matrix is not finite");
    if (hermitian_defect(rho_) > kTolHermitian * std::max(1.0, rho_.cwiseAbs().maxCoeff())) {
        throw Error(ErrorCode::NotHermitian, "density matrix is not Hermitian");
    }
    rho_ = 0.5 * (rho_ + rho_.adjoint()).eval();
    if (std::abs(rho_.trace().real() - 1.0) > kTraceTolerance) {
        throw Error(ErrorCode::InvalidArgument, "density matrix trace is not 1");
    }
    if (min_eigenvalue_of(rho_) < -kEigenTolerance) {
        throw Error(ErrorCode::NotPositive, "density matrix has a negative eigenvalue");
    }
}

DensityMatrixState DensityMatrixState::pure(const ComplexVector& psi) {
    return DensityMatrixState(psi * psi.adjoint());
}

double DensityMatrixState::min_eigenvalue() const { return min_eigenvalue_of(rho_); }

ComplexMatrix master_rhs(const FlashModel& model, const ComplexMatrix& rho) {
    const ComplexMatrix& g = model.generator();
    return g * rho + rho * g.adjoint() + jump_sum(model, rho);
}

DensityMatrixState integrate_master_equation(const FlashModel& model,
                                             const DensityMatrixState& rho0, double t,
                                             std::size_t n_steps) {
    if (t < 0.0) throw Error(ErrorCode::NegativeTime, "integration time is negative");
    if (n_steps == 0) throw Error(ErrorCode::InvalidArgument, "need at least one step");
    if (rho0.rho().rows() != model.dim()) {
        throw Error(ErrorCode::InvalidArgument, "density matrix dimension does not match model");
    }
    const double h = t / static_cast<double>(n_steps);
    const double trace0 = rho0.rho().trace().real();
    ComplexMatrix rho = rho0.rho();
    for (std::size_t k = 0; k < n_steps; ++k) {
        rho = rk4_step(model, rho, h);
        check_step(rho, trace0);
    }
    rho = 0.5 * (rho + rho.adjoint()).eval();
    if (min_eigenvalue_of(rho) < -kTraceDrift) {
        throw Error(ErrorCode::StepTooLarge, "positivity lost during integration");
    }
    return DensityMatrixState(std::move(rho));
}

std::vector<DensityMatrixState> integrate_master_equation(const FlashModel& model,
                                                          const DensityMatrixState& rho0,
                                                          const std::vector<double>& times,
                                                          double max_step) {
    if (!(max_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_step must be positive");
    std::vector<DensityMatrixState> out;
    out.reserve(times.size());
    DensityMatrixState current = rho0;
    double clock = 0.0;
    for (double t : times) {
        if (t < clock) throw Error(ErrorCode::NonMonotoneHistory, "snapshot times must be sorted");
        const double span = t - clock;
        if (span > 0.0) {
            const auto steps = static_cast<std::size_t>(std::ceil(span / max_step));
            current = integrate_master_equation(model, current, span, std::max<std::size_t>(1, steps));
        }
        out.push_back(current);
        clock = t;
    }
    return out;
}

ComplexMatrix flash_series_density(const FlashModel& model, const ComplexVector& psi0, double t,
                                   std::size_t max_flashes, std::size_t n_steps) {
    require_normalized(model, psi0);
    if (t < 0.0) throw Error(ErrorCode::NegativeTime, "series time is negative");
    if (n_steps == 0) throw Error(ErrorCode::InvalidArgument, "need at least one step");
    const double h = t / static_cast<double>(n_steps);
    const ComplexMatrix e = semigroup_exp(model.generator(), h);
    std::vector<ComplexMatrix> powers(n_steps + 1);
    powers[0] = ComplexMatrix::Identity(model.dim(), model.dim());
    for (std::size_t k = 1; k <= n_steps; ++k) powers[k] = e * powers[k - 1];

    // term[k] = n-flash contribution at time k h.
    std::vector<ComplexMatrix> term(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k) {
        const ComplexVector v = powers[k] * psi0;
        term[k] = v * v.adjoint();
    }
    ComplexMatrix total = term[n_steps];
    for (std::size_t n = 1; n <= max_flashes; ++n) {
        std::vector<ComplexMatrix> jumped(n_steps + 1);
        for (std::size_t k = 0; k <= n_steps; ++k) jumped[k] = jump_sum(model, term[k]);
        std::vector<ComplexMatrix> next(n_steps + 1);
        for (std::size_t k = 0; k <= n_steps; ++k) {
            ComplexMatrix acc = ComplexMatrix::Zero(model.dim(), model.dim());
            for (std::size_t j = 0; j <= k && k > 0; ++j) {
                const double w = (j == 0 || j == k) ? 0.5 * h : h;
                const ComplexMatrix& p = powers[k - j];
                acc.noalias() += w * (p * jumped[j] * p.adjoint());
            }
            next[k] = std::move(acc);
        }
        term = std::move(next);
        total += term[n_steps];
    }
    return total;
}

CheckReport check_master_vs_ensemble(const FlashModel& model, const ComplexVector& psi0,
                                     const std::vector<double>& snapshot_times, std::size_t n_traj,
                                     const SamplerConfig& cfg, unsigned threads) {
    if (n_traj == 0) throw Error(ErrorCode::InvalidArgument, "need at least one trajectory");
    EnsembleOptions options;
    options.snapshot_times = snapshot_times;
    options.threads = threads;
    const EnsembleSummary summary = run_ensemble(model, psi0, n_traj, cfg, options);

    const double norm = model.generator().cwiseAbs().colwise().sum().maxCoeff();
    const double max_step = norm > 0.0 ? 0.005 / norm : 1.0;
    const auto exact = integrate_master_equation(model, DensityMatrixState::pure(psi0),
                                                 snapshot_times, max_step);

    CheckReport r;
    r.name = "master_vs_ensemble";
    Digest digest;
    digest.add(model).add(ComplexMatrix(psi0)).add(static_cast<std::uint64_t>(n_traj))
        .add(cfg.seed).add(cfg.stream_id);
    for (double t : snapshot_times) digest.add(t);
    r.inputs_digest = digest.hex();
    r.metric_name = "max_trace_distance";
    r.threshold = 5.0 / std::sqrt(static_cast<double>(n_traj));
    double worst = 0.0;
    for (std::size_t k = 0; k < snapshot_times.size(); ++k) {
        const double dist = trace_distance(summary.rho[k], exact[k].rho());
        worst = std::max(worst, dist);
        r.details.emplace_back("trace_distance_" + std::to_string(k), dist);
    }
    r.metric = worst;
    r.pass = worst <= r.threshold;
    return r;
}

}  // namespace flashsim
