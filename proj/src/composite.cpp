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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "flashsim/verify.hpp"

namespace flashsim {

namespace {

constexpr double kReducedStateTolerance = 1e-10;

double max_table_diff(const FlashDensityTable& a, const FlashDensityTable& b) {
    if (a.mass.size() != b.mass.size()) {
        throw Error(ErrorCode::InvalidArgument, "marginal tables have different shapes");
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < a.mass.size(); ++k) worst = std::max(worst, std::abs(a.mass[k] - b.mass[k]));
    return worst;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

CheckReport check_no_signalling(const FlashModel& m1, const FlashModel& m2a, const FlashModel& m2b,
                                const ComplexVector& psi_a, const ComplexVector& psi_b,
                                const QuadratureGrid& bins, const NoSignallingOptions& options) {
    const FlashModel ca = compose_tensor(m1, m2a, ComposeMode::Labeled, options.interaction_a);
    const FlashModel cb = compose_tensor(m1, m2b, ComposeMode::Labeled, options.interaction_b);
    require_normalized(ca, psi_a);
    require_normalized(cb, psi_b);

    const ComplexMatrix rho_a = psi_a * psi_a.adjoint();
    const ComplexMatrix rho_b = psi_b * psi_b.adjoint();
    const ComplexMatrix red_a = partial_trace_second(rho_a, m1.dim(), m2a.dim());
    const ComplexMatrix red_b = partial_trace_second(rho_b, m1.dim(), m2b.dim());
    const double red_diff = (red_a - red_b).cwiseAbs().maxCoeff();
    if (red_diff > kReducedStateTolerance) {
        throw Error(ErrorCode::ReducedStateMismatch,
                    "reduced states differ by " + std::to_string(red_diff));
    }

    std::vector<bool> obs_a(ca.n_labels(), false);
    std::vector<bool> obs_b(cb.n_labels(), false);
    std::fill_n(obs_a.begin(), m1.n_labels(), true);
    std::fill_n(obs_b.begin(), m1.n_labels(), true);

    CheckReport r;
    r.name = "no_signalling";
    r.inputs_digest = Digest().add(ca).add(cb).add(ComplexMatrix(psi_a)).add(ComplexMatrix(psi_b))
                          .add(bins.t_max).add(static_cast<std::uint64_t>(bins.n_steps)).hex();
    r.metric_name = "max_marginal_diff";
    double worst = 0.0;
    for (std::size_t n = 1; n <= 2; ++n) {
        const auto ta = marginal_flash_density(ca, rho_a, obs_a, n, bins, options.nodes_per_bin);
        const auto tb = marginal_flash_density(cb, rho_b, obs_b, n, bins, options.nodes_per_bin);
        const double diff = max_table_diff(ta, tb);
        r.details.emplace_back("max_diff_n" + std::to_string(n), diff);
        worst = std::max(worst, diff);
    }
    r.details.emplace_back("reduced_state_diff", red_diff);
    r.metric = worst;
    r.threshold = options.threshold;
    r.pass = worst <= options.threshold;
    return r;
}

CheckReport check_no_signalling_by_support(const FlashModel& composite_a,
                                           const FlashModel& composite_b,
                                           const std::vector<std::size_t>& system1_sites,
                                           const ComplexVector& psi_a, const ComplexVector& psi_b,
                                           const QuadratureGrid& bins, double threshold) {
    if (!(composite_a.lattice() == composite_b.lattice())) {
        throw Error(ErrorCode::LatticeMismatch, "composites live on different lattices");
    }
    std::vector<std::size_t> rest;
    for (std::size_t x = 0; x < composite_a.n_sites(); ++x) {
        if (std::find(system1_sites.begin(), system1_sites.end(), x) == system1_sites.end()) rest.push_back(x);
    }
    const std::vector<std::vector<std::size_t>> regions{system1_sites, rest};
    const std::vector<std::string> names{"system1", "rest"};
    const FlashModel sa = split_labels_by_support(composite_a, regions, names);
    const FlashModel sb = split_labels_by_support(composite_b, regions, names);

    auto observed = [](const FlashModel& m) {
        std::vector<bool> obs(m.n_labels());
        for (std::size_t i = 0; i < m.n_labels(); ++i) {
            obs[i] = m.labels()[i] == "system1" || ends_with(m.labels()[i], ".system1");
        }
        return obs;
    };
    require_normalized(sa, psi_a);
    require_normalized(sb, psi_b);
    const ComplexMatrix rho_a = psi_a * psi_a.adjoint();
    const ComplexMatrix rho_b = psi_b * psi_b.adjoint();

    CheckReport r;
    r.name = "no_signalling_by_support";
    r.inputs_digest = Digest().add(sa).add(sb).add(ComplexMatrix(psi_a)).add(ComplexMatrix(psi_b))
                          .add(bins.t_max).add(static_cast<std::uint64_t>(bins.n_steps)).hex();
    r.metric_name = "max_marginal_diff";
    double worst = 0.0;
    for (std::size_t n = 1; n <= 2; ++n) {
        const auto ta = marginal_flash_density(sa, rho_a, observed(sa), n, bins);
        const auto tb = marginal_flash_density(sb, rho_b, observed(sb), n, bins);
        const double diff = max_table_diff(ta, tb);
        r.details.emplace_back("max_diff_n" + std::to_string(n), diff);
        worst = std::max(worst, diff);
    }
    r.metric = worst;
    r.threshold = threshold;
    r.pass = worst <= threshold;
    return r;
}

std::pair<Eigen::Index, Eigen::Index> sector_block(const FlashModel& graded, std::size_t n) {
    const auto& dims = graded.sector_dims();
    if (n >= dims.size()) {
        throw Error(ErrorCode::BasisMismatch, "model has no particle-number sector " + std::to_string(n));
    }
    std::size_t offset = 0;
    for (std::size_t k = 0; k < n; ++k) offset += dims[k];
    return {static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(dims[n])};
}

CheckReport check_second_quantization(const FlashModel& fock_model, std::size_t n_sector,
                                      const FlashModel& identical_model, double threshold) {
    if (!(fock_model.lattice() == identical_model.lattice())) {
        throw Error(ErrorCode::BasisMismatch, "models live on different lattices");
    }
    const auto [offset, size] = sector_block(fock_model, n_sector);
    if (size != identical_model.dim()) {
        throw Error(ErrorCode::BasisMismatch, "sector " + std::to_string(n_sector) + " has dimension " +
                                                  std::to_string(size) + ", identical model has " +
                                                  std::to_string(identical_model.dim()));
    }
    double lambda_diff = 0.0;
    for (std::size_t x = 0; x < fock_model.n_sites(); ++x) {
        ComplexMatrix f = ComplexMatrix::Zero(size, size);
        for (std::size_t i = 0; i < fock_model.n_labels(); ++i) {
            f += fock_model.rates().at(i, x).matrix().block(offset, offset, size, size);
        }
        ComplexMatrix s = ComplexMatrix::Zero(size, size);
        for (std::size_t i = 0; i < identical_model.n_labels(); ++i) s += identical_model.rates().at(i, x).matrix();
        if (size > 0) lambda_diff = std::max(lambda_diff, (f - s).cwiseAbs().maxCoeff());
    }
    double h_diff = 0.0;
    if (size > 0) {
        h_diff = (fock_model.hamiltonian().block(offset, offset, size, size) - identical_model.hamiltonian())
                     .cwiseAbs().maxCoeff();
    }

    CheckReport r;
    r.name = "second_quantization_n" + std::to_string(n_sector);
    r.inputs_digest = Digest().add(fock_model).add(identical_model).add(static_cast<std::uint64_t>(n_sector)).hex();
    r.metric_name = "max_entry_diff";
    r.metric = lambda_diff;
    r.threshold = threshold;
    r.pass = lambda_diff <= threshold;
    r.details.emplace_back("sector_dim", static_cast<double>(size));
    r.details.emplace_back("hamiltonian_diff", h_diff);
    return r;
}

double collapse_time_si(const PhysicalProfile& profile, std::size_t label) {
    if (!(profile.strength_si > 0.0) || !(profile.width_si > 0.0)) {
        throw Error(ErrorCode::BadProfile, "strength and width must be positive");
    }
    const double mass = label < profile.mass_factors.size() ? profile.mass_factors[label] : 1.0;
    if (!(mass > 0.0)) throw Error(ErrorCode::BadProfile, "mass factor must be positive");
    const double a = profile.width_si;
    return 1.0 / (std::pow(std::numbers::pi, 1.5) * profile.strength_si * mass * a * a * a);
}

CheckReport check_constants(const PhysicalProfile& profile) {
    CheckReport r;
    r.name = "constants";
    r.inputs_digest = Digest().add(profile.strength_si).add(profile.width_si).hex();
    r.metric_name = "tau_seconds";
    r.metric = collapse_time_si(profile);
    r.threshold = 1e15;
    r.pass = r.metric >= 1e14 && r.metric <= 1e16;
    r.details.emplace_back("lower", 1e14);
    r.details.emplace_back("upper", 1e16);
    r.details.emplace_back("log10_ratio", std::log10(r.metric / 1e15));
    return r;
}

}  // namespace flashsim
