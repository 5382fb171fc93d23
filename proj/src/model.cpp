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

#include "flashsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flashsim {

// ---------------------------------------------------------------------------
// Lattice

Lattice::Lattice(std::vector<std::size_t> extents, double spacing)
    : extents_(std::move(extents)), spacing_(spacing) {
    if (extents_.empty() || extents_.size() > 3) {
        throw Error(ErrorCode::InvalidArgument, "lattice dimension must be 1, 2 or 3");
    }
    if (!(spacing_ > 0.0) || !std::isfinite(spacing_)) {
        throw Error(ErrorCode::InvalidArgument, "lattice spacing must be positive");
    }
    n_sites_ = 1;
    for (std::size_t e : extents_) {
        if (e == 0) throw Error(ErrorCode::InvalidArgument, "lattice extent must be >= 1");
        n_sites_ *= e;
    }
}

Lattice Lattice::ring(std::size_t n_sites, double spacing) { return Lattice({n_sites}, spacing); }

std::array<double, 3> Lattice::coordinates(std::size_t site) const {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (std::size_t axis = extents_.size(); axis-- > 0;) {
        x[axis] = static_cast<double>(site % extents_[axis]) * spacing_;
        site /= extents_[axis];
    }
    return x;
}

double Lattice::distance2(std::size_t a, std::size_t b) const {
    double d2 = 0.0;
    for (std::size_t axis = extents_.size(); axis-- > 0;) {
        const std::size_t e = extents_[axis];
        const std::size_t ia = a % e;
        const std::size_t ib = b % e;
        a /= e;
        b /= e;
        const std::size_t diff = ia > ib ? ia - ib : ib - ia;
        const double d = static_cast<double>(std::min(diff, e - diff)) * spacing_;
        d2 += d * d;
    }
    return d2;
}

std::vector<std::size_t> Lattice::neighbours(std::size_t site) const {
    std::vector<std::size_t> out;
    std::size_t stride = 1;
    for (std::size_t axis = extents_.size(); axis-- > 0;) {
        const std::size_t e = extents_[axis];
        if (e > 1) {
            const std::size_t coord = (site / stride) % e;
            const std::size_t base = site - coord * stride;
            out.push_back(base + ((coord + 1) % e) * stride);
            out.push_back(base + ((coord + e - 1) % e) * stride);
        }
        stride *= e;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Profiles and Hamiltonians

RateProfile RateProfile::gaussian(double strength, double width, std::vector<double> mass) {
    RateProfile p{ProfileKind::Gaussian, strength, width, std::move(mass)};
    p.validate();
    return p;
}

RateProfile RateProfile::delta(double strength, std::vector<double> mass) {
    RateProfile p{ProfileKind::Delta, strength, 0.0, std::move(mass)};
    p.validate();
    return p;
}

double RateProfile::mass_factor(std::size_t label) const {
    if (mass_factors.empty()) return 1.0;
    if (label >= mass_factors.size()) {
        throw Error(ErrorCode::BadProfile, "no mass factor for label " + std::to_string(label));
    }
    return mass_factors[label];
}

void RateProfile::validate() const {
    if (!(strength >= 0.0) || !std::isfinite(strength)) {
        throw Error(ErrorCode::BadProfile, "profile strength must be non-negative");
    }
    if (kind == ProfileKind::Gaussian && (!(width > 0.0) || !std::isfinite(width))) {
        throw Error(ErrorCode::BadProfile, "profile width must be positive");
    }
    for (double m : mass_factors) {
        if (!(m > 0.0) || !std::isfinite(m)) {
            throw Error(ErrorCode::BadProfile, "mass factors must be positive");
        }
    }
}

RealMatrix profile_weights(const Lattice& lattice, const RateProfile& profile) {
    profile.validate();
    const auto m = static_cast<Eigen::Index>(lattice.n_sites());
    RealMatrix w = RealMatrix::Zero(m, m);
    if (profile.kind == ProfileKind::Delta) {
        w.diagonal().setConstant(profile.strength);
        return w;
    }
    const double a2 = profile.width * profile.width;
    for (Eigen::Index x = 0; x < m; ++x) {
        for (Eigen::Index y = 0; y < m; ++y) {
            w(x, y) = profile.strength *
                      std::exp(-lattice.distance2(static_cast<std::size_t>(x),
                                                  static_cast<std::size_t>(y)) /
                               a2);
        }
    }
    const double cutoff = kProfileTruncation * w.maxCoeff();
    w = w.unaryExpr([cutoff](double v) { return v < cutoff ? 0.0 : v; });
    return w;
}

ComplexMatrix one_particle_hamiltonian(const Lattice& lattice, const HamiltonianSpec& spec) {
    const std::size_t m = lattice.n_sites();
    if (!spec.potential.empty() && spec.potential.size() != m) {
        throw Error(ErrorCode::InvalidArgument, "potential needs one value per site");
    }
    ComplexMatrix h = ComplexMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t site = 0; site < m; ++site) {
        const auto i = static_cast<Eigen::Index>(site);
        for (std::size_t nb : lattice.neighbours(site)) {
            h(i, i) += spec.hopping;
            h(static_cast<Eigen::Index>(nb), i) -= spec.hopping;
        }
        if (!spec.potential.empty()) h(i, i) += spec.potential[site];
    }
    return h;
}

// ---------------------------------------------------------------------------
// RateOperatorFamily

RateOperatorFamily::RateOperatorFamily(std::vector<std::string> labels,
                                       std::vector<std::vector<PositiveOperator>> operators)
    : labels_(std::move(labels)), operators_(std::move(operators)) {
    if (labels_.empty()) throw Error(ErrorCode::InvalidArgument, "rate family needs a label");
    if (operators_.size() != labels_.size()) {
        throw Error(ErrorCode::InvalidArgument, "one operator row per label required");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (labels_[i] == labels_[j]) {
                throw Error(ErrorCode::InvalidArgument, "duplicate label " + labels_[i]);
            }
        }
    }
    const std::size_t sites = operators_[0].size();
    if (sites == 0) throw Error(ErrorCode::InvalidArgument, "rate family needs a site");
    const Eigen::Index d = operators_[0][0].dim();
    for (const auto& row : operators_) {
        if (row.size() != sites) throw Error(ErrorCode::InvalidArgument, "ragged rate family");
        for (const auto& op : row) {
            if (op.dim() != d) throw Error(ErrorCode::InvalidArgument, "rate operator dimension");
        }
    }
}

Eigen::Index RateOperatorFamily::dim() const noexcept {
    return operators_.empty() ? 0 : operators_[0][0].dim();
}

std::optional<std::size_t> RateOperatorFamily::label_index(const std::string& name) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] == name) return i;
    }
    return std::nullopt;
}

ComplexMatrix RateOperatorFamily::region(std::size_t label,
                                         const std::vector<std::size_t>& sites) const {
    ComplexMatrix sum = ComplexMatrix::Zero(dim(), dim());
    for (std::size_t s : sites) sum += at(label, s).matrix();
    return sum;
}

ComplexMatrix RateOperatorFamily::label_total(std::size_t label) const {
    ComplexMatrix sum = ComplexMatrix::Zero(dim(), dim());
    for (const auto& op : operators_.at(label)) sum += op.matrix();
    return sum;
}

ComplexMatrix RateOperatorFamily::total() const {
    ComplexMatrix sum = ComplexMatrix::Zero(dim(), dim());
    for (std::size_t i = 0; i < n_labels(); ++i) sum += label_total(i);
    return sum;
}

// ---------------------------------------------------------------------------
// FlashModel

FlashModel::FlashModel(Lattice lattice, ComplexMatrix hamiltonian, RateOperatorFamily rates,
                       std::vector<std::size_t> sector_dims)
    : lattice_(std::move(lattice)),
      hamiltonian_(std::move(hamiltonian)),
      rates_(std::move(rates)),
      sector_dims_(std::move(sector_dims)) {
    if (hamiltonian_.rows() != hamiltonian_.cols()) {
        throw Error(ErrorCode::InvalidArgument, "Hamiltonian must be square");
    }
    if (!is_finite(hamiltonian_)) throw Error(ErrorCode::NotHermitian, "non-finite Hamiltonian");
    const double scale =
        hamiltonian_.size() == 0 ? 1.0 : std::max(1.0, hamiltonian_.cwiseAbs().maxCoeff());
    if (hermitian_defect(hamiltonian_) > kTolHermitian * scale) {
        throw Error(ErrorCode::NotHermitian, "Hamiltonian is not Hermitian");
    }
    hamiltonian_ = 0.5 * (hamiltonian_ + hamiltonian_.adjoint()).eval();
    if (rates_.dim() != hamiltonian_.rows()) {
        throw Error(ErrorCode::InvalidArgument, "rate operators and Hamiltonian differ in dimension");
    }
    if (rates_.n_sites() != lattice_.n_sites()) {
        throw Error(ErrorCode::InvalidArgument, "rate family does not match the lattice");
    }
    if (!sector_dims_.empty()) {
        std::size_t total = 0;
        for (std::size_t d : sector_dims_) total += d;
        if (total != static_cast<std::size_t>(dim())) {
            throw Error(ErrorCode::InvalidArgument, "sector dimensions do not add up");
        }
    }

    total_rate_ = rates_.total();
    generator_ = -0.5 * total_rate_ - Complex(0.0, 1.0) * hamiltonian_;

    diagonal_ = true;
    for (Eigen::Index j = 0; j < dim() && diagonal_; ++j) {
        for (Eigen::Index i = 0; i < dim(); ++i) {
            if (i != j && hamiltonian_(i, j) != Complex(0.0)) {
                diagonal_ = false;
                break;
            }
        }
    }
    sqrt_cache_.reserve(rates_.n_labels() * rates_.n_sites());
    for (std::size_t i = 0; i < rates_.n_labels(); ++i) {
        for (std::size_t m = 0; m < rates_.n_sites(); ++m) {
            const PositiveOperator& op = rates_.at(i, m);
            diagonal_ = diagonal_ && op.is_diagonal();
            sqrt_cache_.push_back(hermitian_sqrt(op).matrix());
        }
    }
}

FlashModel FlashModel::empty(const Lattice& lattice, std::vector<std::string> labels) {
    std::vector<std::vector<PositiveOperator>> ops(
        labels.size(), std::vector<PositiveOperator>(lattice.n_sites(), PositiveOperator::zero(0)));
    return FlashModel(lattice, ComplexMatrix(0, 0), RateOperatorFamily(std::move(labels), std::move(ops)));
}

// ---------------------------------------------------------------------------
// Operator expressions

void require_normalized(const FlashModel& model, const ComplexVector& psi) {
    if (psi.size() != model.dim()) {
        throw Error(ErrorCode::InvalidArgument, "state dimension does not match model");
    }
    const double norm = psi.norm();
    if (!(std::abs(norm - 1.0) <= kNormTolerance)) {
        throw Error(ErrorCode::NotNormalized, "||psi|| = " + std::to_string(norm));
    }
}

namespace {

void require_size(const FlashModel& model, const ComplexVector& psi) {
    if (psi.size() != model.dim()) {
        throw Error(ErrorCode::InvalidArgument, "state dimension does not match model");
    }
}

void require_history(const FlashModel& model, const FlashHistory& history, double t0) {
    double last = t0;
    bool first = true;
    for (const FlashRecord& f : history) {
        const bool ok = first ? f.t >= last : f.t > last;
        if (!ok || !std::isfinite(f.t)) {
            throw Error(ErrorCode::NonMonotoneHistory, "flash times must increase strictly");
        }
        if (f.site >= model.n_sites() || f.label >= model.n_labels()) {
            throw Error(ErrorCode::InvalidArgument, "flash site or label out of range");
        }
        last = f.t;
        first = false;
    }
}

}  // namespace

ComplexVector propagate(const FlashModel& model, const ComplexVector& psi, double t) {
    require_size(model, psi);
    if (t < 0.0 || !std::isfinite(t)) throw Error(ErrorCode::NegativeTime, "t must be >= 0");
    if (t == 0.0) return psi;
    return semigroup_exp(model.generator(), t) * psi;
}

ComplexVector kernel_apply(const FlashModel& model, const ComplexVector& psi0,
                           const FlashHistory& history, double t0) {
    require_size(model, psi0);
    require_history(model, history, t0);
    ComplexVector v = psi0;
    double clock = t0;
    for (const FlashRecord& f : history) {
        v = model.sqrt_rate(f.label, f.site) * propagate(model, v, f.t - clock);
        clock = f.t;
    }
    return v;
}

RealMatrix flash_rate_density(const FlashModel& model, const ComplexVector& psi) {
    require_normalized(model, psi);
    RealMatrix rates(static_cast<Eigen::Index>(model.n_labels()),
                     static_cast<Eigen::Index>(model.n_sites()));
    for (std::size_t i = 0; i < model.n_labels(); ++i) {
        for (std::size_t m = 0; m < model.n_sites(); ++m) {
            const double r = psi.dot(model.rates().at(i, m).matrix() * psi).real();
            rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = std::max(r, 0.0);
        }
    }
    return rates;
}

ComplexVector collapse(const FlashModel& model, const ComplexVector& psi, std::size_t site,
                       std::size_t label) {
    require_size(model, psi);
    if (site >= model.n_sites() || label >= model.n_labels()) {
        throw Error(ErrorCode::InvalidArgument, "flash site or label out of range");
    }
    ComplexVector out = model.sqrt_rate(label, site) * psi;
    const double norm = out.norm();
    if (!(norm > kCollapseFloor)) {
        throw Error(ErrorCode::ZeroProbabilityFlash,
                    "flash at site " + std::to_string(site) + " has zero amplitude");
    }
    return out / norm;
}

ComplexVector conditional_wave_function(const FlashModel& model, const ComplexVector& psi0,
                                        const FlashHistory& history, double t, double t0) {
    require_size(model, psi0);
    require_history(model, history, t0);
    const double last = history.empty() ? t0 : history.back().t;
    if (t < last) throw Error(ErrorCode::NonMonotoneHistory, "t precedes the last flash");

    // K_n applied factor by factor; rescaling only changes the overall norm.
    ComplexVector v = psi0;
    double clock = t0;
    for (const FlashRecord& f : history) {
        v = model.sqrt_rate(f.label, f.site) * (semigroup_exp(model.generator(), f.t - clock) * v);
        const double n = v.norm();
        if (n > 0.0 && std::isfinite(n)) v /= n;
        clock = f.t;
    }
    v = semigroup_exp(model.generator(), t - clock) * v;
    const double norm = v.norm();
    if (!(norm > kCollapseFloor) || !std::isfinite(norm)) {
        throw Error(ErrorCode::ZeroNorm, "conditional wave function vanishes");
    }
    return v / norm;
}

RealVector matter_density(const FlashModel& model, const ComplexVector& psi) {
    return flash_rate_density(model, psi).colwise().sum().transpose();
}

}  // namespace flashsim
