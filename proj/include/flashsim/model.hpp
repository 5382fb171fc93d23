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

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "flashsim/linalg.hpp"

namespace flashsim {

/// Periodic lattice in 1, 2 or 3 dimensions. Sites are numbered row-major
/// over `extents`; site coordinates are index * spacing along each axis.
class Lattice {
   public:
    Lattice() = default;
    Lattice(std::vector<std::size_t> extents, double spacing = 1.0);

    /// A 1D ring with `n_sites` sites.
    static Lattice ring(std::size_t n_sites, double spacing = 1.0);

    std::size_t n_sites() const noexcept { return n_sites_; }
    std::size_t dimension() const noexcept { return extents_.size(); }
    const std::vector<std::size_t>& extents() const noexcept { return extents_; }
    double spacing() const noexcept { return spacing_; }

    std::array<double, 3> coordinates(std::size_t site) const;
    /// Squared minimal-image distance between two sites.
    double distance2(std::size_t a, std::size_t b) const;
    /// Nearest neighbours along every axis with extent > 1, with multiplicity
    /// (on an axis of extent 2 both directions reach the same site).
    std::vector<std::size_t> neighbours(std::size_t site) const;

    bool operator==(const Lattice& other) const {
        return extents_ == other.extents_ && spacing_ == other.spacing_;
    }

   private:
    std::vector<std::size_t> extents_{1};
    double spacing_ = 1.0;
    std::size_t n_sites_ = 1;
};

enum class ProfileKind { Gaussian, Delta };

/// Spatial smearing of the flash rate. Gaussian: strength * exp(-d^2/a^2)
/// with minimal-image distance d; Delta: strength on the site itself only.
/// `mass_factors[i]` multiplies the strength for label i (default 1).
struct RateProfile {
    ProfileKind kind = ProfileKind::Gaussian;
    double strength = 1.0;
    double width = 1.0;
    std::vector<double> mass_factors;

    static RateProfile gaussian(double strength, double width, std::vector<double> mass = {});
    static RateProfile delta(double strength, std::vector<double> mass = {});

    double mass_factor(std::size_t label) const;
    void validate() const;
};

/// Values below this fraction of the profile maximum are set to zero.
inline constexpr double kProfileTruncation = 1e-14;

/// weights(m, k) = profile value at lattice point x_m for a particle at y_k,
/// excluding any mass factor.
RealMatrix profile_weights(const Lattice& lattice, const RateProfile& profile);

/// One-particle Hamiltonian menu. Kinetic term is hopping * (-discrete
/// Laplacian); hopping = 1/(2 spacing^2) reproduces -(1/2) Laplacian.
/// `potential` is per site (empty means zero). `interaction` is the on-site
/// pair energy U, `source` the coefficient c of sum_k (a*_k + a_k) and only
/// applies to Fock models.
struct HamiltonianSpec {
    double hopping = 0.0;
    std::vector<double> potential;
    double interaction = 0.0;
    double source = 0.0;
};

ComplexMatrix one_particle_hamiltonian(const Lattice& lattice, const HamiltonianSpec& spec);

/// Rate operators Lambda_i(x_m), indexed [label][site].
class RateOperatorFamily {
   public:
    RateOperatorFamily() = default;
    RateOperatorFamily(std::vector<std::string> labels,
                       std::vector<std::vector<PositiveOperator>> operators);

    std::size_t n_labels() const noexcept { return labels_.size(); }
    std::size_t n_sites() const noexcept { return operators_.empty() ? 0 : operators_[0].size(); }
    Eigen::Index dim() const noexcept;
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::optional<std::size_t> label_index(const std::string& name) const;

    const PositiveOperator& at(std::size_t label, std::size_t site) const {
        return operators_.at(label).at(site);
    }
    const std::vector<std::vector<PositiveOperator>>& operators() const noexcept {
        return operators_;
    }

    /// Lambda_label(B) = sum over sites in B.
    ComplexMatrix region(std::size_t label, const std::vector<std::size_t>& sites) const;
    /// sum over all sites of one label.
    ComplexMatrix label_total(std::size_t label) const;
    /// sum over all labels and sites.
    ComplexMatrix total() const;

   private:
    std::vector<std::string> labels_;
    std::vector<std::vector<PositiveOperator>> operators_;
};

/// One flash: time, lattice site and label index.
struct FlashRecord {
    double t = 0.0;
    std::size_t site = 0;
    std::size_t label = 0;

    bool operator==(const FlashRecord&) const = default;
};

using FlashHistory = std::vector<FlashRecord>;

/// The triple (Hilbert space, H, Lambda) on a lattice, plus the generator
/// G = -1/2 Lambda_tot - i H and the square roots of every rate operator.
/// Immutable once built.
class FlashModel {
   public:
    FlashModel(Lattice lattice, ComplexMatrix hamiltonian, RateOperatorFamily rates,
               std::vector<std::size_t> sector_dims = {});

    /// Zero-dimensional model carrying the given label names.
    static FlashModel empty(const Lattice& lattice, std::vector<std::string> labels = {"flash"});

    Eigen::Index dim() const noexcept { return hamiltonian_.rows(); }
    const Lattice& lattice() const noexcept { return lattice_; }
    const ComplexMatrix& hamiltonian() const noexcept { return hamiltonian_; }
    const RateOperatorFamily& rates() const noexcept { return rates_; }
    std::size_t n_labels() const noexcept { return rates_.n_labels(); }
    std::size_t n_sites() const noexcept { return lattice_.n_sites(); }
    const std::vector<std::string>& labels() const noexcept { return rates_.labels(); }

    const ComplexMatrix& generator() const noexcept { return generator_; }
    const ComplexMatrix& total_rate() const noexcept { return total_rate_; }
    const ComplexMatrix& sqrt_rate(std::size_t label, std::size_t site) const {
        return sqrt_cache_.at(label * n_sites() + site);
    }

    /// Particle-number sector dimensions for graded (Fock) models.
    const std::vector<std::size_t>& sector_dims() const noexcept { return sector_dims_; }

    /// True if every rate operator and H are diagonal.
    bool is_diagonal() const noexcept { return diagonal_; }

   private:
    Lattice lattice_;
    ComplexMatrix hamiltonian_;
    RateOperatorFamily rates_;
    std::vector<std::size_t> sector_dims_;
    ComplexMatrix generator_;
    ComplexMatrix total_rate_;
    std::vector<ComplexMatrix> sqrt_cache_;
    bool diagonal_ = false;
};

// ---------------------------------------------------------------------------
// Builders

/// N distinguishable particles on the lattice, one flash label per particle.
/// Product basis is row-major in (r_1, ..., r_N).
FlashModel build_grw_model(std::size_t n_particles, const Lattice& lattice,
                           const RateProfile& profile, const HamiltonianSpec& hamiltonian,
                           std::size_t dimension_cap = kDefaultDimensionCap);

/// N bosons or fermions built from a single-label one-particle model by
/// symmetrizing and restricting to the (anti)symmetric sector. The sector
/// basis is ordered by sorted mode tuples in lexicographic order, which is
/// the Fock order for fixed particle number. `interaction` adds
/// U * sum_{i<j} [r_i == r_j].
FlashModel build_identical_model(std::size_t n_particles, Parity parity,
                                 const FlashModel& one_particle, double interaction = 0.0,
                                 std::size_t dimension_cap = kDefaultDimensionCap);

/// Truncated Fock space with particle numbers 0..n_max in the occupation
/// basis, graded by particle number then by sorted mode tuple.
FlashModel build_fock_model(std::size_t n_max, const Lattice& lattice, const RateProfile& profile,
                            Parity parity, const HamiltonianSpec& hamiltonian,
                            std::size_t dimension_cap = kDefaultDimensionCap);

/// Occupation vectors of the Fock basis, in basis order.
std::vector<std::vector<std::size_t>> fock_basis(std::size_t n_sites, std::size_t n_max,
                                                 Parity parity);

/// Orthonormal basis of the (anti)symmetric subspace of (C^d)^{(x)N} as the
/// columns of a d^N x D isometry, in sorted-mode-tuple order.
ComplexMatrix sector_isometry(std::size_t d, std::size_t n_factors, Parity parity,
                              std::size_t dimension_cap = kDefaultDimensionCap);

enum class ComposeMode { Labeled, Merged };

/// Tensor product of two models on the same lattice. H = H1 (x) I + I (x) H2
/// (+ interaction). Labeled mode keeps both label sets (prefixed "a."/"b."
/// when they collide); merged mode sums everything into one label "flash".
FlashModel compose_tensor(const FlashModel& m1, const FlashModel& m2, ComposeMode mode,
                          const std::optional<ComplexMatrix>& interaction = std::nullopt,
                          std::size_t dimension_cap = kDefaultDimensionCap);

/// Block-diagonal sum; the label set is the union by name with zero blocks
/// for labels a summand lacks.
FlashModel compose_direct_sum(const FlashModel& m1, const FlashModel& m2);

/// Splits every label into one label per region: Lambda_{i,s}(x) =
/// 1_{S_s}(x) Lambda_i(x). `regions` must partition the sites.
FlashModel split_labels_by_support(const FlashModel& model,
                                   const std::vector<std::vector<std::size_t>>& regions,
                                   const std::vector<std::string>& region_names);

// ---------------------------------------------------------------------------
// Operator expressions

/// Tolerance on | ||psi|| - 1 | for operations that need a normalized state.
inline constexpr double kNormTolerance = 1e-8;
/// Below this norm a collapse is considered impossible.
inline constexpr double kCollapseFloor = 1e-150;

ComplexVector propagate(const FlashModel& model, const ComplexVector& psi, double t);

/// K_n(t0, history) psi0.
ComplexVector kernel_apply(const FlashModel& model, const ComplexVector& psi0,
                           const FlashHistory& history, double t0 = 0.0);

/// entry (label, site) = <psi|Lambda_label(x_site)|psi>.
RealMatrix flash_rate_density(const FlashModel& model, const ComplexVector& psi);

ComplexVector collapse(const FlashModel& model, const ComplexVector& psi, std::size_t site,
                       std::size_t label);

ComplexVector conditional_wave_function(const FlashModel& model, const ComplexVector& psi0,
                                        const FlashHistory& history, double t, double t0 = 0.0);

/// m(x_site) = sum_labels <psi|Lambda_i(x_site)|psi>.
RealVector matter_density(const FlashModel& model, const ComplexVector& psi);

/// Throws NotNormalized if | ||psi|| - 1 | > kNormTolerance or the size is wrong.
void require_normalized(const FlashModel& model, const ComplexVector& psi);

}  // namespace flashsim
