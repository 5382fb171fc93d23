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
#include <string>
#include <utility>
#include <vector>

#include "flashsim/model.hpp"
#include "flashsim/sampler.hpp"

namespace flashsim {

// ---------------------------------------------------------------------------
// Reports

/// One verification record. Serializes to a single JSON line with a fixed
/// field order.
struct CheckReport {
    std::string name;
    std::string inputs_digest;
    std::string metric_name;
    double metric = 0.0;
    double threshold = 0.0;
    bool pass = false;
    bool expected_fail = false;
    std::vector<std::pair<std::string, double>> details;

    std::string to_json() const;
    static CheckReport from_json(const std::string& line);
    double detail(const std::string& key) const;
};

/// FNV-1a over the bytes of everything added.
class Digest {
   public:
    Digest& add(double v);
    Digest& add(std::uint64_t v);
    Digest& add(const std::string& s);
    Digest& add(const ComplexMatrix& m);
    Digest& add(const FlashModel& model);
    std::string hex() const;

   private:
    void bytes(const void* data, std::size_t n);
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

// ---------------------------------------------------------------------------
// Quadrature

enum class QuadratureRule { Trapezoid, Simpson, Exact };

struct QuadratureGrid {
    double t_max = 1.0;
    std::size_t n_steps = 2;
    QuadratureRule rule = QuadratureRule::Simpson;

    void validate() const;
    double step() const { return t_max / static_cast<double>(n_steps); }
    /// Weights for the n_steps + 1 equally spaced nodes.
    std::vector<double> weights() const;
    /// Convergence order of the rule (2 or 4; 0 for Exact).
    int order() const;
    /// The same rule with half as many steps.
    QuadratureGrid coarsened() const;
};

/// Empirical convergence order from errors on a grid and its halving.
double observed_order(double error_fine, double error_coarse);

// ---------------------------------------------------------------------------
// Identities of the flash law

/// sum_{i,m} int_0^T <psi|W_t^* Lambda_i(x_m) W_t|psi> dt + ||W_T psi||^2.
double normalization_integral(const FlashModel& model, const ComplexVector& psi,
                              const QuadratureGrid& grid);

/// Defect |integral - 1|; passes when it is below `threshold`. Details carry
/// the defect on the halved grid and the observed order.
CheckReport check_normalization(const FlashModel& model, const ComplexVector& psi,
                                const QuadratureGrid& grid, double threshold = 1e-6);

/// Relative Frobenius deviation of
///   sum_{i,m} int K_n^* K_n dt_n + K_{n-1}^* W_T^* W_T K_{n-1}
/// from K_{n-1}^* K_{n-1} for one history of n-1 flashes.
double consistency_error(const FlashModel& model, const FlashHistory& history,
                         const QuadratureGrid& grid);

/// Worst consistency_error over `n_histories` pseudo-random histories of
/// n-1 flashes. The Exact rule uses closed-form time integrals and needs a
/// diagonal model.
CheckReport check_consistency(const FlashModel& model, std::size_t n, const QuadratureGrid& grid,
                              double threshold = 1e-6, std::size_t n_histories = 4,
                              std::uint64_t seed = 1);

/// Probability mass of the first n flashes (n = 1 or 2) over
/// (label, site, time bin)^n. Bins split [0, t_max] into grid.n_steps equal
/// pieces; each bin is integrated with `nodes_per_bin` Gauss-Legendre nodes
/// (the triangle t1 < t2 inside a shared bin is integrated as such).
struct FlashDensityTable {
    std::size_t n = 1;
    std::size_t n_labels = 0;
    std::size_t n_sites = 0;
    std::size_t n_bins = 0;
    double t_max = 0.0;
    std::vector<double> mass;
    /// 1 - sum(mass): probability of fewer than n flashes before t_max.
    double remainder = 0.0;

    std::size_t cell(std::size_t label, std::size_t site, std::size_t bin) const {
        return (label * n_sites + site) * n_bins + bin;
    }
    std::size_t cells_per_flash() const { return n_labels * n_sites * n_bins; }
    double at(std::size_t c1) const { return mass.at(c1); }
    double at(std::size_t c1, std::size_t c2) const { return mass.at(c1 * cells_per_flash() + c2); }
};

inline constexpr std::size_t kMaxTableCells = 10'000'000;

FlashDensityTable exact_flash_density(const FlashModel& model, const ComplexVector& psi0,
                                      std::size_t n, const QuadratureGrid& bins,
                                      std::size_t nodes_per_bin = 4);

/// Same table for the flashes with `observed` labels only, marginalizing all
/// other flashes, starting from a density matrix. Works on the
/// superoperator exp(t L) with L(r) = G r + r G^* + sum_unobserved S r S.
FlashDensityTable marginal_flash_density(const FlashModel& model, const ComplexMatrix& rho0,
                                         const std::vector<bool>& observed, std::size_t n,
                                         const QuadratureGrid& bins, std::size_t nodes_per_bin = 4);

// ---------------------------------------------------------------------------
// Ensemble dynamics

/// Hermitian, trace one (to 1e-9), eigenvalues >= -1e-8.
class DensityMatrixState {
   public:
    explicit DensityMatrixState(ComplexMatrix rho);
    static DensityMatrixState pure(const ComplexVector& psi);

    const ComplexMatrix& rho() const noexcept { return rho_; }
    double min_eigenvalue() const;

   private:
    ComplexMatrix rho_;
};

/// -i[H, r] - 1/2{Lambda_tot, r} + sum_{i,m} S r S.
ComplexMatrix master_rhs(const FlashModel& model, const ComplexMatrix& rho);

/// Classical RK4 with n_steps equal steps. Throws StepTooLarge if the trace
/// drifts by more than 1e-6.
DensityMatrixState integrate_master_equation(const FlashModel& model,
                                             const DensityMatrixState& rho0, double t,
                                             std::size_t n_steps);

/// States at each of the sorted `times`, RK4 with step <= max_step.
std::vector<DensityMatrixState> integrate_master_equation(const FlashModel& model,
                                                          const DensityMatrixState& rho0,
                                                          const std::vector<double>& times,
                                                          double max_step);

/// rho_t as the sum over n <= max_flashes of the flash-expansion terms,
/// with nested trapezoid integration on n_steps intervals.
ComplexMatrix flash_series_density(const FlashModel& model, const ComplexVector& psi0, double t,
                                   std::size_t max_flashes, std::size_t n_steps);

CheckReport check_master_vs_ensemble(const FlashModel& model, const ComplexVector& psi0,
                                     const std::vector<double>& snapshot_times, std::size_t n_traj,
                                     const SamplerConfig& cfg, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Composite systems

struct NoSignallingOptions {
    std::optional<ComplexMatrix> interaction_a;
    std::optional<ComplexMatrix> interaction_b;
    std::size_t nodes_per_bin = 4;
    double threshold = 1e-8;
};

/// Compares the exact n = 1 and n = 2 marginal flash laws of system 1 in the
/// composites m1 (x) m2a with psi_a and m1 (x) m2b with psi_b (labeled mode).
/// Throws ReducedStateMismatch if tr_2 |psi_a><psi_a| and tr_2 |psi_b><psi_b|
/// differ by more than 1e-10.
CheckReport check_no_signalling(const FlashModel& m1, const FlashModel& m2a, const FlashModel& m2b,
                                const ComplexVector& psi_a, const ComplexVector& psi_b,
                                const QuadratureGrid& bins, const NoSignallingOptions& options = {});

/// Disjoint-support variant: one merged composite per environment, flashes
/// attributed to system 1 by site region.
CheckReport check_no_signalling_by_support(const FlashModel& composite_a,
                                           const FlashModel& composite_b,
                                           const std::vector<std::size_t>& system1_sites,
                                           const ComplexVector& psi_a, const ComplexVector& psi_b,
                                           const QuadratureGrid& bins, double threshold = 1e-8);

// ---------------------------------------------------------------------------
// Second quantization and constants

/// Rows/cols of particle-number block n in a graded model.
std::pair<Eigen::Index, Eigen::Index> sector_block(const FlashModel& graded, std::size_t n);

CheckReport check_second_quantization(const FlashModel& fock_model, std::size_t n_sector,
                                      const FlashModel& identical_model, double threshold = 1e-12);

struct PhysicalProfile {
    double strength_si = 1e5;  // s^-1 m^-3
    double width_si = 1e-7;    // m
    std::vector<double> mass_factors;
};

/// tau = 1 / (pi^{3/2} N a^3); passes if tau lies in [1e14, 1e16] s.
double collapse_time_si(const PhysicalProfile& profile, std::size_t label = 0);
CheckReport check_constants(const PhysicalProfile& profile);

}  // namespace flashsim
