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

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "flashsim/error.hpp"

namespace flashsim {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Hermiticity and positivity windows. Both scale with max(1, max|A_ij|) so
// that large physical rate constants do not trip them on round-off.
inline constexpr double kTolHermitian = 1e-12;
inline constexpr double kTolPositive = 1e-10;

inline constexpr std::size_t kDefaultDimensionCap = 65536;

// Largest 1-norm of G*t accepted by semigroup_exp. Above this the number of
// squarings grows past the point where the result is meaningful.
inline constexpr double kExpNormLimit = 1e7;

enum class Parity { Boson, Fermion };

/// A square Hermitian matrix with spectrum >= 0.
///
/// Construction validates the matrix: entries must be finite, the Hermitian
/// defect must be within kTolHermitian and every eigenvalue must be above
/// -kTolPositive. Small negative eigenvalues are clipped to zero and the
/// stored matrix is exactly Hermitian.
class PositiveOperator {
   public:
    PositiveOperator() = default;
    explicit PositiveOperator(ComplexMatrix matrix);

    /// The zero operator on a space of dimension `dim`.
    static PositiveOperator zero(Eigen::Index dim);

    const ComplexMatrix& matrix() const noexcept { return matrix_; }
    Eigen::Index dim() const noexcept { return matrix_.rows(); }
    bool is_diagonal() const noexcept { return diagonal_; }

   private:
    struct Trusted {};
    PositiveOperator(ComplexMatrix matrix, bool diagonal, Trusted)
        : matrix_(std::move(matrix)), diagonal_(diagonal) {}

    friend PositiveOperator hermitian_sqrt(const PositiveOperator& a);

    ComplexMatrix matrix_;
    bool diagonal_ = true;
};

/// A permutation of N tensor factors, 0-based: factor j is moved to slot
/// mapping[j].
class PermutationSpec {
   public:
    explicit PermutationSpec(std::vector<std::size_t> mapping);

    static PermutationSpec identity(std::size_t n_factors);

    std::size_t n_factors() const noexcept { return mapping_.size(); }
    const std::vector<std::size_t>& mapping() const noexcept { return mapping_; }
    std::size_t operator[](std::size_t j) const { return mapping_[j]; }

    // (this o other)[j] = this[other[j]]
    PermutationSpec compose(const PermutationSpec& other) const;
    PermutationSpec inverse() const;
    int sign() const;

   private:
    std::vector<std::size_t> mapping_;
};

bool is_finite(const ComplexMatrix& a);
double hermitian_defect(const ComplexMatrix& a);

/// Principal square root of a positive operator.
PositiveOperator hermitian_sqrt(const PositiveOperator& a);
/// Validating overload; throws NotHermitian or NotPositive.
ComplexMatrix hermitian_sqrt(const ComplexMatrix& a);

/// e^{G t} for t >= 0 by scaling and squaring with a degree-13 Pade
/// approximant. Throws Overflow if ||G t||_1 > kExpNormLimit.
ComplexMatrix semigroup_exp(const ComplexMatrix& generator, double t);

/// Kronecker product; entry (i*rB + k, j*cB + l) = A_ij B_kl.
ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b,
                     std::size_t dimension_cap = kDefaultDimensionCap);

/// Block-diagonal [[A, 0], [0, B]]. Either block may be empty.
ComplexMatrix direct_sum(const ComplexMatrix& a, const ComplexMatrix& b);

PositiveOperator tensor(const PositiveOperator& a, const PositiveOperator& b,
                        std::size_t dimension_cap = kDefaultDimensionCap);
PositiveOperator direct_sum(const PositiveOperator& a, const PositiveOperator& b);

/// U_sigma on (C^d)^{(x)N}, acting on product basis vectors by moving the
/// factor in slot j to slot sigma[j]. U_sigma U_pi = U_{sigma o pi}.
ComplexMatrix permutation_operator(const PermutationSpec& spec, std::size_t d,
                                   std::size_t dimension_cap = kDefaultDimensionCap);

/// (1/N!) sum_sigma (+-1)^{sgn sigma} U_sigma.
PositiveOperator sector_projector(std::size_t d, std::size_t n_factors, Parity parity,
                                  std::size_t dimension_cap = kDefaultDimensionCap);

/// d^n with overflow detection against `cap`; throws DimensionOverflow.
std::size_t checked_power(std::size_t d, std::size_t n, std::size_t cap);

/// sum_sigma U_sigma^* (A (x) I (x) ... (x) I) U_sigma / (N-1)!, i.e. the
/// operator sum_i I^{(x)(i-1)} (x) A (x) I^{(x)(N-i)}.
ComplexMatrix symmetrized_one_body(const ComplexMatrix& one_body, std::size_t n_factors,
                                   std::size_t dimension_cap = kDefaultDimensionCap);

/// I^{(x)slot} (x) A (x) I^{(x)(n-slot-1)} with A acting on factor `slot`.
ComplexMatrix embed_factor(const ComplexMatrix& one_body, std::size_t slot,
                           std::size_t n_factors,
                           std::size_t dimension_cap = kDefaultDimensionCap);

/// Trace norm distance 0.5 * ||A - B||_1 for Hermitian A, B.
double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);

/// Partial trace over the second factor of C^{d1} (x) C^{d2}.
ComplexMatrix partial_trace_second(const ComplexMatrix& rho, Eigen::Index d1, Eigen::Index d2);

}  // namespace flashsim
