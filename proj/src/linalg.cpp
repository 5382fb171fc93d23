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

#include "flashsim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace flashsim {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotHermitian: return "NotHermitian";
        case ErrorCode::NotPositive: return "NotPositive";
        case ErrorCode::Overflow: return "Overflow";
        case ErrorCode::DimensionOverflow: return "DimensionOverflow";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::BadProfile: return "BadProfile";
        case ErrorCode::EmptySector: return "EmptySector";
        case ErrorCode::LatticeMismatch: return "LatticeMismatch";
        case ErrorCode::NegativeTime: return "NegativeTime";
        case ErrorCode::NonMonotoneHistory: return "NonMonotoneHistory";
        case ErrorCode::NotNormalized: return "NotNormalized";
        case ErrorCode::ZeroProbabilityFlash: return "ZeroProbabilityFlash";
        case ErrorCode::ZeroNorm: return "ZeroNorm";
        case ErrorCode::ZeroTotalRate: return "ZeroTotalRate";
        case ErrorCode::TableTooLarge: return "TableTooLarge";
        case ErrorCode::StepTooLarge: return "StepTooLarge";
        case ErrorCode::ReducedStateMismatch: return "ReducedStateMismatch";
        case ErrorCode::BasisMismatch: return "BasisMismatch";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

namespace {

double entry_scale(const ComplexMatrix& a) {
    return a.size() == 0 ? 1.0 : std::max(1.0, a.cwiseAbs().maxCoeff());
}

bool off_diagonal_zero(const ComplexMatrix& a) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            if (i != j && a(i, j) != Complex(0.0)) return false;
        }
    }
    return true;
}

void require_square(const ComplexMatrix& a, const char* what) {
    if (a.rows() != a.cols()) {
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be square");
    }
}

}  // namespace

bool is_finite(const ComplexMatrix& a) {
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        const Complex z = a.data()[k];
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
    return true;
}

double hermitian_defect(const ComplexMatrix& a) {
    if (a.size() == 0) return 0.0;
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

PositiveOperator::PositiveOperator(ComplexMatrix matrix) {
    require_square(matrix, "positive operator");
    if (!is_finite(matrix)) throw Error(ErrorCode::NotHermitian, "non-finite entries");
    const double scale = entry_scale(matrix);
    const double defect = hermitian_defect(matrix);
    if (defect > kTolHermitian * scale) {
        throw Error(ErrorCode::NotHermitian, "max |A - A^*| = " + std::to_string(defect));
    }
    matrix = 0.5 * (matrix + matrix.adjoint()).eval();

    if (off_diagonal_zero(matrix)) {
        for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
            const double v = matrix(i, i).real();
            if (v < -kTolPositive * scale) {
                throw Error(ErrorCode::NotPositive, "eigenvalue " + std::to_string(v));
            }
            matrix(i, i) = std::max(v, 0.0);
        }
        matrix_ = std::move(matrix);
        diagonal_ = true;
        return;
    }

    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(matrix);
    const RealVector& values = eig.eigenvalues();
    if (values.minCoeff() < -kTolPositive * scale) {
        throw Error(ErrorCode::NotPositive, "eigenvalue " + std::to_string(values.minCoeff()));
    }
    if (values.minCoeff() < 0.0) {
        const RealVector clipped = values.cwiseMax(0.0);
        matrix = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().adjoint();
        matrix = 0.5 * (matrix + matrix.adjoint()).eval();
    }
    matrix_ = std::move(matrix);
    diagonal_ = false;
}

PositiveOperator PositiveOperator::zero(Eigen::Index dim) {
    return PositiveOperator(ComplexMatrix::Zero(dim, dim), true, Trusted{});
}

PermutationSpec::PermutationSpec(std::vector<std::size_t> mapping) : mapping_(std::move(mapping)) {
    if (mapping_.empty()) throw Error(ErrorCode::InvalidArgument, "permutation of zero factors");
    std::vector<bool> seen(mapping_.size(), false);
    for (std::size_t image : mapping_) {
        if (image >= mapping_.size() || seen[image]) {
            throw Error(ErrorCode::InvalidArgument, "permutation mapping is not a bijection");
        }
        seen[image] = true;
    }
}

PermutationSpec PermutationSpec::identity(std::size_t n_factors) {
    std::vector<std::size_t> m(n_factors);
    std::iota(m.begin(), m.end(), std::size_t{0});
    return PermutationSpec(std::move(m));
}

PermutationSpec PermutationSpec::compose(const PermutationSpec& other) const {
    if (other.n_factors() != n_factors()) {
        throw Error(ErrorCode::InvalidArgument, "composing permutations of different size");
    }
    std::vector<std::size_t> m(n_factors());
    for (std::size_t j = 0; j < m.size(); ++j) m[j] = mapping_[other.mapping_[j]];
    return PermutationSpec(std::move(m));
}

PermutationSpec PermutationSpec::inverse() const {
    std::vector<std::size_t> m(n_factors());
    for (std::size_t j = 0; j < m.size(); ++j) m[mapping_[j]] = j;
    return PermutationSpec(std::move(m));
}

int PermutationSpec::sign() const {
    int s = 1;
    for (std::size_t i = 0; i < mapping_.size(); ++i) {
        for (std::size_t j = i + 1; j < mapping_.size(); ++j) {
            if (mapping_[i] > mapping_[j]) s = -s;
        }
    }
    return s;
}

PositiveOperator hermitian_sqrt(const PositiveOperator& a) {
    const ComplexMatrix& m = a.matrix();
    if (a.is_diagonal()) {
        ComplexMatrix r = ComplexMatrix::Zero(m.rows(), m.cols());
        for (Eigen::Index i = 0; i < m.rows(); ++i) r(i, i) = std::sqrt(m(i, i).real());
        return PositiveOperator(std::move(r), true, PositiveOperator::Trusted{});
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(m);
    const RealVector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    ComplexMatrix r = eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().adjoint();
    r = 0.5 * (r + r.adjoint()).eval();
    return PositiveOperator(std::move(r), false, PositiveOperator::Trusted{});
}

ComplexMatrix hermitian_sqrt(const ComplexMatrix& a) {
    return hermitian_sqrt(PositiveOperator(a)).matrix();
}

ComplexMatrix semigroup_exp(const ComplexMatrix& generator, double t) {
    require_square(generator, "generator");
    if (t < 0.0 || !std::isfinite(t)) {
        throw Error(ErrorCode::NegativeTime, "semigroup_exp needs t >= 0");
    }
    const Eigen::Index n = generator.rows();
    const ComplexMatrix id = ComplexMatrix::Identity(n, n);
    if (n == 0 || t == 0.0) return id;

    ComplexMatrix a = generator * t;
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    if (!std::isfinite(norm1) || norm1 > kExpNormLimit) {
        throw Error(ErrorCode::Overflow, "||G t||_1 = " + std::to_string(norm1));
    }
    if (norm1 == 0.0) return id;

    // Higham (2005) degree-13 Pade table.
    static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                   1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                   670442572800.0,      33522128640.0,       1323241920.0,
                                   40840800.0,          960960.0,            16380.0,
                                   182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;

    int squarings = 0;
    if (norm1 > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
        a /= std::ldexp(1.0, squarings);
    }

    const ComplexMatrix a2 = a * a;
    const ComplexMatrix a4 = a2 * a2;
    const ComplexMatrix a6 = a4 * a2;
    const ComplexMatrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 +
                                  b[5] * a4 + b[3] * a2 + b[1] * id;
    const ComplexMatrix u = a * u_inner;
    const ComplexMatrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
                            b[2] * a2 + b[0] * id;

    ComplexMatrix r = (v - u).partialPivLu().solve(v + u);
    for (int k = 0; k < squarings; ++k) r = (r * r).eval();

    if (!is_finite(r)) throw Error(ErrorCode::Overflow, "non-finite exponential");
    return r;
}

std::size_t checked_power(std::size_t d, std::size_t n, std::size_t cap) {
    std::size_t result = 1;
    for (std::size_t k = 0; k < n; ++k) {
        if (d != 0 && result > cap / d) {
            throw Error(ErrorCode::DimensionOverflow,
                        std::to_string(d) + "^" + std::to_string(n) + " exceeds cap " +
                            std::to_string(cap));
        }
        result *= d;
    }
    if (result > cap) throw Error(ErrorCode::DimensionOverflow, "dimension exceeds cap");
    return result;
}

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b, std::size_t dimension_cap) {
    const auto rows = static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(b.rows());
    const auto cols = static_cast<std::size_t>(a.cols()) * static_cast<std::size_t>(b.cols());
    if (rows > dimension_cap || cols > dimension_cap) {
        throw Error(ErrorCode::DimensionOverflow, "tensor product dimension " +
                                                      std::to_string(std::max(rows, cols)) +
                                                      " exceeds cap");
    }
    ComplexMatrix r(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return r;
}

ComplexMatrix direct_sum(const ComplexMatrix& a, const ComplexMatrix& b) {
    require_square(a, "direct sum block");
    require_square(b, "direct sum block");
    ComplexMatrix r = ComplexMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    r.topLeftCorner(a.rows(), a.cols()) = a;
    r.bottomRightCorner(b.rows(), b.cols()) = b;
    return r;
}

PositiveOperator tensor(const PositiveOperator& a, const PositiveOperator& b,
                        std::size_t dimension_cap) {
    return PositiveOperator(tensor(a.matrix(), b.matrix(), dimension_cap));
}

PositiveOperator direct_sum(const PositiveOperator& a, const PositiveOperator& b) {
    return PositiveOperator(direct_sum(a.matrix(), b.matrix()));
}

namespace {

// Product-basis index after moving the factor in slot j to slot sigma[j].
std::vector<std::size_t> permuted_indices(const PermutationSpec& spec, std::size_t d,
                                          std::size_t dim) {
    const std::size_t n = spec.n_factors();
    std::vector<std::size_t> digits(n), moved(n), out(dim);
    for (std::size_t idx = 0; idx < dim; ++idx) {
        std::size_t rest = idx;
        for (std::size_t j = n; j-- > 0;) {
            digits[j] = rest % d;
            rest /= d;
        }
        for (std::size_t j = 0; j < n; ++j) moved[spec[j]] = digits[j];
        std::size_t target = 0;
        for (std::size_t j = 0; j < n; ++j) target = target * d + moved[j];
        out[idx] = target;
    }
    return out;
}

double factorial(std::size_t n) {
    double f = 1.0;
    for (std::size_t k = 2; k <= n; ++k) f *= static_cast<double>(k);
    return f;
}

}  // namespace

ComplexMatrix permutation_operator(const PermutationSpec& spec, std::size_t d,
                                   std::size_t dimension_cap) {
    if (d == 0) throw Error(ErrorCode::InvalidArgument, "factor dimension must be >= 1");
    const std::size_t dim = checked_power(d, spec.n_factors(), dimension_cap);
    const auto image = permuted_indices(spec, d, dim);
    const auto n = static_cast<Eigen::Index>(dim);
    ComplexMatrix u = ComplexMatrix::Zero(n, n);
    for (std::size_t idx = 0; idx < dim; ++idx) {
        u(static_cast<Eigen::Index>(image[idx]), static_cast<Eigen::Index>(idx)) = 1.0;
    }
    return u;
}

PositiveOperator sector_projector(std::size_t d, std::size_t n_factors, Parity parity,
                                  std::size_t dimension_cap) {
    if (d == 0 || n_factors == 0) {
        throw Error(ErrorCode::InvalidArgument, "sector_projector needs d >= 1 and N >= 1");
    }
    const std::size_t dim = checked_power(d, n_factors, dimension_cap);
    const auto n = static_cast<Eigen::Index>(dim);
    ComplexMatrix p = ComplexMatrix::Zero(n, n);
    std::vector<std::size_t> m(n_factors);
    std::iota(m.begin(), m.end(), std::size_t{0});
    do {
        const PermutationSpec sigma(m);
        const double weight = parity == Parity::Fermion ? sigma.sign() : 1.0;
        const auto image = permuted_indices(sigma, d, dim);
        for (std::size_t idx = 0; idx < dim; ++idx) {
            p(static_cast<Eigen::Index>(image[idx]), static_cast<Eigen::Index>(idx)) += weight;
        }
    } while (std::next_permutation(m.begin(), m.end()));
    p /= factorial(n_factors);
    return PositiveOperator(std::move(p));
}

ComplexMatrix embed_factor(const ComplexMatrix& one_body, std::size_t slot,
                           std::size_t n_factors, std::size_t dimension_cap) {
    require_square(one_body, "one-body operator");
    if (slot >= n_factors) throw Error(ErrorCode::InvalidArgument, "slot out of range");
    const auto d = static_cast<std::size_t>(one_body.rows());
    const std::size_t left = checked_power(d, slot, dimension_cap);
    const std::size_t right = checked_power(d, n_factors - slot - 1, dimension_cap);
    checked_power(d, n_factors, dimension_cap);
    const ComplexMatrix il = ComplexMatrix::Identity(static_cast<Eigen::Index>(left),
                                                     static_cast<Eigen::Index>(left));
    const ComplexMatrix ir = ComplexMatrix::Identity(static_cast<Eigen::Index>(right),
                                                     static_cast<Eigen::Index>(right));
    return tensor(tensor(il, one_body, dimension_cap), ir, dimension_cap);
}

ComplexMatrix symmetrized_one_body(const ComplexMatrix& one_body, std::size_t n_factors,
                                   std::size_t dimension_cap) {
    require_square(one_body, "one-body operator");
    if (n_factors == 0) return ComplexMatrix::Zero(1, 1);
    const auto d = static_cast<std::size_t>(one_body.rows());
    const std::size_t dim = checked_power(d, n_factors, dimension_cap);
    const ComplexMatrix first = embed_factor(one_body, 0, n_factors, dimension_cap);

    // U^* A U has entries A(sigma(a), sigma(b)) where sigma acts on indices.
    const auto n = static_cast<Eigen::Index>(dim);
    ComplexMatrix sum = ComplexMatrix::Zero(n, n);
    std::vector<std::size_t> m(n_factors);
    std::iota(m.begin(), m.end(), std::size_t{0});
    do {
        const auto image = permuted_indices(PermutationSpec(m), d, dim);
        for (std::size_t col = 0; col < dim; ++col) {
            for (std::size_t row = 0; row < dim; ++row) {
                sum(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) +=
                    first(static_cast<Eigen::Index>(image[row]),
                          static_cast<Eigen::Index>(image[col]));
            }
        }
    } while (std::next_permutation(m.begin(), m.end()));
    return sum / factorial(n_factors - 1);
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
    const ComplexMatrix diff = a - b;
    const ComplexMatrix herm = 0.5 * (diff + diff.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(herm, Eigen::EigenvaluesOnly);
    return 0.5 * eig.eigenvalues().cwiseAbs().sum();
}

ComplexMatrix partial_trace_second(const ComplexMatrix& rho, Eigen::Index d1, Eigen::Index d2) {
    if (rho.rows() != d1 * d2 || rho.cols() != d1 * d2) {
        throw Error(ErrorCode::InvalidArgument, "partial trace dimension mismatch");
    }
    ComplexMatrix r = ComplexMatrix::Zero(d1, d1);
    for (Eigen::Index i = 0; i < d1; ++i) {
        for (Eigen::Index j = 0; j < d1; ++j) {
            Complex s = 0.0;
            for (Eigen::Index k = 0; k < d2; ++k) s += rho(i * d2 + k, j * d2 + k);
            r(i, j) = s;
        }
    }
    return r;
}

}  // namespace flashsim
