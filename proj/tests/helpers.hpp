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

#include <cmath>
#include <vector>

#include "flashsim/model.hpp"
#include "flashsim/rng.hpp"

namespace flashsim::testing {

inline ComplexMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, Philox4x32& rng) {
    ComplexMatrix a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = Complex(rng.uniform() - 0.5, rng.uniform() - 0.5);
    }
    return a;
}

inline ComplexMatrix random_hermitian(Eigen::Index d, Philox4x32& rng) {
    const ComplexMatrix a = random_matrix(d, d, rng);
    return 0.5 * (a + a.adjoint());
}

// B B^* scaled so that its largest entry is about `scale`.
inline ComplexMatrix random_positive(Eigen::Index d, Philox4x32& rng, double scale = 1.0) {
    const ComplexMatrix b = random_matrix(d, d, rng);
    const ComplexMatrix p = b * b.adjoint();
    return (scale / p.cwiseAbs().maxCoeff()) * p;
}

inline ComplexVector random_state(Eigen::Index d, Philox4x32& rng) {
    ComplexVector v = random_matrix(d, 1, rng);
    return v / v.norm();
}

/// A model with random H and random positive rate operators on a ring.
inline FlashModel random_model(Eigen::Index d, std::size_t sites, std::size_t labels, Philox4x32& rng,
                               double rate_scale = 1.0) {
    std::vector<std::string> names;
    std::vector<std::vector<PositiveOperator>> ops;
    for (std::size_t i = 0; i < labels; ++i) {
        names.push_back("l" + std::to_string(i));
        std::vector<PositiveOperator> row;
        for (std::size_t m = 0; m < sites; ++m) row.emplace_back(random_positive(d, rng, rate_scale));
        ops.push_back(std::move(row));
    }
    return FlashModel(Lattice::ring(sites), random_hermitian(d, rng),
                      RateOperatorFamily(std::move(names), std::move(ops)));
}

/// Diagonal model: basis state k flashes at site k % sites with rate rates[k].
inline FlashModel diagonal_model(const std::vector<double>& rates, std::size_t sites) {
    const auto d = static_cast<Eigen::Index>(rates.size());
    std::vector<PositiveOperator> row;
    for (std::size_t m = 0; m < sites; ++m) {
        ComplexMatrix a = ComplexMatrix::Zero(d, d);
        for (Eigen::Index k = 0; k < d; ++k) {
            if (static_cast<std::size_t>(k) % sites == m) a(k, k) = rates[static_cast<std::size_t>(k)];
        }
        row.emplace_back(a);
    }
    return FlashModel(Lattice::ring(sites), ComplexMatrix::Zero(d, d),
                      RateOperatorFamily({"flash"}, {std::move(row)}));
}

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace flashsim::testing
