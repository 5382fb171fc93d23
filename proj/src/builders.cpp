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
#include <map>
#include <numeric>
#include <string>

#include "flashsim/model.hpp"

namespace flashsim {

namespace {

using Occupation = std::vector<std::size_t>;

// Sorted mode tuples of length n over d modes in lexicographic order:
// nondecreasing for bosons, strictly increasing for fermions.
std::vector<std::vector<std::size_t>> mode_tuples(std::size_t d, std::size_t n, Parity parity) {
    std::vector<std::vector<std::size_t>> out;
    if (n == 0) {
        out.emplace_back();
        return out;
    }
    if (d == 0 || (parity == Parity::Fermion && n > d)) return out;
    std::vector<std::size_t> t(n);
    for (std::size_t j = 0; j < n; ++j) t[j] = parity == Parity::Fermion ? j : 0;
    while (true) {
        out.push_back(t);
        // Advance to the next tuple: bump the rightmost position that can grow.
        std::size_t pos = n;
        while (pos-- > 0) {
            const std::size_t limit = parity == Parity::Fermion ? d - (n - pos) : d - 1;
            if (t[pos] < limit) break;
        }
        if (pos == static_cast<std::size_t>(-1)) break;
        ++t[pos];
        for (std::size_t j = pos + 1; j < n; ++j) t[j] = parity == Parity::Fermion ? t[j - 1] + 1 : t[pos];
    }
    return out;
}

Occupation to_occupation(const std::vector<std::size_t>& tuple, std::size_t d) {
    Occupation occ(d, 0);
    for (std::size_t k : tuple) ++occ[k];
    return occ;
}

double binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    double r = 1.0;
    for (std::size_t j = 1; j <= k; ++j) r = r * static_cast<double>(n - k + j) / static_cast<double>(j);
    return std::round(r);
}

double sector_dimension(std::size_t d, std::size_t n, Parity parity) {
    return parity == Parity::Boson ? binomial(d + n - 1, n) : binomial(d, n);
}

std::vector<PositiveOperator> diagonal_operators(const std::vector<RealVector>& diagonals) {
    std::vector<PositiveOperator> ops;
    ops.reserve(diagonals.size());
    for (const RealVector& diag : diagonals) {
        ops.emplace_back(ComplexMatrix(diag.cast<Complex>().asDiagonal()));
    }
    return ops;
}

void require_same_lattice(const FlashModel& m1, const FlashModel& m2) {
    if (!(m1.lattice() == m2.lattice())) {
        throw Error(ErrorCode::LatticeMismatch, "models live on different lattices");
    }
}

}  // namespace

std::vector<std::vector<std::size_t>> fock_basis(std::size_t n_sites, std::size_t n_max,
                                                 Parity parity) {
    std::vector<Occupation> basis;
    for (std::size_t n = 0; n <= n_max; ++n) {
        for (const auto& t : mode_tuples(n_sites, n, parity)) basis.push_back(to_occupation(t, n_sites));
    }
    return basis;
}

ComplexMatrix sector_isometry(std::size_t d, std::size_t n_factors, Parity parity,
                              std::size_t dimension_cap) {
    const std::size_t full = checked_power(d, n_factors, dimension_cap);
    const auto tuples = mode_tuples(d, n_factors, parity);
    ComplexMatrix v = ComplexMatrix::Zero(static_cast<Eigen::Index>(full),
                                          static_cast<Eigen::Index>(tuples.size()));
    std::vector<std::size_t> positions(n_factors);
    for (std::size_t col = 0; col < tuples.size(); ++col) {
        const auto& t = tuples[col];
        std::iota(positions.begin(), positions.end(), std::size_t{0});
        do {
            const double sign = parity == Parity::Fermion ? PermutationSpec(positions).sign() : 1.0;
            std::size_t idx = 0;
            for (std::size_t j = 0; j < n_factors; ++j) idx = idx * d + t[positions[j]];
            v(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(col)) += sign;
        } while (std::next_permutation(positions.begin(), positions.end()));
        v.col(static_cast<Eigen::Index>(col)).normalize();
    }
    return v;
}

FlashModel build_grw_model(std::size_t n_particles, const Lattice& lattice,
                           const RateProfile& profile, const HamiltonianSpec& hamiltonian,
                           std::size_t dimension_cap) {
    if (n_particles == 0) throw Error(ErrorCode::InvalidArgument, "GRW model needs a particle");
    if (hamiltonian.source != 0.0) {
        throw Error(ErrorCode::InvalidArgument, "particle source term needs a Fock model");
    }
    profile.validate();
    const std::size_t m = lattice.n_sites();
    const std::size_t dim = checked_power(m, n_particles, dimension_cap);
    const RealMatrix w = profile_weights(lattice, profile);

    // coords[idx][i] = site of particle i in product basis state idx
    std::vector<std::vector<std::size_t>> coords(dim, std::vector<std::size_t>(n_particles));
    for (std::size_t idx = 0; idx < dim; ++idx) {
        std::size_t rest = idx;
        for (std::size_t i = n_particles; i-- > 0;) {
            coords[idx][i] = rest % m;
            rest /= m;
        }
    }

    std::vector<std::string> labels;
    std::vector<std::vector<PositiveOperator>> ops;
    for (std::size_t i = 0; i < n_particles; ++i) {
        labels.push_back("particle" + std::to_string(i + 1));
        const double mass = profile.mass_factor(i);
        std::vector<RealVector> diags(m, RealVector(static_cast<Eigen::Index>(dim)));
        for (std::size_t x = 0; x < m; ++x) {
            for (std::size_t idx = 0; idx < dim; ++idx) {
                diags[x](static_cast<Eigen::Index>(idx)) =
                    mass * w(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(coords[idx][i]));
            }
        }
        ops.push_back(diagonal_operators(diags));
    }

    const ComplexMatrix h1 = one_particle_hamiltonian(lattice, hamiltonian);
    ComplexMatrix h = ComplexMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < n_particles; ++i) h += embed_factor(h1, i, n_particles, dimension_cap);
    if (hamiltonian.interaction != 0.0) {
        for (std::size_t idx = 0; idx < dim; ++idx) {
            std::size_t pairs = 0;
            for (std::size_t i = 0; i < n_particles; ++i) {
                for (std::size_t j = i + 1; j < n_particles; ++j) pairs += coords[idx][i] == coords[idx][j];
            }
            const auto k = static_cast<Eigen::Index>(idx);
            h(k, k) += hamiltonian.interaction * static_cast<double>(pairs);
        }
    }
    return FlashModel(lattice, std::move(h), RateOperatorFamily(std::move(labels), std::move(ops)));
}

FlashModel build_identical_model(std::size_t n_particles, Parity parity,
                                 const FlashModel& one_particle, double interaction,
                                 std::size_t dimension_cap) {
    if (one_particle.n_labels() != 1) {
        throw Error(ErrorCode::InvalidArgument, "identical particles need a single-label model");
    }
    const auto d = static_cast<std::size_t>(one_particle.dim());
    const std::size_t m = one_particle.n_sites();
    const std::string& label = one_particle.labels()[0];

    if (n_particles == 0) {
        std::vector<std::vector<PositiveOperator>> ops(1, std::vector<PositiveOperator>(m, PositiveOperator::zero(1)));
        return FlashModel(one_particle.lattice(), ComplexMatrix::Zero(1, 1),
                          RateOperatorFamily({label}, std::move(ops)), {1});
    }
    if (parity == Parity::Fermion && n_particles > d) {
        throw Error(ErrorCode::EmptySector, std::to_string(n_particles) + " fermions in " +
                                                std::to_string(d) + " modes");
    }
    if (interaction != 0.0 && d != m) {
        throw Error(ErrorCode::InvalidArgument, "on-site interaction needs a site-basis model");
    }

    const ComplexMatrix v = sector_isometry(d, n_particles, parity, dimension_cap);
    const auto sector = static_cast<std::size_t>(v.cols());

    std::vector<PositiveOperator> site_ops;
    site_ops.reserve(m);
    for (std::size_t x = 0; x < m; ++x) {
        const ComplexMatrix full =
            symmetrized_one_body(one_particle.rates().at(0, x).matrix(), n_particles, dimension_cap);
        site_ops.emplace_back(ComplexMatrix(v.adjoint() * full * v));
    }

    ComplexMatrix h_full = ComplexMatrix::Zero(v.rows(), v.rows());
    for (std::size_t i = 0; i < n_particles; ++i) {
        h_full += embed_factor(one_particle.hamiltonian(), i, n_particles, dimension_cap);
    }
    if (interaction != 0.0) {
        for (Eigen::Index idx = 0; idx < h_full.rows(); ++idx) {
            std::vector<std::size_t> r(n_particles);
            auto rest = static_cast<std::size_t>(idx);
            for (std::size_t i = n_particles; i-- > 0;) {
                r[i] = rest % d;
                rest /= d;
            }
            std::size_t pairs = 0;
            for (std::size_t i = 0; i < n_particles; ++i) {
                for (std::size_t j = i + 1; j < n_particles; ++j) pairs += r[i] == r[j];
            }
            h_full(idx, idx) += interaction * static_cast<double>(pairs);
        }
    }
    ComplexMatrix h = v.adjoint() * h_full * v;

    std::vector<std::vector<PositiveOperator>> ops{std::move(site_ops)};
    return FlashModel(one_particle.lattice(), std::move(h),
                      RateOperatorFamily({label}, std::move(ops)), {sector});
}

FlashModel build_fock_model(std::size_t n_max, const Lattice& lattice, const RateProfile& profile,
                            Parity parity, const HamiltonianSpec& hamiltonian,
                            std::size_t dimension_cap) {
    profile.validate();
    const std::size_t m = lattice.n_sites();

    double expected = 0.0;
    for (std::size_t n = 0; n <= n_max; ++n) expected += sector_dimension(m, n, parity);
    if (expected > static_cast<double>(dimension_cap)) {
        throw Error(ErrorCode::DimensionOverflow,
                    "Fock dimension " + std::to_string(expected) + " exceeds cap");
    }

    std::vector<Occupation> basis;
    std::vector<std::size_t> sector_dims;
    for (std::size_t n = 0; n <= n_max; ++n) {
        const auto tuples = mode_tuples(m, n, parity);
        sector_dims.push_back(tuples.size());
        for (const auto& t : tuples) basis.push_back(to_occupation(t, m));
    }
    std::map<Occupation, std::size_t> index;
    for (std::size_t b = 0; b < basis.size(); ++b) index.emplace(basis[b], b);
    const auto dim = static_cast<Eigen::Index>(basis.size());

    // Number-density rates: Lambda(x) = mass * sum_k w(x, y_k) N(y_k).
    const RealMatrix w = profile_weights(lattice, profile);
    const double mass = profile.mass_factor(0);
    std::vector<RealVector> diags(m, RealVector::Zero(dim));
    for (std::size_t x = 0; x < m; ++x) {
        for (std::size_t b = 0; b < basis.size(); ++b) {
            double v = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                v += w(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(k)) *
                     static_cast<double>(basis[b][k]);
            }
            diags[x](static_cast<Eigen::Index>(b)) = mass * v;
        }
    }

    // Ladder operators in the occupation basis. Fermion signs follow the
    // mode order: a*_k picks up (-1)^{sum_{j<k} n_j}.
    auto sign_below = [parity](const Occupation& occ, std::size_t k) {
        if (parity == Parity::Boson) return 1.0;
        std::size_t s = 0;
        for (std::size_t j = 0; j < k; ++j) s += occ[j];
        return s % 2 == 0 ? 1.0 : -1.0;
    };
    auto annihilate = [&](Occupation& occ, std::size_t k) -> double {
        if (occ[k] == 0) return 0.0;
        const double amp = parity == Parity::Boson ? std::sqrt(static_cast<double>(occ[k])) : sign_below(occ, k);
        --occ[k];
        return amp;
    };
    auto create = [&](Occupation& occ, std::size_t k) -> double {
        if (parity == Parity::Fermion && occ[k] == 1) return 0.0;
        const double amp = parity == Parity::Boson ? std::sqrt(static_cast<double>(occ[k] + 1)) : sign_below(occ, k);
        ++occ[k];
        return amp;
    };
    auto particles = [](const Occupation& occ) { return std::accumulate(occ.begin(), occ.end(), std::size_t{0}); };

    const ComplexMatrix h1 = one_particle_hamiltonian(lattice, hamiltonian);
    ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
    for (std::size_t b = 0; b < basis.size(); ++b) {
        const auto col = static_cast<Eigen::Index>(b);
        for (std::size_t k = 0; k < m; ++k) {
            for (std::size_t l = 0; l < m; ++l) {
                const Complex hkl = h1(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
                if (hkl == Complex(0.0)) continue;
                Occupation occ = basis[b];
                const double a1 = annihilate(occ, l);
                if (a1 == 0.0) continue;
                const double a2 = create(occ, k);
                if (a2 == 0.0) continue;
                h(static_cast<Eigen::Index>(index.at(occ)), col) += hkl * a1 * a2;
            }
            const double nk = static_cast<double>(basis[b][k]);
            h(col, col) += 0.5 * hamiltonian.interaction * nk * (nk - 1.0);
            if (hamiltonian.source != 0.0) {
                Occupation up = basis[b];
                if (particles(up) < n_max) {
                    const double amp = create(up, k);
                    if (amp != 0.0) h(static_cast<Eigen::Index>(index.at(up)), col) += hamiltonian.source * amp;
                }
                Occupation down = basis[b];
                const double amp = annihilate(down, k);
                if (amp != 0.0) h(static_cast<Eigen::Index>(index.at(down)), col) += hamiltonian.source * amp;
            }
        }
    }

    std::vector<std::vector<PositiveOperator>> ops{diagonal_operators(diags)};
    return FlashModel(lattice, std::move(h), RateOperatorFamily({"flash"}, std::move(ops)),
                      std::move(sector_dims));
}

FlashModel compose_tensor(const FlashModel& m1, const FlashModel& m2, ComposeMode mode,
                          const std::optional<ComplexMatrix>& interaction,
                          std::size_t dimension_cap) {
    require_same_lattice(m1, m2);
    const Eigen::Index d1 = m1.dim();
    const Eigen::Index d2 = m2.dim();
    const ComplexMatrix i1 = ComplexMatrix::Identity(d1, d1);
    const ComplexMatrix i2 = ComplexMatrix::Identity(d2, d2);

    ComplexMatrix h = tensor(m1.hamiltonian(), i2, dimension_cap) + tensor(i1, m2.hamiltonian(), dimension_cap);
    if (interaction) {
        if (interaction->rows() != h.rows() || interaction->cols() != h.cols()) {
            throw Error(ErrorCode::InvalidArgument, "interaction has the wrong dimension");
        }
        h += *interaction;
    }

    const std::size_t m = m1.n_sites();
    std::vector<std::string> labels;
    std::vector<std::vector<PositiveOperator>> ops;
    if (mode == ComposeMode::Labeled) {
        bool collide = false;
        for (const auto& l : m1.labels()) collide = collide || m2.rates().label_index(l).has_value();
        for (std::size_t i = 0; i < m1.n_labels(); ++i) {
            labels.push_back(collide ? "a." + m1.labels()[i] : m1.labels()[i]);
            std::vector<PositiveOperator> row;
            for (std::size_t x = 0; x < m; ++x) row.push_back(tensor(m1.rates().at(i, x), PositiveOperator(i2), dimension_cap));
            ops.push_back(std::move(row));
        }
        for (std::size_t j = 0; j < m2.n_labels(); ++j) {
            labels.push_back(collide ? "b." + m2.labels()[j] : m2.labels()[j]);
            std::vector<PositiveOperator> row;
            for (std::size_t x = 0; x < m; ++x) row.push_back(tensor(PositiveOperator(i1), m2.rates().at(j, x), dimension_cap));
            ops.push_back(std::move(row));
        }
    } else {
        labels.push_back("flash");
        std::vector<PositiveOperator> row;
        for (std::size_t x = 0; x < m; ++x) {
            ComplexMatrix a = ComplexMatrix::Zero(d1, d1);
            for (std::size_t i = 0; i < m1.n_labels(); ++i) a += m1.rates().at(i, x).matrix();
            ComplexMatrix b = ComplexMatrix::Zero(d2, d2);
            for (std::size_t j = 0; j < m2.n_labels(); ++j) b += m2.rates().at(j, x).matrix();
            row.emplace_back(ComplexMatrix(tensor(a, i2, dimension_cap) + tensor(i1, b, dimension_cap)));
        }
        ops.push_back(std::move(row));
    }
    return FlashModel(m1.lattice(), std::move(h), RateOperatorFamily(std::move(labels), std::move(ops)));
}

FlashModel compose_direct_sum(const FlashModel& m1, const FlashModel& m2) {
    require_same_lattice(m1, m2);
    std::vector<std::string> labels = m1.labels();
    for (const auto& l : m2.labels()) {
        if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
    }
    const std::size_t m = m1.n_sites();
    std::vector<std::vector<PositiveOperator>> ops;
    for (const auto& l : labels) {
        const auto i1 = m1.rates().label_index(l);
        const auto i2 = m2.rates().label_index(l);
        std::vector<PositiveOperator> row;
        for (std::size_t x = 0; x < m; ++x) {
            const PositiveOperator a = i1 ? m1.rates().at(*i1, x) : PositiveOperator::zero(m1.dim());
            const PositiveOperator b = i2 ? m2.rates().at(*i2, x) : PositiveOperator::zero(m2.dim());
            row.push_back(direct_sum(a, b));
        }
        ops.push_back(std::move(row));
    }

    std::vector<std::size_t> blocks;
    if (m1.dim() == 0 || m2.dim() == 0) {
        blocks = m1.dim() == 0 ? m2.sector_dims() : m1.sector_dims();
    } else {
        for (const FlashModel* part : {&m1, &m2}) {
            if (!part->sector_dims().empty()) {
                blocks.insert(blocks.end(), part->sector_dims().begin(), part->sector_dims().end());
            } else {
                blocks.push_back(static_cast<std::size_t>(part->dim()));
            }
        }
    }
    return FlashModel(m1.lattice(), direct_sum(m1.hamiltonian(), m2.hamiltonian()),
                      RateOperatorFamily(std::move(labels), std::move(ops)), std::move(blocks));
}

FlashModel split_labels_by_support(const FlashModel& model,
                                   const std::vector<std::vector<std::size_t>>& regions,
                                   const std::vector<std::string>& region_names) {
    if (regions.size() != region_names.size() || regions.empty()) {
        throw Error(ErrorCode::InvalidArgument, "one name per region required");
    }
    std::vector<int> owner(model.n_sites(), -1);
    for (std::size_t s = 0; s < regions.size(); ++s) {
        for (std::size_t site : regions[s]) {
            if (site >= model.n_sites() || owner[site] != -1) {
                throw Error(ErrorCode::InvalidArgument, "regions must partition the lattice");
            }
            owner[site] = static_cast<int>(s);
        }
    }
    if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
        throw Error(ErrorCode::InvalidArgument, "regions must cover the lattice");
    }

    std::vector<std::string> labels;
    std::vector<std::vector<PositiveOperator>> ops;
    for (std::size_t i = 0; i < model.n_labels(); ++i) {
        for (std::size_t s = 0; s < regions.size(); ++s) {
            labels.push_back(model.n_labels() == 1 ? region_names[s]
                                                   : model.labels()[i] + "." + region_names[s]);
            std::vector<PositiveOperator> row;
            for (std::size_t x = 0; x < model.n_sites(); ++x) {
                row.push_back(owner[x] == static_cast<int>(s) ? model.rates().at(i, x)
                                                              : PositiveOperator::zero(model.dim()));
            }
            ops.push_back(std::move(row));
        }
    }
    return FlashModel(model.lattice(), model.hamiltonian(),
                      RateOperatorFamily(std::move(labels), std::move(ops)), model.sector_dims());
}

}  // namespace flashsim
