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


#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "flashsim/model.hpp"
#include "helpers.hpp"

using namespace flashsim;
using namespace flashsim::testing;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

std::size_t index_of(const std::vector<std::vector<std::size_t>>& basis, std::vector<std::size_t> occ) {
    const auto it = std::find(basis.begin(), basis.end(), occ);
    REQUIRE(it != basis.end());
    return static_cast<std::size_t>(it - basis.begin());
}

}  // namespace

TEST_CASE("lattice geometry") {
    const Lattice ring = Lattice::ring(5, 0.5);
    CHECK(ring.n_sites() == 5);
    CHECK(ring.coordinates(3)[0] == doctest::Approx(1.5));
    CHECK(ring.distance2(0, 4) == doctest::Approx(0.25));  // minimal image
    CHECK(ring.distance2(0, 2) == doctest::Approx(1.0));

    const Lattice grid({2, 3}, 1.0);
    CHECK(grid.n_sites() == 6);
    const auto c = grid.coordinates(5);  // row-major: (1, 2)
    CHECK(c[0] == 1.0);
    CHECK(c[1] == 2.0);
    // Extent 2 reaches the same neighbour in both directions.
    auto nb = grid.neighbours(0);
    CHECK(std::count(nb.begin(), nb.end(), 3u) == 2);
    CHECK(nb.size() == 4);
}

TEST_CASE("profile weights") {
    const Lattice ring = Lattice::ring(4);
    const RealMatrix w = profile_weights(ring, RateProfile::gaussian(2.0, 1.5));
    CHECK(w(0, 0) == doctest::Approx(2.0));
    CHECK(w(0, 1) == doctest::Approx(2.0 * std::exp(-1.0 / 2.25)));
    CHECK(w(0, 3) == doctest::Approx(2.0 * std::exp(-1.0 / 2.25)));
    CHECK(w(0, 2) == doctest::Approx(2.0 * std::exp(-4.0 / 2.25)));
    const RealMatrix d = profile_weights(ring, RateProfile::delta(3.0));
    CHECK(d(1, 1) == 3.0);
    CHECK(d(1, 2) == 0.0);
    CHECK(code_of([] { RateProfile::gaussian(1.0, -1.0).validate(); }) == ErrorCode::BadProfile);
}

TEST_CASE("one-particle Hamiltonian is hopping times minus the Laplacian") {
    HamiltonianSpec spec;
    spec.hopping = 0.5;
    spec.potential = {1.0, 0.0, 0.0, -1.0};
    const ComplexMatrix h = one_particle_hamiltonian(Lattice::ring(4), spec);
    CHECK(h(0, 0).real() == doctest::Approx(1.0 + 1.0));
    CHECK(h(3, 3).real() == doctest::Approx(-1.0 + 1.0));
    CHECK(h(0, 1).real() == doctest::Approx(-0.5));
    CHECK(h(0, 3).real() == doctest::Approx(-0.5));
    CHECK(h(0, 2).real() == 0.0);
    // Two sites: both directions hit the same neighbour.
    spec.potential.clear();
    const ComplexMatrix h2 = one_particle_hamiltonian(Lattice::ring(2), spec);
    CHECK(h2(0, 1).real() == doctest::Approx(-1.0));
}

TEST_CASE("GRW rates on a translation-invariant ring sum to a multiple of the identity") {
    const FlashModel m = build_grw_model(1, Lattice::ring(6), RateProfile::gaussian(0.7, 2.0), {});
    const ComplexMatrix& total = m.total_rate();
    const Complex c = total(0, 0);
    CHECK(max_abs_diff(total, c * ComplexMatrix::Identity(6, 6)) < 1e-14);
    CHECK(m.is_diagonal());
}

TEST_CASE("two-particle GRW rates follow the particle coordinates") {
    const Lattice ring = Lattice::ring(3);
    const RateProfile profile = RateProfile::gaussian(1.0, 1.0, {1.0, 2.5});
    const FlashModel m = build_grw_model(2, ring, profile, {});
    REQUIRE(m.dim() == 9);
    REQUIRE(m.labels() == std::vector<std::string>{"particle1", "particle2"});
    const RealMatrix w = profile_weights(ring, profile);
    for (std::size_t x = 0; x < 3; ++x) {
        for (std::size_t r1 = 0; r1 < 3; ++r1) {
            for (std::size_t r2 = 0; r2 < 3; ++r2) {
                const auto b = static_cast<Eigen::Index>(r1 * 3 + r2);
                CHECK(m.rates().at(0, x).matrix()(b, b).real() == doctest::Approx(w(x, r1)));
                CHECK(m.rates().at(1, x).matrix()(b, b).real() == doctest::Approx(2.5 * w(x, r2)));
            }
        }
    }
}

TEST_CASE("GRW on-site interaction counts coincident pairs") {
    HamiltonianSpec spec;
    spec.interaction = 0.7;
    const FlashModel m = build_grw_model(3, Lattice::ring(2), RateProfile::delta(1.0), spec);
    CHECK(m.hamiltonian()(0, 0).real() == doctest::Approx(3 * 0.7));  // (0,0,0)
    CHECK(m.hamiltonian()(1, 1).real() == doctest::Approx(1 * 0.7));  // (0,0,1)
    spec.source = 1.0;
    CHECK(code_of([&] { build_grw_model(1, Lattice::ring(2), RateProfile::delta(1.0), spec); }) ==
          ErrorCode::InvalidArgument);
}

TEST_CASE("Fock number-density rates with a delta profile") {
    const FlashModel m = build_fock_model(2, Lattice::ring(2), RateProfile::delta(1.5), Parity::Boson, {});
    // Basis |00>, |10>, |01>, |20>, |11>, |02>.
    REQUIRE(m.dim() == 6);
    const std::vector<double> expect{0, 1.5, 0, 3.0, 1.5, 0};
    for (int b = 0; b < 6; ++b) CHECK(m.rates().at(0, 0).matrix()(b, b).real() == doctest::Approx(expect[b]));
    CHECK(m.sector_dims() == std::vector<std::size_t>{1, 2, 3});
    const auto basis = fock_basis(2, 2, Parity::Boson);
    CHECK(basis[3] == std::vector<std::size_t>{2, 0});
    CHECK(basis[4] == std::vector<std::size_t>{1, 1});
}

TEST_CASE("Fock fermion hopping carries the exchange sign") {
    HamiltonianSpec spec;
    spec.hopping = 0.8;
    const FlashModel m = build_fock_model(2, Lattice::ring(3), RateProfile::delta(1.0), Parity::Fermion, spec);
    const auto basis = fock_basis(3, 2, Parity::Fermion);
    const auto from = static_cast<Eigen::Index>(index_of(basis, {1, 1, 0}));
    const auto to = static_cast<Eigen::Index>(index_of(basis, {0, 1, 1}));
    // a*_2 a_0 |110> = -|011>, and h(2, 0) = -hopping.
    CHECK(m.hamiltonian()(to, from).real() == doctest::Approx(0.8));
    const auto to2 = static_cast<Eigen::Index>(index_of(basis, {1, 0, 1}));
    // a*_2 a_1 |110> = +|101>, h(2, 1) = -hopping.
    CHECK(m.hamiltonian()(to2, from).real() == doctest::Approx(-0.8));
}

TEST_CASE("Fock source term and number-sector caps") {
    HamiltonianSpec spec;
    spec.source = 0.25;
    const FlashModel m = build_fock_model(2, Lattice::ring(1), RateProfile::delta(1.0), Parity::Boson, spec);
    // Single mode: a* |0> = |1>, a* |1> = sqrt(2) |2>.
    CHECK(m.hamiltonian()(1, 0).real() == doctest::Approx(0.25));
    CHECK(m.hamiltonian()(2, 1).real() == doctest::Approx(0.25 * std::sqrt(2.0)));
    CHECK(code_of([] { build_fock_model(30, Lattice::ring(8), RateProfile::delta(1.0), Parity::Boson, {}); }) ==
          ErrorCode::DimensionOverflow);
}

TEST_CASE("identical-particle sectors reproduce the Fock model") {
    HamiltonianSpec spec;
    spec.hopping = 0.6;
    spec.potential = {0.1, -0.2, 0.3};
    spec.interaction = 0.4;
    const Lattice ring = Lattice::ring(3);
    const RateProfile profile = RateProfile::gaussian(1.2, 0.9);
    for (Parity parity : {Parity::Boson, Parity::Fermion}) {
        CAPTURE(static_cast<int>(parity));
        const FlashModel fock = build_fock_model(3, ring, profile, parity, spec);
        HamiltonianSpec h1 = spec;
        h1.interaction = 0.0;
        const FlashModel one = build_grw_model(1, ring, profile, h1);
        const FlashModel single(ring, one.hamiltonian(),
                                RateOperatorFamily({"flash"}, {one.rates().operators()[0]}));
        FlashModel sum = build_identical_model(0, parity, single, spec.interaction);
        for (std::size_t n = 1; n <= 3; ++n) {
            sum = compose_direct_sum(sum, build_identical_model(n, parity, single, spec.interaction));
        }
        REQUIRE(sum.dim() == fock.dim());
        CHECK(sum.sector_dims() == fock.sector_dims());
        CHECK(max_abs_diff(sum.hamiltonian(), fock.hamiltonian()) < 1e-12);
        for (std::size_t x = 0; x < 3; ++x) {
            CHECK(max_abs_diff(sum.rates().at(0, x).matrix(), fock.rates().at(0, x).matrix()) < 1e-12);
        }
    }
    const FlashModel one = build_grw_model(1, Lattice::ring(2), RateProfile::delta(1.0), {});
    const FlashModel single(Lattice::ring(2), one.hamiltonian(),
                            RateOperatorFamily({"flash"}, {one.rates().operators()[0]}));
    CHECK(code_of([&] { build_identical_model(3, Parity::Fermion, single); }) == ErrorCode::EmptySector);
}

TEST_CASE("labeled tensor composite of two GRW particles is the two-particle GRW model") {
    const Lattice ring = Lattice::ring(3);
    const RateProfile profile = RateProfile::gaussian(1.0, 1.3);
    HamiltonianSpec spec;
    spec.hopping = 0.5;
    const FlashModel one = build_grw_model(1, ring, profile, spec);
    const FlashModel two = build_grw_model(2, ring, profile, spec);
    const FlashModel comp = compose_tensor(one, one, ComposeMode::Labeled);
    CHECK(comp.labels() == std::vector<std::string>{"a.particle1", "b.particle1"});
    CHECK(max_abs_diff(comp.hamiltonian(), two.hamiltonian()) < 1e-14);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t x = 0; x < 3; ++x) {
            CHECK(max_abs_diff(comp.rates().at(i, x).matrix(), two.rates().at(i, x).matrix()) < 1e-14);
        }
    }
    const FlashModel merged = compose_tensor(one, one, ComposeMode::Merged);
    CHECK(merged.n_labels() == 1);
    CHECK(max_abs_diff(merged.total_rate(), two.total_rate()) < 1e-13);
    const FlashModel other = build_grw_model(1, Lattice::ring(4), profile, spec);
    CHECK(code_of([&] { compose_tensor(one, other, ComposeMode::Labeled); }) == ErrorCode::LatticeMismatch);
}

TEST_CASE("split_labels_by_support partitions the rates") {
    Philox4x32 rng(11, 0);
    const FlashModel m = random_model(3, 4, 1, rng);
    const FlashModel s = split_labels_by_support(m, {{0, 1}, {2, 3}}, {"left", "right"});
    CHECK(s.labels() == std::vector<std::string>{"left", "right"});
    CHECK(max_abs_diff(s.total_rate(), m.total_rate()) < 1e-14);
    CHECK(s.rates().at(0, 2).matrix().cwiseAbs().maxCoeff() == 0.0);
    CHECK(max_abs_diff(s.rates().at(1, 2).matrix(), m.rates().at(0, 2).matrix()) == 0.0);
    CHECK(code_of([&] { split_labels_by_support(m, {{0, 1}, {1, 2, 3}}, {"a", "b"}); }) ==
          ErrorCode::InvalidArgument);
}

TEST_CASE("model validation") {
    Philox4x32 rng(12, 0);
    ComplexMatrix h = random_matrix(2, 2, rng);
    std::vector<std::vector<PositiveOperator>> ops{{PositiveOperator::zero(2)}};
    CHECK(code_of([&] { FlashModel(Lattice::ring(1), h, RateOperatorFamily({"flash"}, ops)); }) ==
          ErrorCode::NotHermitian);
    const FlashModel e = FlashModel::empty(Lattice::ring(2));
    CHECK(e.dim() == 0);
}

TEST_CASE("kernel, collapse and conditional wave function") {
    Philox4x32 rng(13, 0);
    const FlashModel m = random_model(3, 2, 2, rng);
    const ComplexVector psi = random_state(3, rng);
    const FlashHistory h{{0.2, 1, 0}, {0.5, 0, 1}, {0.9, 1, 1}};
    ComplexVector ref = psi;
    double clock = 0.0;
    for (const auto& f : h) {
        ref = m.sqrt_rate(f.label, f.site) * semigroup_exp(m.generator(), f.t - clock) * ref;
        clock = f.t;
    }
    CHECK((kernel_apply(m, psi, h) - ref).norm() < 1e-14);

    const ComplexVector cwf = conditional_wave_function(m, psi, h, 1.4);
    const ComplexVector expect = semigroup_exp(m.generator(), 0.5) * ref;
    CHECK(cwf.norm() == doctest::Approx(1.0));
    CHECK((cwf - expect / expect.norm()).norm() < 1e-12);

    const ComplexVector c = collapse(m, psi, 1, 0);
    const ComplexVector cref = m.sqrt_rate(0, 1) * psi;
    CHECK((c - cref / cref.norm()).norm() < 1e-14);

    CHECK(code_of([&] { kernel_apply(m, psi, {{0.5, 0, 0}, {0.2, 0, 0}}); }) == ErrorCode::NonMonotoneHistory);
    CHECK(code_of([&] { propagate(m, psi, -0.1); }) == ErrorCode::NegativeTime);
    CHECK(code_of([&] { require_normalized(m, 2.0 * psi); }) == ErrorCode::NotNormalized);
}

TEST_CASE("collapse onto a site with zero rate is impossible") {
    const FlashModel m = diagonal_model({1.0, 2.0}, 2);
    ComplexVector psi = ComplexVector::Zero(2);
    psi(0) = 1.0;
    CHECK(code_of([&] { collapse(m, psi, 1, 0); }) == ErrorCode::ZeroProbabilityFlash);
}

TEST_CASE("rate and matter densities") {
    Philox4x32 rng(14, 0);
    const FlashModel m = random_model(3, 3, 2, rng);
    const ComplexVector psi = random_state(3, rng);
    const RealMatrix rates = flash_rate_density(m, psi);
    const RealVector md = matter_density(m, psi);
    for (std::size_t x = 0; x < 3; ++x) {
        const double expect0 = psi.dot(m.rates().at(0, x).matrix() * psi).real();
        CHECK(rates(0, static_cast<Eigen::Index>(x)) == doctest::Approx(expect0));
        CHECK(md(static_cast<Eigen::Index>(x)) == doctest::Approx(rates.col(static_cast<Eigen::Index>(x)).sum()));
    }
    CHECK(rates.sum() == doctest::Approx(psi.dot(m.total_rate() * psi).real()));
}
