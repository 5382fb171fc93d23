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

#include "flashsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace flashsim {

namespace {

using Json = nlohmann::json;

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::ValidationError, path + ": " + what);
}

// A JSON object together with its dotted path, for error messages.
class Section {
   public:
    Section(const Json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) invalid(path_, "expected an object");
        for (const auto& [key, value] : j_.items()) {
            if (!allowed.count(key)) invalid(child(key), "unknown key");
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    const Json& raw(const std::string& key) const { return j_.at(key); }
    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    double number(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        return as_number(j_.at(key), child(key));
    }

    std::size_t count(const std::string& key, std::size_t fallback) const {
        if (!has(key)) return fallback;
        return as_count(j_.at(key), child(key));
    }

    std::uint64_t u64(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const Json& v = j_.at(key);
        if (!v.is_number_unsigned()) invalid(child(key), "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    std::string text(const std::string& key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const Json& v = j_.at(key);
        if (!v.is_string()) invalid(child(key), "expected a string");
        return v.get<std::string>();
    }

    bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const Json& v = j_.at(key);
        if (!v.is_boolean()) invalid(child(key), "expected true or false");
        return v.get<bool>();
    }

    std::vector<double> numbers(const std::string& key) const {
        std::vector<double> out;
        if (!has(key)) return out;
        const Json& v = j_.at(key);
        if (!v.is_array()) invalid(child(key), "expected a list of numbers");
        for (std::size_t k = 0; k < v.size(); ++k) out.push_back(as_number(v[k], child(key) + "[" + std::to_string(k) + "]"));
        return out;
    }

    std::vector<std::size_t> counts(const std::string& key) const {
        std::vector<std::size_t> out;
        const Json& v = j_.at(key);
        if (!v.is_array()) invalid(child(key), "expected a list of integers");
        for (std::size_t k = 0; k < v.size(); ++k) out.push_back(as_count(v[k], child(key) + "[" + std::to_string(k) + "]"));
        return out;
    }

    static double as_number(const Json& v, const std::string& path) {
        if (!v.is_number()) invalid(path, "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) invalid(path, "expected a finite number");
        return x;
    }

    static std::size_t as_count(const Json& v, const std::string& path) {
        if (!v.is_number_unsigned()) invalid(path, "expected a non-negative integer");
        return v.get<std::size_t>();
    }

    static Complex as_complex(const Json& v, const std::string& path) {
        if (v.is_number()) return {as_number(v, path), 0.0};
        if (v.is_array() && v.size() == 2) return {as_number(v[0], path + "[0]"), as_number(v[1], path + "[1]")};
        invalid(path, "expected a number or a [re, im] pair");
    }

   private:
    const Json& j_;
    std::string path_;
};

// Line and column (1-based) of a byte offset.
std::pair<std::size_t, std::size_t> locate(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
        if (text[k] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

ModelConfig parse_model(const Json& j) {
    const Section s(j, "model", {"builder", "lattice", "profile", "n_particles", "n_max", "parity",
                                  "hamiltonian", "dimension_cap"});
    ModelConfig m;
    const std::string builder = s.text("builder", "grw");
    if (builder == "grw") {
        m.builder = BuilderKind::Grw;
    } else if (builder == "identical") {
        m.builder = BuilderKind::Identical;
    } else if (builder == "fock") {
        m.builder = BuilderKind::Fock;
    } else {
        invalid("model.builder", "unknown builder '" + builder + "' (grw, identical, fock)");
    }

    if (!s.has("lattice")) invalid("model.lattice", "missing");
    const Section lat(s.raw("lattice"), "model.lattice", {"shape", "spacing"});
    if (!lat.has("shape")) invalid("model.lattice.shape", "missing");
    m.shape = lat.counts("shape");
    if (m.shape.empty() || m.shape.size() > 3) invalid("model.lattice.shape", "needs 1 to 3 extents");
    for (std::size_t e : m.shape) {
        if (e == 0) invalid("model.lattice.shape", "extents must be positive");
    }
    m.spacing = lat.number("spacing", 1.0);
    if (!(m.spacing > 0.0)) invalid("model.lattice.spacing", "must be positive");

    if (!s.has("profile")) invalid("model.profile", "missing");
    const Section prof(s.raw("profile"), "model.profile", {"kind", "strength", "width", "mass_factors"});
    const std::string kind = prof.text("kind", "gaussian");
    if (kind == "gaussian") {
        m.profile.kind = ProfileKind::Gaussian;
    } else if (kind == "delta") {
        m.profile.kind = ProfileKind::Delta;
    } else {
        invalid("model.profile.kind", "unknown profile '" + kind + "' (gaussian, delta)");
    }
    m.profile.strength = prof.number("strength", 1.0);
    m.profile.width = prof.number("width", 1.0);
    m.profile.mass_factors = prof.numbers("mass_factors");
    try {
        m.profile.validate();
    } catch (const Error& e) {
        invalid("model.profile", e.what());
    }

    m.n_particles = s.count("n_particles", 1);
    m.n_max = s.count("n_max", 1);
    const std::string parity = s.text("parity", "boson");
    if (parity == "boson") {
        m.parity = Parity::Boson;
    } else if (parity == "fermion") {
        m.parity = Parity::Fermion;
    } else {
        invalid("model.parity", "expected 'boson' or 'fermion'");
    }

    if (s.has("hamiltonian")) {
        const Section h(s.raw("hamiltonian"), "model.hamiltonian", {"hopping", "potential", "interaction", "source"});
        m.hamiltonian.hopping = h.number("hopping", 0.0);
        m.hamiltonian.potential = h.numbers("potential");
        m.hamiltonian.interaction = h.number("interaction", 0.0);
        m.hamiltonian.source = h.number("source", 0.0);
    }
    m.dimension_cap = s.count("dimension_cap", kDefaultDimensionCap);
    return m;
}

BasisStateSpec parse_basis(const Section& s) {
    BasisStateSpec b;
    if (s.has("basis_index")) b.basis_index = s.count("basis_index", 0);
    if (s.has("sites")) b.sites = s.counts("sites");
    if (s.has("occupation")) b.occupation = s.counts("occupation");
    return b;
}

int basis_forms(const BasisStateSpec& b) {
    return static_cast<int>(b.basis_index.has_value()) + static_cast<int>(b.sites.has_value()) +
           static_cast<int>(b.occupation.has_value());
}

InitialStateConfig parse_initial(const Json& j) {
    const Section s(j, "initial_state", {"amplitudes", "basis_index", "sites", "occupation", "superpose"});
    InitialStateConfig init;
    init.basis = parse_basis(s);
    int forms = basis_forms(init.basis);
    if (s.has("amplitudes")) {
        const Json& a = s.raw("amplitudes");
        if (!a.is_array() || a.empty()) invalid("initial_state.amplitudes", "expected a non-empty list");
        std::vector<Complex> amps;
        for (std::size_t k = 0; k < a.size(); ++k) {
            amps.push_back(Section::as_complex(a[k], "initial_state.amplitudes[" + std::to_string(k) + "]"));
        }
        init.amplitudes = std::move(amps);
        ++forms;
    }
    if (s.has("superpose")) {
        const Json& list = s.raw("superpose");
        if (!list.is_array() || list.empty()) invalid("initial_state.superpose", "expected a non-empty list");
        for (std::size_t k = 0; k < list.size(); ++k) {
            const std::string path = "initial_state.superpose[" + std::to_string(k) + "]";
            const Section term(list[k], path, {"basis_index", "sites", "occupation", "amplitude"});
            BasisStateSpec b = parse_basis(term);
            if (basis_forms(b) != 1) invalid(path, "name the basis state exactly once");
            if (!term.has("amplitude")) invalid(path + ".amplitude", "missing");
            init.superpose.emplace_back(std::move(b), Section::as_complex(term.raw("amplitude"), path + ".amplitude"));
        }
        ++forms;
    }
    if (forms == 0) init.basis.basis_index = 0;
    if (forms > 1) invalid("initial_state", "give exactly one of amplitudes, basis_index, sites, occupation, superpose");
    return init;
}

RunConfig parse_run(const Json& j) {
    const Section s(j, "run", {"t_max", "grid_step", "survival_floor", "refine_tol", "seed", "stream_id",
                                "n_traj", "snapshots"});
    RunConfig r;
    r.sampler.t_max_horizon = s.number("t_max", 1.0);
    r.sampler.time_grid_step = s.number("grid_step", 0.1);
    r.sampler.survival_floor = s.number("survival_floor", 1e-12);
    r.sampler.refinement_tolerance = s.number("refine_tol", 1e-10);
    r.sampler.seed = s.u64("seed", 0);
    r.sampler.stream_id = s.u64("stream_id", 0);
    r.n_traj = s.count("n_traj", 1);
    r.snapshots = s.numbers("snapshots");
    try {
        r.sampler.validate();
    } catch (const Error& e) {
        invalid("run", e.what());
    }
    if (r.n_traj == 0) invalid("run.n_traj", "must be positive");
    for (std::size_t k = 0; k < r.snapshots.size(); ++k) {
        const double t = r.snapshots[k];
        if (t < 0.0 || t > r.sampler.t_max_horizon) invalid("run.snapshots", "times must lie in [0, t_max]");
        if (k > 0 && t < r.snapshots[k - 1]) invalid("run.snapshots", "times must be sorted");
    }
    return r;
}

QuadratureRule parse_rule(const std::string& name, const std::string& path) {
    if (name == "simpson") return QuadratureRule::Simpson;
    if (name == "trapezoid") return QuadratureRule::Trapezoid;
    if (name == "exact") return QuadratureRule::Exact;
    invalid(path, "unknown rule '" + name + "' (simpson, trapezoid, exact)");
}

CheckConfig parse_check(const Json& j, const std::string& path) {
    const Section s(j, path, {"name", "expect", "rule", "n_steps", "t_max", "threshold", "order", "histories",
                               "n_traj", "snapshots", "n_sector", "coupled", "coupling", "strength_si",
                               "width_si", "mass_factors"});
    CheckConfig c;
    const std::string name = s.text("name", "");
    if (name == "normalization") {
        c.kind = CheckKind::Normalization;
    } else if (name == "consistency") {
        c.kind = CheckKind::Consistency;
    } else if (name == "master_vs_ensemble") {
        c.kind = CheckKind::MasterVsEnsemble;
    } else if (name == "second_quantization") {
        c.kind = CheckKind::SecondQuantization;
    } else if (name == "no_signalling") {
        c.kind = CheckKind::NoSignalling;
    } else if (name == "constants") {
        c.kind = CheckKind::Constants;
    } else {
        invalid(s.child("name"), "unknown check '" + name + "'");
    }
    const std::string expect = s.text("expect", "pass");
    if (expect != "pass" && expect != "fail") invalid(s.child("expect"), "expected 'pass' or 'fail'");
    c.expect_fail = expect == "fail";
    c.grid.rule = parse_rule(s.text("rule", "simpson"), s.child("rule"));
    c.grid.n_steps = s.count("n_steps", c.kind == CheckKind::NoSignalling ? 4 : 256);
    c.grid.t_max = s.number("t_max", 1.0);
    if (c.kind == CheckKind::Normalization || c.kind == CheckKind::Consistency) {
        try {
            c.grid.validate();
        } catch (const Error& e) {
            invalid(path, e.what());
        }
    }
    if (s.has("threshold")) c.threshold = s.number("threshold", 0.0);
    c.order = s.count("order", 1);
    if (c.order == 0) invalid(s.child("order"), "must be at least 1");
    c.histories = s.count("histories", 4);
    c.n_traj = s.count("n_traj", 1000);
    c.snapshots = s.numbers("snapshots");
    c.n_sector = s.count("n_sector", 1);
    c.coupled = s.flag("coupled", false);
    c.coupling = s.number("coupling", 1.0);
    c.physical.strength_si = s.number("strength_si", 1e5);
    c.physical.width_si = s.number("width_si", 1e-7);
    c.physical.mass_factors = s.numbers("mass_factors");
    return c;
}

VerifyConfig parse_verify(const Json& j) {
    const Section s(j, "verify", {"checks"});
    VerifyConfig v;
    if (!s.has("checks")) return v;
    const Json& list = s.raw("checks");
    if (!list.is_array()) invalid("verify.checks", "expected a list");
    for (std::size_t k = 0; k < list.size(); ++k) {
        v.checks.push_back(parse_check(list[k], "verify.checks[" + std::to_string(k) + "]"));
    }
    return v;
}

Lattice lattice_of(const ModelConfig& m) { return Lattice(m.shape, m.spacing); }

// Single-label one-particle model used to build identical-particle models.
FlashModel one_particle_model(const ModelConfig& m) {
    const Lattice lattice = lattice_of(m);
    HamiltonianSpec h = m.hamiltonian;
    h.interaction = 0.0;
    h.source = 0.0;
    const FlashModel base = build_grw_model(1, lattice, m.profile, h, m.dimension_cap);
    std::vector<std::vector<PositiveOperator>> ops{base.rates().operators()[0]};
    return FlashModel(lattice, base.hamiltonian(), RateOperatorFamily({"flash"}, std::move(ops)));
}

std::vector<std::size_t> occupation_of_sites(const std::vector<std::size_t>& sites, std::size_t n_sites) {
    std::vector<std::size_t> occ(n_sites, 0);
    for (std::size_t s : sites) {
        if (s >= n_sites) invalid("initial_state", "site " + std::to_string(s) + " is off the lattice");
        ++occ[s];
    }
    return occ;
}

std::size_t resolve_basis(const BasisStateSpec& b, const ModelConfig& m, const FlashModel& model) {
    const auto dim = static_cast<std::size_t>(model.dim());
    const std::size_t n_sites = model.n_sites();
    std::size_t index = 0;
    if (b.basis_index) {
        index = *b.basis_index;
    } else if (m.builder == BuilderKind::Grw) {
        if (!b.sites) invalid("initial_state", "GRW states are named by basis_index or sites");
        if (b.sites->size() != m.n_particles) invalid("initial_state.sites", "need one site per particle");
        for (std::size_t s : *b.sites) {
            if (s >= n_sites) invalid("initial_state.sites", "site " + std::to_string(s) + " is off the lattice");
            index = index * n_sites + s;
        }
    } else {
        const std::vector<std::size_t> occ = b.occupation ? *b.occupation : occupation_of_sites(*b.sites, n_sites);
        if (occ.size() != n_sites) invalid("initial_state.occupation", "need one count per site");
        std::size_t total = 0;
        for (std::size_t c : occ) total += c;
        const Parity parity = m.parity;
        if (m.builder == BuilderKind::Identical && total != m.n_particles) {
            invalid("initial_state", "particle count does not match n_particles");
        }
        const std::size_t n_max = m.builder == BuilderKind::Fock ? m.n_max : m.n_particles;
        const auto basis = fock_basis(n_sites, n_max, parity);
        std::size_t offset = 0;
        if (m.builder == BuilderKind::Identical) {
            while (offset < basis.size()) {
                std::size_t n = 0;
                for (std::size_t c : basis[offset]) n += c;
                if (n == m.n_particles) break;
                ++offset;
            }
        }
        const auto it = std::find(basis.begin() + static_cast<std::ptrdiff_t>(offset), basis.end(), occ);
        if (it == basis.end()) invalid("initial_state", "occupation is not in the truncated basis");
        index = static_cast<std::size_t>(it - basis.begin()) - offset;
    }
    if (index >= dim) invalid("initial_state", "basis index " + std::to_string(index) + " out of range");
    return index;
}

ComplexMatrix random_hermitian(Eigen::Index d, std::uint64_t seed) {
    Philox4x32 rng(seed, 7);
    ComplexMatrix a(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) a(i, j) = Complex(rng.uniform() - 0.5, rng.uniform() - 0.5);
    }
    return a + a.adjoint();
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto [line, col] = locate(text, e.byte == 0 ? 0 : e.byte - 1);
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col) +
                                               ": " + e.what());
    }
    const Section top(j, "", {"schema", "model", "initial_state", "run", "verify"});
    if (!top.has("schema")) invalid("schema", "missing");
    if (!j.at("schema").is_number_integer() || j.at("schema").get<int>() != kConfigSchema) {
        invalid("schema", "unsupported schema version (expected 1)");
    }
    if (!top.has("model")) invalid("model", "missing");
    ExperimentConfig c;
    c.model = parse_model(j.at("model"));
    if (top.has("initial_state")) c.initial_state = parse_initial(j.at("initial_state"));
    else c.initial_state.basis.basis_index = 0;
    if (top.has("run")) c.run = parse_run(j.at("run"));
    if (top.has("verify")) c.verify = parse_verify(j.at("verify"));
    return c;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

FlashModel build_model(const ModelConfig& m) {
    const Lattice lattice = lattice_of(m);
    switch (m.builder) {
        case BuilderKind::Grw:
            return build_grw_model(m.n_particles, lattice, m.profile, m.hamiltonian, m.dimension_cap);
        case BuilderKind::Identical:
            if (m.hamiltonian.source != 0.0) {
                throw Error(ErrorCode::InvalidArgument, "particle source term needs a Fock model");
            }
            return build_identical_model(m.n_particles, m.parity, one_particle_model(m),
                                         m.hamiltonian.interaction, m.dimension_cap);
        case BuilderKind::Fock:
            return build_fock_model(m.n_max, lattice, m.profile, m.parity, m.hamiltonian, m.dimension_cap);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown builder");
}

ComplexVector build_initial_state(const ExperimentConfig& config, const FlashModel& model,
                                  std::vector<std::string>* warnings) {
    const InitialStateConfig& init = config.initial_state;
    const Eigen::Index dim = model.dim();
    ComplexVector psi = ComplexVector::Zero(dim);
    if (init.amplitudes) {
        if (static_cast<Eigen::Index>(init.amplitudes->size()) != dim) {
            invalid("initial_state.amplitudes", "expected " + std::to_string(dim) + " amplitudes, got " +
                                                    std::to_string(init.amplitudes->size()));
        }
        for (Eigen::Index k = 0; k < dim; ++k) psi(k) = (*init.amplitudes)[static_cast<std::size_t>(k)];
    } else if (!init.superpose.empty()) {
        for (const auto& [basis, amp] : init.superpose) {
            psi(static_cast<Eigen::Index>(resolve_basis(basis, config.model, model))) += amp;
        }
    } else {
        psi(static_cast<Eigen::Index>(resolve_basis(init.basis, config.model, model))) = 1.0;
    }
    const double norm = psi.norm();
    const double off = std::abs(norm - 1.0);
    if (off > kRenormalizeWindow + 1e-12) {
        invalid("initial_state", "state norm " + std::to_string(norm) + " is not 1");
    }
    if (off > 0.0) {
        psi /= norm;
        if (warnings && off > 1e-15) warnings->push_back("initial state renormalized (norm was " + std::to_string(norm) + ")");
    }
    return psi;
}

std::string check_kind_name(CheckKind kind) {
    switch (kind) {
        case CheckKind::Normalization: return "normalization";
        case CheckKind::Consistency: return "consistency";
        case CheckKind::MasterVsEnsemble: return "master_vs_ensemble";
        case CheckKind::SecondQuantization: return "second_quantization";
        case CheckKind::NoSignalling: return "no_signalling";
        case CheckKind::Constants: return "constants";
    }
    return "unknown";
}

CheckReport run_check(const CheckConfig& check, const ExperimentConfig& config, const FlashModel& model,
                      const ComplexVector& psi0, unsigned threads) {
    CheckReport r;
    switch (check.kind) {
        case CheckKind::Normalization:
            r = check_normalization(model, psi0, check.grid, check.threshold.value_or(1e-6));
            break;
        case CheckKind::Consistency:
            r = check_consistency(model, check.order, check.grid, check.threshold.value_or(1e-6), check.histories,
                                  config.run.sampler.seed);
            break;
        case CheckKind::MasterVsEnsemble: {
            const auto& times = check.snapshots.empty() ? config.run.snapshots : check.snapshots;
            r = check_master_vs_ensemble(model, psi0, times, check.n_traj, config.run.sampler, threads);
            break;
        }
        case CheckKind::SecondQuantization: {
            if (config.model.builder != BuilderKind::Fock) {
                throw Error(ErrorCode::ValidationError, "second_quantization: needs a fock model");
            }
            ModelConfig sector = config.model;
            sector.builder = BuilderKind::Identical;
            sector.n_particles = check.n_sector;
            sector.hamiltonian.source = 0.0;
            const FlashModel identical = build_model(sector);
            r = check_second_quantization(model, check.n_sector, identical, check.threshold.value_or(1e-12));
            break;
        }
        case CheckKind::NoSignalling: {
            // System 1 is the configured model; system 2 is a copy whose
            // Hamiltonian is swapped for a random one. Both composites start in
            // the maximally entangled state, so the reduced states agree.
            const Eigen::Index d = model.dim();
            const FlashModel m2b(model.lattice(), random_hermitian(d, config.run.sampler.seed), model.rates());
            ComplexVector psi = ComplexVector::Zero(d * d);
            for (Eigen::Index k = 0; k < d; ++k) psi(k * d + k) = 1.0 / std::sqrt(static_cast<double>(d));
            NoSignallingOptions opts;
            opts.threshold = check.threshold.value_or(1e-8);
            if (check.coupled) {
                const ComplexMatrix a = random_hermitian(d, config.run.sampler.seed + 1);
                opts.interaction_b = check.coupling * tensor(a, a);
            }
            QuadratureGrid bins = check.grid;
            r = check_no_signalling(model, model, m2b, psi, psi, bins, opts);
            break;
        }
        case CheckKind::Constants:
            r = check_constants(check.physical);
            break;
    }
    r.expected_fail = check.expect_fail;
    return r;
}

}  // namespace flashsim
