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
#include <vector>

#include "flashsim/model.hpp"
#include "flashsim/sampler.hpp"
#include "flashsim/verify.hpp"

namespace flashsim {

inline constexpr int kConfigSchema = 1;

/// Amplitudes within this distance of unit norm are renormalized with a
/// warning; anything further off is rejected.
inline constexpr double kRenormalizeWindow = 1e-6;

enum class BuilderKind { Grw, Identical, Fock };

struct ModelConfig {
    BuilderKind builder = BuilderKind::Grw;
    std::vector<std::size_t> shape{2};
    double spacing = 1.0;
    RateProfile profile;
    std::size_t n_particles = 1;
    std::size_t n_max = 1;
    Parity parity = Parity::Boson;
    HamiltonianSpec hamiltonian;
    std::size_t dimension_cap = kDefaultDimensionCap;
};

/// One basis state, named in whichever way suits the builder.
struct BasisStateSpec {
    std::optional<std::size_t> basis_index;
    std::optional<std::vector<std::size_t>> sites;       // one site per particle
    std::optional<std::vector<std::size_t>> occupation;  // one count per site
};

struct InitialStateConfig {
    std::optional<std::vector<Complex>> amplitudes;
    BasisStateSpec basis;
    std::vector<std::pair<BasisStateSpec, Complex>> superpose;
};

struct RunConfig {
    SamplerConfig sampler;
    std::size_t n_traj = 1;
    std::vector<double> snapshots;
};

enum class CheckKind {
    Normalization,
    Consistency,
    MasterVsEnsemble,
    SecondQuantization,
    NoSignalling,
    Constants,
};

struct CheckConfig {
    CheckKind kind = CheckKind::Normalization;
    bool expect_fail = false;
    QuadratureGrid grid{1.0, 256, QuadratureRule::Simpson};
    std::optional<double> threshold;
    std::size_t order = 1;        // consistency: flash order n
    std::size_t histories = 4;    // consistency
    std::size_t n_traj = 1000;    // master_vs_ensemble
    std::vector<double> snapshots;
    std::size_t n_sector = 1;     // second_quantization
    bool coupled = false;         // no_signalling
    double coupling = 1.0;        // no_signalling
    PhysicalProfile physical;     // constants
};

struct VerifyConfig {
    std::vector<CheckConfig> checks;
};

struct ExperimentConfig {
    ModelConfig model;
    InitialStateConfig initial_state;
    RunConfig run;
    VerifyConfig verify;
    /// Messages produced while parsing (e.g. renormalization notices).
    std::vector<std::string> warnings;
};

/// Parses a JSON config. Throws ParseError (with line and column) for
/// malformed text and ValidationError naming the offending field path.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

FlashModel build_model(const ModelConfig& config);

/// The normalized initial state. Appends a warning when renormalizing.
ComplexVector build_initial_state(const ExperimentConfig& config, const FlashModel& model,
                                  std::vector<std::string>* warnings = nullptr);

/// Runs one configured check against the model of the config.
CheckReport run_check(const CheckConfig& check, const ExperimentConfig& config,
                      const FlashModel& model, const ComplexVector& psi0, unsigned threads = 1);

std::string check_kind_name(CheckKind kind);

}  // namespace flashsim
