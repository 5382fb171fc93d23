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

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "flashsim/config.hpp"
#include "flashsim/io.hpp"

namespace fs = std::filesystem;
using namespace flashsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

bool is_config_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError:
        case ErrorCode::ValidationError:
        case ErrorCode::InvalidArgument:
        case ErrorCode::BadProfile:
        case ErrorCode::DimensionOverflow:
        case ErrorCode::EmptySector:
        case ErrorCode::LatticeMismatch:
        case ErrorCode::BasisMismatch:
        case ErrorCode::NotNormalized:
        case ErrorCode::TableTooLarge:
        case ErrorCode::IoError:
            return true;
        default:
            return false;
    }
}

unsigned resolve_threads(std::optional<unsigned> flag) {
    if (flag) return std::max(1u, *flag);
    if (const char* env = std::getenv("FLASHSIM_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
        throw Error(ErrorCode::ValidationError, "FLASHSIM_THREADS must be a positive integer");
    }
    return 1;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    return out;
}

void prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_run(const std::string& config_path, const fs::path& out_dir, std::optional<std::uint64_t> seed,
            unsigned threads) {
    ExperimentConfig config = parse_config(config_path);
    if (seed) config.run.sampler.seed = *seed;
    const FlashModel model = build_model(config.model);
    std::vector<std::string> warnings;
    const ComplexVector psi0 = build_initial_state(config, model, &warnings);
    print_warnings(warnings);
    prepare_dir(out_dir);

    EnsembleOptions options;
    options.snapshot_times = config.run.snapshots;
    options.threads = threads;
    options.keep_trajectories = true;
    const auto start = std::chrono::steady_clock::now();
    const EnsembleSummary ensemble = run_ensemble(model, psi0, config.run.n_traj, config.run.sampler, options);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    {
        auto out = open_output(out_dir / "flashes.jsonl");
        write_flash_log(out, model, ensemble.trajectories);
    }
    {
        auto out = open_output(out_dir / "density.csv");
        write_density_csv(out, ensemble.snapshot_times, ensemble.matter_density);
    }
    {
        auto out = open_output(out_dir / "summary.json");
        write_summary(out, summarize(ensemble, wall, config.run.sampler.seed, threads));
    }
    std::cout << "trajectories: " << ensemble.n_traj << "\n"
              << "mean flash count: " << format_double(ensemble.mean_flash_count) << "\n"
              << "output: " << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_verify(const std::string& config_path, const fs::path& out_dir, unsigned threads) {
    const ExperimentConfig config = parse_config(config_path);
    const FlashModel model = build_model(config.model);
    std::vector<std::string> warnings;
    const ComplexVector psi0 = build_initial_state(config, model, &warnings);
    print_warnings(warnings);
    if (config.verify.checks.empty()) throw Error(ErrorCode::ValidationError, "verify.checks: no checks listed");
    prepare_dir(out_dir);

    std::vector<CheckReport> reports;
    std::optional<std::string> first_failure;
    for (const CheckConfig& check : config.verify.checks) {
        CheckReport r = run_check(check, config, model, psi0, threads);
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "  " << r.metric_name << " = "
                  << format_double(r.metric) << "  threshold = " << format_double(r.threshold)
                  << (r.expected_fail ? "  (expected to fail)" : "") << "\n";
        if (!r.pass && !first_failure) first_failure = r.name;
        reports.push_back(std::move(r));
    }
    auto out = open_output(out_dir / "reports.jsonl");
    write_reports(out, reports);
    if (first_failure) {
        std::cerr << "verification failed: " << *first_failure << "\n";
        return kExitVerifyFailed;
    }
    return kExitOk;
}

int cmd_describe(const std::string& config_path) {
    const ExperimentConfig config = parse_config(config_path);
    const FlashModel model = build_model(config.model);
    const ComplexMatrix& total = model.total_rate();
    const double norm = total.rows() ? total.cwiseAbs().colwise().sum().maxCoeff() : 0.0;
    bool scalar = true;
    if (total.rows() > 0) {
        const Complex c = total(0, 0);
        const double tol = 1e-12 * std::max(1.0, std::abs(c));
        scalar = (total - c * ComplexMatrix::Identity(total.rows(), total.cols())).cwiseAbs().maxCoeff() <= tol;
    }
    std::cout << "dimension: " << model.dim() << "\n";
    std::cout << "sites: " << model.n_sites() << "\n";
    std::cout << "labels:";
    for (const auto& l : model.labels()) std::cout << " " << l;
    std::cout << "\n";
    std::cout << "total rate norm: " << format_double(norm) << "\n";
    std::cout << "Λ_tot ∝ I: " << (scalar ? "yes" : "no") << "\n";
    if (!model.sector_dims().empty()) {
        std::cout << "sector dimensions:";
        for (std::size_t d : model.sector_dims()) std::cout << " " << d;
        std::cout << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flashsim: flash-process simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;

    auto* run = app.add_subcommand("run", "Sample flash trajectories");
    run->add_option("config", config_path, "Config file")->required();
    run->add_option("-o,--output", out_dir, "Output directory")->required();
    run->add_option("--seed", seed, "Override run.seed");
    run->add_option("--threads", threads, "Worker threads (default FLASHSIM_THREADS or 1)");

    auto* verify = app.add_subcommand("verify", "Run the configured checks");
    verify->add_option("config", config_path, "Config file")->required();
    verify->add_option("-o,--output", out_dir, "Output directory")->required();
    verify->add_option("--threads", threads, "Worker threads (default FLASHSIM_THREADS or 1)");

    auto* describe = app.add_subcommand("describe", "Print a model summary");
    describe->add_option("config", config_path, "Config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, seed, resolve_threads(threads));
        if (verify->parsed()) return cmd_verify(config_path, out_dir, resolve_threads(threads));
        return cmd_describe(config_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return is_config_error(e.code()) ? kExitConfig : kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
}
