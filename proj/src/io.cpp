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

#include "flashsim/io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace flashsim {

namespace {

using Json = nlohmann::ordered_json;

Json parse_line(const std::string& line, const char* what) {
    try {
        return Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
    }
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "not a number: " + s);
    }
    if (used != s.size()) throw Error(ErrorCode::ParseError, "not a number: " + s);
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Records are assembled by hand so that doubles keep all 17 digits.
void write_flash_log(std::ostream& out, const FlashModel& model,
                     const std::vector<FlashHistory>& trajectories) {
    const std::size_t dims = model.lattice().dimension();
    for (std::size_t id = 0; id < trajectories.size(); ++id) {
        const FlashHistory& h = trajectories[id];
        for (std::size_t k = 0; k < h.size(); ++k) {
            const auto x = model.lattice().coordinates(h[k].site);
            out << "{\"trajectory_id\":" << id << ",\"k\":" << k << ",\"t\":" << format_double(h[k].t)
                << ",\"site\":" << h[k].site << ",\"x\":[";
            for (std::size_t a = 0; a < dims; ++a) out << (a ? "," : "") << format_double(x[a]);
            out << "],\"label\":" << Json(model.labels().at(h[k].label)).dump() << "}\n";
        }
    }
}

std::vector<FlashLogRecord> read_flash_log(std::istream& in) {
    std::vector<FlashLogRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const Json j = parse_line(line, "flash record");
        try {
            FlashLogRecord r;
            r.trajectory_id = j.at("trajectory_id").get<std::size_t>();
            r.k = j.at("k").get<std::size_t>();
            r.t = j.at("t").get<double>();
            r.site = j.at("site").get<std::size_t>();
            r.x = j.at("x").get<std::vector<double>>();
            r.label = j.at("label").get<std::string>();
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, std::string("flash record: ") + e.what());
        }
    }
    return out;
}

void write_density_csv(std::ostream& out, const std::vector<double>& times,
                       const std::vector<RealVector>& density) {
    if (density.size() != times.size()) {
        throw Error(ErrorCode::InvalidArgument, "one density vector per snapshot time required");
    }
    out << "site";
    for (double t : times) out << ",t=" << format_double(t);
    out << "\n";
    const Eigen::Index sites = density.empty() ? 0 : density[0].size();
    for (Eigen::Index m = 0; m < sites; ++m) {
        out << m;
        for (const auto& d : density) out << "," << format_double(d(m));
        out << "\n";
    }
}

DensityTable read_density_csv(std::istream& in) {
    DensityTable table;
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "density file is empty");
    const auto header = split(line, ',');
    if (header.empty() || header[0] != "site") throw Error(ErrorCode::ParseError, "bad density header");
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c].rfind("t=", 0) != 0) throw Error(ErrorCode::ParseError, "bad column " + header[c]);
        table.times.push_back(parse_double(header[c].substr(2)));
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size()) throw Error(ErrorCode::ParseError, "ragged density row");
        if (static_cast<std::size_t>(parse_double(cells[0])) != rows.size()) {
            throw Error(ErrorCode::ParseError, "density rows out of order");
        }
        std::vector<double> row;
        for (std::size_t c = 1; c < cells.size(); ++c) row.push_back(parse_double(cells[c]));
        rows.push_back(std::move(row));
    }
    for (std::size_t c = 0; c < table.times.size(); ++c) {
        RealVector v(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t m = 0; m < rows.size(); ++m) v(static_cast<Eigen::Index>(m)) = rows[m][c];
        table.density.push_back(std::move(v));
    }
    return table;
}

RunSummary summarize(const EnsembleSummary& ensemble, double wall_time_s, std::uint64_t seed,
                     unsigned threads) {
    RunSummary s;
    s.n_traj = ensemble.n_traj;
    for (std::size_t c : ensemble.flash_counts) s.total_flashes += c;
    s.mean_flash_count = ensemble.mean_flash_count;
    s.var_flash_count = ensemble.var_flash_count;
    s.snapshot_times = ensemble.snapshot_times;
    s.survival_fraction = ensemble.survival_fraction;
    s.wall_time_s = wall_time_s;
    s.seed = seed;
    s.threads = threads;
    return s;
}

void write_summary(std::ostream& out, const RunSummary& s) {
    Json j;
    j["n_traj"] = s.n_traj;
    j["total_flashes"] = s.total_flashes;
    j["mean_flash_count"] = s.mean_flash_count;
    j["var_flash_count"] = s.var_flash_count;
    j["snapshot_times"] = s.snapshot_times;
    j["survival_fraction"] = s.survival_fraction;
    j["wall_time_s"] = s.wall_time_s;
    j["seed"] = s.seed;
    j["threads"] = s.threads;
    out << j.dump(2) << "\n";
}

RunSummary read_summary(std::istream& in) {
    std::stringstream ss;
    ss << in.rdbuf();
    const Json j = parse_line(ss.str(), "summary");
    try {
        RunSummary s;
        s.n_traj = j.at("n_traj").get<std::size_t>();
        s.total_flashes = j.at("total_flashes").get<std::size_t>();
        s.mean_flash_count = j.at("mean_flash_count").get<double>();
        s.var_flash_count = j.at("var_flash_count").get<double>();
        s.snapshot_times = j.at("snapshot_times").get<std::vector<double>>();
        s.survival_fraction = j.at("survival_fraction").get<std::vector<double>>();
        s.wall_time_s = j.at("wall_time_s").get<double>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.threads = j.at("threads").get<unsigned>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("summary: ") + e.what());
    }
}

void write_reports(std::ostream& out, const std::vector<CheckReport>& reports) {
    for (const auto& r : reports) out << r.to_json() << "\n";
}

std::vector<CheckReport> read_reports(std::istream& in) {
    std::vector<CheckReport> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(CheckReport::from_json(line));
    }
    return out;
}

}  // namespace flashsim
