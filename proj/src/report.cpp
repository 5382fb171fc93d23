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

#include <cstdio>
#include <cstring>

#include <json.hpp>

#include "flashsim/verify.hpp"

namespace flashsim {

std::string CheckReport::to_json() const {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["inputs_digest"] = inputs_digest;
    j["metric_name"] = metric_name;
    j["metric"] = metric;
    j["threshold"] = threshold;
    j["pass"] = pass;
    j["expected_fail"] = expected_fail;
    nlohmann::ordered_json d = nlohmann::ordered_json::object();
    for (const auto& [key, value] : details) d[key] = value;
    j["details"] = std::move(d);
    return j.dump();
}

CheckReport CheckReport::from_json(const std::string& line) {
    try {
        const auto j = nlohmann::ordered_json::parse(line);
        CheckReport r;
        r.name = j.at("name").get<std::string>();
        r.inputs_digest = j.at("inputs_digest").get<std::string>();
        r.metric_name = j.at("metric_name").get<std::string>();
        r.metric = j.at("metric").get<double>();
        r.threshold = j.at("threshold").get<double>();
        r.pass = j.at("pass").get<bool>();
        r.expected_fail = j.at("expected_fail").get<bool>();
        for (const auto& [key, value] : j.at("details").items()) {
            r.details.emplace_back(key, value.get<double>());
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("report record: ") + e.what());
    }
}

double CheckReport::detail(const std::string& key) const {
    for (const auto& [k, v] : details) {
        if (k == key) return v;
    }
    throw Error(ErrorCode::InvalidArgument, "report has no detail " + key);
}

void Digest::bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < n; ++k) {
        state_ ^= p[k];
        state_ *= 0x100000001b3ull;
    }
}

Digest& Digest::add(double v) {
    if (v == 0.0) v = 0.0;  // fold -0
    bytes(&v, sizeof v);
    return *this;
}

Digest& Digest::add(std::uint64_t v) {
    bytes(&v, sizeof v);
    return *this;
}

Digest& Digest::add(const std::string& s) {
    add(static_cast<std::uint64_t>(s.size()));
    bytes(s.data(), s.size());
    return *this;
}

Digest& Digest::add(const ComplexMatrix& m) {
    add(static_cast<std::uint64_t>(m.rows()));
    add(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.size(); ++k) {
        add(m.data()[k].real());
        add(m.data()[k].imag());
    }
    return *this;
}

Digest& Digest::add(const FlashModel& model) {
    add(model.hamiltonian());
    for (const auto& l : model.labels()) add(l);
    for (std::size_t i = 0; i < model.n_labels(); ++i) {
        for (std::size_t m = 0; m < model.n_sites(); ++m) add(model.rates().at(i, m).matrix());
    }
    return *this;
}

std::string Digest::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
    return buf;
}

}  // namespace flashsim
