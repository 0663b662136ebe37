// Copyright 2026 The iontk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "iontk/report.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "iontk/errors.hpp"

namespace iontk {

using nlohmann::json;

bool operator==(const FittedParameter &a, const FittedParameter &b)
{
    auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
    return a.name == b.name && same(a.value, b.value) && same(a.error, b.error) &&
           a.unit == b.unit && a.weak == b.weak;
}

bool operator==(const Provenance &a, const Provenance &b)
{
    return a.input_digest == b.input_digest && a.seed == b.seed && a.version == b.version;
}

namespace {

json number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

double read_number(const json &j, const char *what)
{
    if (j.is_number())
        return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "nan")
            return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf")
            return std::numeric_limits<double>::infinity();
        if (s == "-inf")
            return -std::numeric_limits<double>::infinity();
    }
    throw ValidationError(std::string("report field '") + what + "' is not a number");
}

const json &field(const json &j, const char *key)
{
    auto it = j.find(key);
    if (it == j.end())
        throw ValidationError(std::string("report is missing '") + key + "'");
    return *it;
}

} // namespace

std::string to_json(const FitReport &r)
{
    json j;
    j["model"] = r.model;
    j["parameters"] = json::array();
    for (const auto &p : r.parameters)
        j["parameters"].push_back({{"name", p.name},
                                   {"value", number(p.value)},
                                   {"error", number(p.error)},
                                   {"unit", p.unit},
                                   {"weak", p.weak}});
    j["residual_rms"] = number(r.residual_rms);
    j["flags"] = r.flags;
    json prov;
    prov["input_digest"] = r.provenance.input_digest;
    prov["seed"] = r.provenance.seed ? json(*r.provenance.seed) : json(nullptr);
    prov["version"] = r.provenance.version;
    j["provenance"] = prov;
    j["statistics"] = json::object();
    for (const auto &[k, v] : r.statistics)
        j["statistics"][k] = number(v);
    j["notes"] = r.notes;
    return j.dump(2) + "\n";
}

FitReport report_from_json(const std::string &text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ValidationError(std::string("report is not valid JSON: ") + e.what());
    }
    try {
        FitReport r;
        r.model = field(j, "model").get<std::string>();
        for (const auto &p : field(j, "parameters"))
            r.parameters.push_back({field(p, "name").get<std::string>(),
                                    read_number(field(p, "value"), "value"),
                                    read_number(field(p, "error"), "error"),
                                    field(p, "unit").get<std::string>(),
                                    field(p, "weak").get<bool>()});
        r.residual_rms = read_number(field(j, "residual_rms"), "residual_rms");
        r.flags = field(j, "flags").get<std::vector<std::string>>();
        const auto &prov = field(j, "provenance");
        r.provenance.input_digest = field(prov, "input_digest").get<std::string>();
        const auto &seed = field(prov, "seed");
        if (!seed.is_null())
            r.provenance.seed = seed.get<std::uint64_t>();
        r.provenance.version = field(prov, "version").get<std::string>();
        for (const auto &[k, v] : field(j, "statistics").items())
            r.statistics[k] = read_number(v, k.c_str());
        r.notes = field(j, "notes").get<std::map<std::string, std::string>>();
        return r;
    } catch (const json::exception &e) {
        throw ValidationError(std::string("malformed report: ") + e.what());
    }
}

} // namespace iontk
