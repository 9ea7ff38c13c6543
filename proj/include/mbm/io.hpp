#pragma once

#include "mbm/estimation.hpp"
#include "mbm/ospa.hpp"
#include "mbm/sim.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mbm {

/// Malformed user input (scenario or CSV). The message names the offending
/// line or field.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt_double(double v, int precision = 17) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

template <class T>
T json_get(const nlohmann::json& j, const std::string& key, const std::string& path, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError("field '" + path + key + "': " + e.what());
    }
}

inline State json_state(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 4) throw InputError("field '" + path + "': expected an array of 4 numbers");
    State s;
    for (std::size_t k = 0; k < 4; ++k) {
        if (!j[k].is_number()) throw InputError("field '" + path + "': expected an array of 4 numbers");
        s[static_cast<Eigen::Index>(k)] = j[k].get<double>();
    }
    return s;
}

inline nlohmann::ordered_json state_json(const State& s) { return nlohmann::ordered_json::array({s[0], s[1], s[2], s[3]}); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenario JSON

/// Parses a scenario document. Missing sections take the defaults of
/// crossing_scenario(); `birth` defaults to the target initial states.
inline Scenario parse_scenario(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("scenario: ") + e.what());
    }
    if (!j.is_object()) throw InputError("scenario: top level must be an object");

    Scenario s = crossing_scenario();
    s.duration = detail::json_get<std::size_t>(j, "duration", "", s.duration);

    if (j.contains("targets")) {
        const auto& arr = j.at("targets");
        if (!arr.is_array()) throw InputError("field 'targets': expected an array");
        s.targets.clear();
        for (std::size_t t = 0; t < arr.size(); ++t) {
            const std::string path = "targets[" + std::to_string(t) + "].";
            const auto& o = arr[t];
            if (!o.is_object() || !o.contains("initial_state"))
                throw InputError("field '" + path + "initial_state': missing");
            TargetSpec spec;
            spec.initial_state = detail::json_state(o.at("initial_state"), path + "initial_state");
            spec.birth_time = detail::json_get<std::size_t>(o, "birth_time", path, 1);
            spec.death_time = detail::json_get<std::size_t>(o, "death_time", path, s.duration);
            s.targets.push_back(spec);
        }
    }

    if (j.contains("motion")) {
        const auto& o = j.at("motion");
        s.models.motion.period = detail::json_get<double>(o, "period", "motion.", s.models.motion.period);
        s.models.motion.accel_variances = detail::json_get<std::array<double, 2>>(
            o, "accel_variances", "motion.", s.models.motion.accel_variances);
    }
    if (j.contains("measurement")) {
        const auto& o = j.at("measurement");
        s.models.measurement.range_variance =
            detail::json_get<double>(o, "range_variance", "measurement.", s.models.measurement.range_variance);
        s.models.measurement.bearing_variance =
            detail::json_get<double>(o, "bearing_variance", "measurement.", s.models.measurement.bearing_variance);
    }
    if (j.contains("clutter")) {
        const auto& o = j.at("clutter");
        auto& c = s.models.clutter;
        c.fov_x = detail::json_get<std::array<double, 2>>(o, "fov_x", "clutter.", c.fov_x);
        c.fov_y = detail::json_get<std::array<double, 2>>(o, "fov_y", "clutter.", c.fov_y);
        c.area_intensity = detail::json_get<double>(o, "area_intensity", "clutter.", c.area_intensity);
    }
    const double pd = detail::json_get<double>(j, "detection_probability", "", 0.9);
    const double ps = detail::json_get<double>(j, "survival_probability", "", 0.99);
    try {
        s.models.probabilities.detection = constant_probability(pd);
        s.models.probabilities.survival = constant_probability(ps);
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("field 'detection_probability'/'survival_probability': ") + e.what());
    }

    double birth_existence = 0.01;
    std::vector<State> seeds;
    bool explicit_seeds = false;
    if (j.contains("birth")) {
        const auto& o = j.at("birth");
        birth_existence = detail::json_get<double>(o, "existence", "birth.", birth_existence);
        if (o.contains("seed_states")) {
            explicit_seeds = true;
            const auto& arr = o.at("seed_states");
            if (!arr.is_array()) throw InputError("field 'birth.seed_states': expected an array");
            for (std::size_t k = 0; k < arr.size(); ++k)
                seeds.push_back(detail::json_state(arr[k], "birth.seed_states[" + std::to_string(k) + "]"));
        }
    }
    if (explicit_seeds) {
        s.models.birth.components.clear();
        for (const auto& seed : seeds) s.models.birth.components.push_back({birth_existence, seed});
    } else {
        s.models.birth = birth_from_targets(s.targets, birth_existence);
    }

    try {
        s.check();
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("scenario: ") + e.what());
    }
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

/// Serialises the parameters a scenario file can express. Detection and
/// survival are written as their value at the zero state.
inline std::string scenario_to_json(const Scenario& s) {
    nlohmann::ordered_json j;
    j["duration"] = s.duration;
    j["targets"] = nlohmann::ordered_json::array();
    for (const auto& t : s.targets) {
        nlohmann::ordered_json o;
        o["initial_state"] = detail::state_json(t.initial_state);
        o["birth_time"] = t.birth_time;
        o["death_time"] = t.death_time;
        j["targets"].push_back(o);
    }
    j["motion"] = {{"period", s.models.motion.period}, {"accel_variances", s.models.motion.accel_variances}};
    j["measurement"] = {{"range_variance", s.models.measurement.range_variance},
                        {"bearing_variance", s.models.measurement.bearing_variance}};
    j["clutter"] = {{"fov_x", s.models.clutter.fov_x},
                    {"fov_y", s.models.clutter.fov_y},
                    {"area_intensity", s.models.clutter.area_intensity}};
    j["detection_probability"] = s.models.probabilities.detection(State::Zero());
    j["survival_probability"] = s.models.probabilities.survival(State::Zero());
    nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
    for (const auto& b : s.models.birth.components) seeds.push_back(detail::state_json(b.seed_state));
    j["birth"] = {{"existence", s.models.birth.components.empty() ? 0.01 : s.models.birth.components[0].existence},
                  {"seed_states", seeds}};
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && s[b] == ' ') ++b;
    return s.substr(b);
}

inline double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw InputError("row " + std::to_string(row) + ": column '" + column + "' is not a number: '" + cell + "'");
    }
}

inline std::size_t parse_index(const std::string& cell, std::size_t row, const std::string& column) {
    const double v = parse_number(cell, row, column);
    if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw InputError("row " + std::to_string(row) + ": column '" + column + "' must be a nonnegative integer");
    return static_cast<std::size_t>(v);
}

/// Reads a CSV with the exact `header`; rows are numbered from 1 at the header.
inline std::vector<std::vector<std::string>> read_csv(std::istream& in, const std::string& header) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("row 1: missing header '" + header + "'");
    if (trim(line) != header) throw InputError("row 1: expected header '" + header + "', got '" + trim(line) + "'");
    const auto columns = split_csv(header).size();
    std::vector<std::vector<std::string>> rows;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        line = trim(line);
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != columns)
            throw InputError("row " + std::to_string(row) + ": expected " + std::to_string(columns) +
                             " fields, got " + std::to_string(cells.size()));
        for (auto& c : cells) c = trim(c);
        cells.push_back(std::to_string(row));
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace detail

inline const std::string kMeasurementsHeader = "scan,range,bearing";
inline const std::string kTruthHeader = "scan,target_id,px,vx,py,vy";
inline const std::string kEstimatesHeader = "scan,target_index,px,vx,py,vy";
inline const std::string kResultsHeader = "scan,ospa_mbm,ospa_loc_mbm,ospa_card_mbm,ospa_phd,card_mean_mbm,card_true";
inline const std::string kEvalHeader = "scan,ospa,ospa_loc,ospa_card";

inline void write_measurements_csv(std::ostream& out, const std::vector<ScanMeasurements>& scans) {
    out << kMeasurementsHeader << '\n';
    for (const auto& s : scans)
        for (const auto& z : s.measurements)
            out << s.scan << ',' << detail::fmt_double(z.range) << ',' << detail::fmt_double(z.bearing) << '\n';
}

inline void write_state_row(std::ostream& out, std::size_t scan, std::size_t id, const State& x) {
    out << scan << ',' << id;
    for (Eigen::Index k = 0; k < 4; ++k) out << ',' << detail::fmt_double(x[k]);
    out << '\n';
}

inline void write_truth_csv(std::ostream& out, const std::vector<TruthFrame>& truth) {
    out << kTruthHeader << '\n';
    for (const auto& f : truth)
        for (const auto& [id, x] : f.states) write_state_row(out, f.scan, id, x);
}

/// Estimates for scans 1..N; target_index is 0-based within a scan.
inline void write_estimates_csv(std::ostream& out, const std::vector<StateEstimate>& estimates) {
    out << kEstimatesHeader << '\n';
    for (std::size_t k = 0; k < estimates.size(); ++k)
        for (std::size_t i = 0; i < estimates[k].states.size(); ++i)
            write_state_row(out, k + 1, i, estimates[k].states[i]);
}

inline void write_results_csv(std::ostream& out, const std::vector<ScanSummary>& rows) {
    out << kResultsHeader << '\n';
    for (const auto& r : rows) {
        out << r.scan << ',' << detail::fmt_double(r.ospa_mbm.total, 10) << ','
            << detail::fmt_double(r.ospa_mbm.localization, 10) << ','
            << detail::fmt_double(r.ospa_mbm.cardinality, 10) << ',' << detail::fmt_double(r.ospa_phd.total, 10)
            << ',' << detail::fmt_double(r.card_mean_mbm, 10) << ',' << detail::fmt_double(r.card_true, 10)
            << '\n';
    }
}

inline void write_eval_csv(std::ostream& out, const std::vector<OspaResult>& per_scan) {
    out << kEvalHeader << '\n';
    for (std::size_t k = 0; k < per_scan.size(); ++k)
        out << k + 1 << ',' << detail::fmt_double(per_scan[k].total, 10) << ','
            << detail::fmt_double(per_scan[k].localization, 10) << ','
            << detail::fmt_double(per_scan[k].cardinality, 10) << '\n';
}

/// Measurements grouped into scans 1..duration. Rows outside that range are errors.
inline std::vector<ScanMeasurements> read_measurements_csv(std::istream& in, std::size_t duration) {
    std::vector<ScanMeasurements> scans(duration);
    for (std::size_t k = 0; k < duration; ++k) scans[k].scan = k + 1;
    for (const auto& cells : detail::read_csv(in, kMeasurementsHeader)) {
        const std::size_t row = std::stoul(cells.back());
        const auto scan = detail::parse_index(cells[0], row, "scan");
        if (scan < 1 || scan > duration)
            throw InputError("row " + std::to_string(row) + ": scan " + std::to_string(scan) +
                             " outside 1.." + std::to_string(duration));
        Measurement z{detail::parse_number(cells[1], row, "range"), detail::parse_number(cells[2], row, "bearing")};
        if (!std::isfinite(z.range) || !std::isfinite(z.bearing) || z.range < 0.0)
            throw InputError("row " + std::to_string(row) + ": range must be finite and >= 0, bearing finite");
        scans[scan - 1].measurements.push_back(z);
    }
    return scans;
}

/// State rows (truth or estimates files) keyed by scan.
inline std::map<std::size_t, std::vector<State>> read_state_rows(std::istream& in, const std::string& header) {
    std::map<std::size_t, std::vector<State>> out;
    const auto names = detail::split_csv(header);
    for (const auto& cells : detail::read_csv(in, header)) {
        const std::size_t row = std::stoul(cells.back());
        const auto scan = detail::parse_index(cells[0], row, names[0]);
        detail::parse_index(cells[1], row, names[1]);
        State x;
        for (Eigen::Index k = 0; k < 4; ++k)
            x[k] = detail::parse_number(cells[static_cast<std::size_t>(k) + 2], row, names[static_cast<std::size_t>(k) + 2]);
        out[scan].push_back(x);
    }
    return out;
}

}  // namespace mbm
