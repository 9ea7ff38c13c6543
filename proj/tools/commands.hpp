#pragma once

#include "mbm/io.hpp"
#include "mbm/mbm.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace mbm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

/// Optional overrides of scenario/filter parameters; unset fields keep the
/// scenario file (or built-in) values.
struct Overrides {
    std::optional<double> pd, ps, clutter_intensity, birth_existence, range_var, bearing_var, accel_var;
};

struct RunConfig {
    std::string subcommand;
    std::string scenario;
    std::string out;
    std::string measurements;
    std::string estimates;
    std::string truth;
    std::uint64_t seed = 0;
    std::size_t runs = 100;
    std::size_t threads = 1;
    std::optional<std::size_t> duration;
    FilterKind filter = FilterKind::mbm;
    FilterParams params;
    PhdParams phd;
    OspaParams ospa;
    Overrides overrides;
};

/// "crossing" selects the built-in scenario; anything else is a JSON file path.
inline Scenario resolve_scenario(const RunConfig& cfg) {
    if (cfg.scenario.empty()) throw InputError("--scenario is required");
    Scenario s = cfg.scenario == "crossing" ? crossing_scenario() : load_scenario(cfg.scenario);
    const auto& o = cfg.overrides;
    try {
        if (o.pd) s.models.probabilities.detection = constant_probability(*o.pd);
        if (o.ps) s.models.probabilities.survival = constant_probability(*o.ps);
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("--pd/--ps: ") + e.what());
    }
    if (o.clutter_intensity) s.models.clutter.area_intensity = *o.clutter_intensity;
    if (o.birth_existence)
        for (auto& b : s.models.birth.components) b.existence = *o.birth_existence;
    if (o.range_var) s.models.measurement.range_variance = *o.range_var;
    if (o.bearing_var) s.models.measurement.bearing_variance = *o.bearing_var;
    if (o.accel_var) s.models.motion.accel_variances = {*o.accel_var, *o.accel_var};
    try {
        s.check();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    return s;
}

inline std::ofstream open_out(const std::string& path) {
    if (path.empty()) throw InputError("--out is required");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    return out;
}

inline std::ifstream open_in(const std::string& path, const std::string& what) {
    if (path.empty()) throw InputError(what + " path is required");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + what + " file '" + path + "'");
    return in;
}

/// Writes <out>/truth.csv and <out>/measurements.csv.
inline int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
    const Scenario s = resolve_scenario(cfg);
    if (cfg.out.empty()) throw InputError("--out is required");
    std::filesystem::create_directories(cfg.out);
    const auto truth = generate_truth(s);
    auto rng = stream_for(cfg.seed, kDataStream);
    const auto meas = generate_measurements(truth, s, rng);

    auto tf = open_out((std::filesystem::path(cfg.out) / "truth.csv").string());
    write_truth_csv(tf, truth);
    auto mf = open_out((std::filesystem::path(cfg.out) / "measurements.csv").string());
    write_measurements_csv(mf, meas);

    std::size_t count = 0;
    for (const auto& m : meas) count += m.measurements.size();
    log << "simulated " << s.duration << " scans, " << count << " measurements\n";
    return kExitOk;
}

inline int cmd_track(const RunConfig& cfg, std::ostream& log) {
    const Scenario s = resolve_scenario(cfg);
    auto in = open_in(cfg.measurements, "measurements");
    const auto scans = read_measurements_csv(in, s.duration);
    auto rng = stream_for(cfg.seed, cfg.filter == FilterKind::mbm ? kMbmStream : kPhdStream);
    const auto est = run_filter(scans, s, cfg.params, cfg.phd, cfg.filter, rng);
    auto out = open_out(cfg.out);
    write_estimates_csv(out, est);
    log << "tracked " << est.size() << " scans with " << to_string(cfg.filter) << '\n';
    return kExitOk;
}

inline int cmd_bench(const RunConfig& cfg, std::ostream& log) {
    if (cfg.runs < 1) throw InputError("--runs must be >= 1");
    const Scenario s = resolve_scenario(cfg);
    MonteCarloConfig mc;
    mc.runs = cfg.runs;
    mc.base_seed = cfg.seed;
    mc.threads = cfg.threads;
    mc.options.ospa = cfg.ospa;
    const auto rows = run_monte_carlo(s, cfg.params, cfg.phd, mc);
    auto out = open_out(cfg.out);
    write_results_csv(out, rows);

    double mbm_sum = 0.0, phd_sum = 0.0;
    std::size_t mbm_wins = 0;
    for (const auto& r : rows) {
        mbm_sum += r.ospa_mbm.total;
        phd_sum += r.ospa_phd.total;
        if (r.ospa_mbm.total <= r.ospa_phd.total) ++mbm_wins;
    }
    const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
    log << "runs: " << cfg.runs << ", scans: " << rows.size() << '\n'
        << "mean OSPA mbm: " << detail::fmt_double(mbm_sum / n, 6) << '\n'
        << "mean OSPA phd: " << detail::fmt_double(phd_sum / n, 6) << '\n'
        << "scans with mbm <= phd: " << mbm_wins << '/' << rows.size() << '\n';
    return kExitOk;
}

inline int cmd_eval(const RunConfig& cfg, std::ostream& log) {
    auto ein = open_in(cfg.estimates, "estimates");
    auto tin = open_in(cfg.truth, "truth");
    const auto est = read_state_rows(ein, kEstimatesHeader);
    const auto truth = read_state_rows(tin, kTruthHeader);

    std::size_t duration = 0;
    if (cfg.duration) {
        duration = *cfg.duration;
    } else if (!cfg.scenario.empty()) {
        duration = resolve_scenario(cfg).duration;
    } else {
        if (!est.empty()) duration = std::max(duration, est.rbegin()->first);
        if (!truth.empty()) duration = std::max(duration, truth.rbegin()->first);
    }
    std::set<std::size_t> bad;
    for (const auto* rows : {&est, &truth})
        for (const auto& [scan, states] : *rows)
            if (scan < 1 || scan > duration) bad.insert(scan);
    if (!bad.empty()) {
        std::string list;
        for (auto b : bad) list += (list.empty() ? "" : " ") + std::to_string(b);
        throw InputError("scan mismatch: scans outside 1.." + std::to_string(duration) + ": " + list);
    }

    std::vector<OspaResult> per_scan;
    per_scan.reserve(duration);
    const std::vector<State> none;
    for (std::size_t k = 1; k <= duration; ++k) {
        auto e = est.find(k);
        auto t = truth.find(k);
        per_scan.push_back(ospa_distance(e == est.end() ? none : e->second, t == truth.end() ? none : t->second,
                                         cfg.ospa));
    }
    auto out = open_out(cfg.out);
    write_eval_csv(out, per_scan);
    double sum = 0.0;
    for (const auto& r : per_scan) sum += r.total;
    log << "mean OSPA: " << detail::fmt_double(per_scan.empty() ? 0.0 : sum / static_cast<double>(duration), 6)
        << '\n';
    return kExitOk;
}

inline void add_filter_options(CLI::App* app, RunConfig& cfg) {
    app->add_option("--max-hypotheses", cfg.params.max_hypotheses, "N_h, maximum posterior hypotheses")
        ->capture_default_str();
    app->add_option("--target-prune", cfg.params.target_prune, "r^p, component pruning threshold")
        ->capture_default_str();
    app->add_option("--hyp-prune", cfg.params.hyp_prune, "w^p, hypothesis pruning threshold")->capture_default_str();
    app->add_option("--extract-threshold", cfg.params.extract_threshold, "r^th, existence threshold for estimates")
        ->capture_default_str();
    app->add_option("--particles", cfg.params.particles, "n^p, particles per target")->capture_default_str();
    app->add_option("--burn-in", cfg.params.gibbs_burn_in, "Gibbs sweeps discarded per hypothesis")
        ->capture_default_str();
    app->add_option("--phd-birth-weight", cfg.phd.birth_weight, "PHD intensity mass per birth component")
        ->capture_default_str();
    app->add_option("--pd", cfg.overrides.pd, "detection probability p_d (default 0.9)");
    app->add_option("--ps", cfg.overrides.ps, "survival probability p_s (default 0.99)");
    app->add_option("--clutter-intensity", cfg.overrides.clutter_intensity,
                    "clutter points per square metre (default 5e-4)");
    app->add_option("--birth-existence", cfg.overrides.birth_existence, "birth existence r_b (default 0.01)");
    app->add_option("--range-var", cfg.overrides.range_var, "range noise variance, m^2 (default 0.25)");
    app->add_option("--bearing-var", cfg.overrides.bearing_var, "bearing noise variance, rad^2 (default 0.09)");
    app->add_option("--accel-var", cfg.overrides.accel_var, "process noise variance per axis (default 4e-6)");
}

inline const char* kDefaultsFooter =
    "Defaults: N_h=100, r^p=1e-5, w^p=1e-5, r^th=0.5, n^p=1000, p_d=0.9, p_s=0.99,\n"
    "clutter 5e-4 /m^2, r_b=0.01, PHD birth mass 1e-5, OSPA c=10, p=2.";

inline void add_ospa_options(CLI::App* app, RunConfig& cfg) {
    app->add_option("--ospa-cutoff", cfg.ospa.cutoff, "OSPA cutoff c")->capture_default_str();
    app->add_option("--ospa-order", cfg.ospa.order, "OSPA order p")->capture_default_str();
}

/// Parses argv and runs the chosen subcommand. Diagnostics go to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Multi-Bernoulli mixture tracking toolkit"};
    app.require_subcommand(1);
    RunConfig cfg;
    const std::map<std::string, FilterKind> kinds{{"mbm", FilterKind::mbm}, {"phd", FilterKind::phd}};

    auto* sim = app.add_subcommand("simulate", "Generate truth.csv and measurements.csv for a scenario");
    sim->add_option("--scenario", cfg.scenario, "scenario JSON file, or 'crossing' for the built-in")->required();
    sim->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    sim->add_option("--out", cfg.out, "output directory")->required();
    add_filter_options(sim, cfg);

    auto* track = app.add_subcommand("track", "Run a filter over a measurements file");
    track->add_option("--scenario", cfg.scenario, "scenario JSON file, or 'crossing'")->required();
    track->add_option("--measurements", cfg.measurements, "measurements CSV (scan,range,bearing)")->required();
    track->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    track->add_option("--filter", cfg.filter, "mbm or phd")
        ->transform(CLI::CheckedTransformer(kinds, CLI::ignore_case))
        ->default_str("mbm");
    track->add_option("--out", cfg.out, "estimates CSV")->required();
    add_filter_options(track, cfg);

    auto* bench = app.add_subcommand("bench", "Monte-Carlo OSPA comparison of the MBM and PHD filters");
    bench->add_option("--scenario", cfg.scenario, "scenario JSON file, or 'crossing'")->required();
    bench->add_option("--runs", cfg.runs, "Monte-Carlo runs")->capture_default_str();
    bench->add_option("--seed", cfg.seed, "base seed; run r uses seed + r")->capture_default_str();
    bench->add_option("--threads", cfg.threads, "worker threads (output does not depend on it)")
        ->capture_default_str();
    bench->add_option("--out", cfg.out, "results CSV")->required();
    add_filter_options(bench, cfg);
    add_ospa_options(bench, cfg);

    auto* eval = app.add_subcommand("eval", "Per-scan OSPA of an estimates file against a truth file");
    eval->add_option("--estimates", cfg.estimates, "estimates CSV")->required();
    eval->add_option("--truth", cfg.truth, "truth CSV")->required();
    eval->add_option("--duration", cfg.duration, "number of scans (default: from --scenario or the files)");
    eval->add_option("--scenario", cfg.scenario, "scenario supplying the duration");
    eval->add_option("--out", cfg.out, "OSPA CSV")->required();
    add_ospa_options(eval, cfg);

    for (auto* sub : {sim, track, bench, eval}) sub->footer(kDefaultsFooter);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        cfg.params.check();
        cfg.ospa.check();
        if (*sim) return cmd_simulate(cfg, out);
        if (*track) return cmd_track(cfg, out);
        if (*bench) return cmd_bench(cfg, out);
        if (*eval) return cmd_eval(cfg, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitUsage;
}

}  // namespace mbm::cli
