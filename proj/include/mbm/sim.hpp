#pragma once

#include "mbm/core.hpp"
#include "mbm/estimation.hpp"
#include "mbm/filter.hpp"
#include "mbm/models.hpp"
#include "mbm/ospa.hpp"
#include "mbm/params.hpp"
#include "mbm/phd.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace mbm {

struct TargetSpec {
    State initial_state = State::Zero();
    /// First and last scan (1-based, inclusive) at which the target exists.
    std::size_t birth_time = 1;
    std::size_t death_time = 1;
};

struct Scenario {
    std::vector<TargetSpec> targets;
    std::size_t duration = 100;
    FilterModels models;

    void check() const {
        for (std::size_t t = 0; t < targets.size(); ++t) {
            const auto& s = targets[t];
            if (!(1 <= s.birth_time && s.birth_time <= s.death_time && s.death_time <= duration))
                throw std::invalid_argument("target " + std::to_string(t + 1) +
                                            ": need 1 <= birth_time <= death_time <= duration");
            if (!s.initial_state.allFinite())
                throw std::invalid_argument("target " + std::to_string(t + 1) + ": non-finite state");
        }
        models.motion.check();
        models.measurement.check();
        models.clutter.check();
        models.birth.check();
    }
};

/// Birth components at the initial states of the scenario targets.
inline BirthModel birth_from_targets(const std::vector<TargetSpec>& targets, double existence) {
    BirthModel b;
    for (const auto& t : targets) b.components.push_back({existence, t.initial_state});
    return b;
}

/// Five crossing targets over 100 scans in a [-50,50] x [0,100] m field of
/// view observed by a range-bearing sensor at the origin.
inline Scenario crossing_scenario() {
    Scenario s;
    s.duration = 100;
    s.targets = {
        {State{-50.0, 1.65, 100.0, -1.65}, 1, 60},
        {State{-50.0, 1.65, 0.0, 1.65}, 11, 70},
        {State{-50.0, 0.875, 30.0, 0.875}, 11, 90},
        {State{50.0, -1.16, 70.0, -1.16}, 31, 90},
        {State{50.0, -1.65, 50.0, 0.0}, 41, 100},
    };
    s.models.motion = MotionModel{1.0, {4e-6, 4e-6}};
    s.models.measurement = MeasurementModel{0.25, 0.09};
    s.models.clutter = ClutterModel{{-50.0, 50.0}, {0.0, 100.0}, 5e-4};
    s.models.probabilities.detection = constant_probability(0.9);
    s.models.probabilities.survival = constant_probability(0.99);
    s.models.birth = birth_from_targets(s.targets, 0.01);
    return s;
}

struct TruthFrame {
    std::size_t scan = 0;
    /// (target id, 1-based; state)
    std::vector<std::pair<std::size_t, State>> states;

    [[nodiscard]] std::vector<State> state_set() const {
        std::vector<State> out;
        out.reserve(states.size());
        for (const auto& s : states) out.push_back(s.second);
        return out;
    }
};

struct ScanMeasurements {
    std::size_t scan = 0;
    std::vector<Measurement> measurements;
};

/// Noise-free constant-velocity trajectories inside each target's lifespan.
inline std::vector<TruthFrame> generate_truth(const Scenario& scenario) {
    std::vector<TruthFrame> frames(scenario.duration);
    for (std::size_t k = 0; k < scenario.duration; ++k) frames[k].scan = k + 1;
    for (std::size_t t = 0; t < scenario.targets.size(); ++t) {
        const auto& spec = scenario.targets[t];
        State x = spec.initial_state;
        for (std::size_t scan = spec.birth_time; scan <= std::min(spec.death_time, scenario.duration); ++scan) {
            frames[scan - 1].states.emplace_back(t + 1, x);
            x = transition_deterministic(x, scenario.models.motion);
        }
    }
    return frames;
}

/// Thinned, noisy target returns plus Poisson clutter, in shuffled order.
template <class URBG>
std::vector<ScanMeasurements> generate_measurements(const std::vector<TruthFrame>& truth,
                                                    const Scenario& scenario, URBG& rng) {
    std::vector<ScanMeasurements> out;
    out.reserve(truth.size());
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (const auto& frame : truth) {
        ScanMeasurements sm{frame.scan, {}};
        for (const auto& [id, x] : frame.states) {
            if (unif(rng) < scenario.models.probabilities.detection(x))
                sm.measurements.push_back(noisy_measurement(x, scenario.models.measurement, rng));
        }
        auto clutter = sample_clutter(scenario.models.clutter, rng);
        sm.measurements.insert(sm.measurements.end(), clutter.begin(), clutter.end());
        std::shuffle(sm.measurements.begin(), sm.measurements.end(), rng);
        out.push_back(std::move(sm));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trackers

/// Runs the MBM recursion one scan at a time:
/// update, prune hypotheses, prune components, extract, predict.
template <class URBG = Rng>
class MbmTracker {
public:
    MbmTracker(FilterModels models, FilterParams params) : models_(std::move(models)), params_(params) {
        params_.check();
    }

    /// Starts from one empty hypothesis and applies the first prediction,
    /// so the birth components are in place before the first scan.
    void initialize(URBG& rng) { density_ = mbm_predict(empty_density(), models_, params_.particles, rng); }

    void update(std::span<const Measurement> z, URBG& rng) {
        density_ = mbm_update(density_, z, models_, params_, rng);
        density_ = prune_hypotheses(density_, params_);
        density_ = prune_components(density_, params_);
    }

    [[nodiscard]] StateEstimate estimate() const { return extract_states(density_, params_); }

    void predict(URBG& rng) { density_ = mbm_predict(density_, models_, params_.particles, rng); }

    StateEstimate step(std::span<const Measurement> z, URBG& rng) {
        update(z, rng);
        auto est = estimate();
        predict(rng);
        return est;
    }

    [[nodiscard]] const MbmDensity& density() const { return density_; }
    [[nodiscard]] const FilterParams& params() const { return params_; }

private:
    FilterModels models_;
    FilterParams params_;
    MbmDensity density_ = empty_density();
};

template <class URBG = Rng>
class PhdTracker {
public:
    PhdTracker(FilterModels models, PhdParams params) : models_(std::move(models)), params_(params) {}

    void initialize(URBG& rng) { set_ = phd_predict(PhdParticleSet{}, models_, params_, rng); }

    StateEstimate step(std::span<const Measurement> z, URBG& rng) {
        set_ = phd_update(set_, z, models_);
        set_ = phd_resample(set_, params_, rng);
        StateEstimate est;
        est.states = phd_estimate(set_, params_, rng);
        set_ = phd_predict(set_, models_, params_, rng);
        return est;
    }

    [[nodiscard]] const PhdParticleSet& intensity() const { return set_; }

private:
    FilterModels models_;
    PhdParams params_;
    PhdParticleSet set_;
};

enum class FilterKind { mbm, phd };

inline std::string to_string(FilterKind k) { return k == FilterKind::mbm ? "mbm" : "phd"; }

/// Per-scan estimates of one filter over a measurement sequence.
template <class URBG>
std::vector<StateEstimate> run_filter(const std::vector<ScanMeasurements>& scans, const Scenario& scenario,
                                      const FilterParams& params, const PhdParams& phd_params,
                                      FilterKind kind, URBG& rng) {
    std::vector<StateEstimate> out;
    if (scans.empty()) return out;
    out.reserve(scans.size());
    if (kind == FilterKind::mbm) {
        MbmTracker<URBG> tracker(scenario.models, params);
        tracker.initialize(rng);
        for (const auto& s : scans) out.push_back(tracker.step(s.measurements, rng));
    } else {
        PhdTracker<URBG> tracker(scenario.models, phd_params);
        tracker.initialize(rng);
        for (const auto& s : scans) out.push_back(tracker.step(s.measurements, rng));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo

/// Independent engine for one purpose within one run.
inline Rng stream_for(std::uint64_t seed, std::uint64_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return Rng(seq);
}

enum StreamPurpose : std::uint64_t { kDataStream = 0, kMbmStream = 1, kPhdStream = 2 };

struct RunResult {
    std::vector<TruthFrame> truth;
    std::vector<ScanMeasurements> measurements;
    std::vector<StateEstimate> mbm;
    std::vector<StateEstimate> phd;
    std::vector<OspaResult> ospa_mbm;
    std::vector<OspaResult> ospa_phd;
};

struct RunOptions {
    bool run_mbm = true;
    bool run_phd = true;
    OspaParams ospa;
};

/// One seeded replication: simulate, filter, and score against truth.
inline RunResult run_once(const Scenario& scenario, const FilterParams& params, const PhdParams& phd_params,
                          std::uint64_t seed, const RunOptions& options = {}) {
    RunResult r;
    r.truth = generate_truth(scenario);
    auto data_rng = stream_for(seed, kDataStream);
    r.measurements = generate_measurements(r.truth, scenario, data_rng);

    auto score = [&](const std::vector<StateEstimate>& est) {
        std::vector<OspaResult> out;
        out.reserve(est.size());
        for (std::size_t k = 0; k < est.size(); ++k)
            out.push_back(ospa_distance(est[k].states, r.truth[k].state_set(), options.ospa));
        return out;
    };
    if (options.run_mbm) {
        auto rng = stream_for(seed, kMbmStream);
        r.mbm = run_filter(r.measurements, scenario, params, phd_params, FilterKind::mbm, rng);
        r.ospa_mbm = score(r.mbm);
    }
    if (options.run_phd) {
        auto rng = stream_for(seed, kPhdStream);
        r.phd = run_filter(r.measurements, scenario, params, phd_params, FilterKind::phd, rng);
        r.ospa_phd = score(r.phd);
    }
    return r;
}

struct ScanSummary {
    std::size_t scan = 0;
    OspaResult ospa_mbm;
    OspaResult ospa_phd;
    double card_mean_mbm = 0.0;
    double card_mean_phd = 0.0;
    double card_true = 0.0;
};

struct MonteCarloConfig {
    std::size_t runs = 100;
    std::uint64_t base_seed = 0;
    /// Worker threads; results do not depend on this.
    std::size_t threads = 1;
    RunOptions options;
};

/// Averages per-scan OSPA and cardinality over `runs` replications seeded
/// base_seed, base_seed + 1, ...; sums are taken in run order.
inline std::vector<ScanSummary> run_monte_carlo(const Scenario& scenario, const FilterParams& params,
                                                const PhdParams& phd_params, const MonteCarloConfig& config) {
    if (config.runs < 1) throw std::invalid_argument("runs must be >= 1");
    std::vector<RunResult> results(config.runs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < config.runs; r = next++) {
            auto res = run_once(scenario, params, phd_params, config.base_seed + r, config.options);
            res.measurements.clear();
            results[r] = std::move(res);
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(config.threads, 1, config.runs);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::vector<ScanSummary> out(scenario.duration);
    const double runs = static_cast<double>(config.runs);
    for (std::size_t k = 0; k < scenario.duration; ++k) {
        auto& s = out[k];
        s.scan = k + 1;
        for (const auto& res : results) {
            if (config.options.run_mbm) {
                s.ospa_mbm.total += res.ospa_mbm[k].total;
                s.ospa_mbm.localization += res.ospa_mbm[k].localization;
                s.ospa_mbm.cardinality += res.ospa_mbm[k].cardinality;
                s.card_mean_mbm += static_cast<double>(res.mbm[k].cardinality());
            }
            if (config.options.run_phd) {
                s.ospa_phd.total += res.ospa_phd[k].total;
                s.ospa_phd.localization += res.ospa_phd[k].localization;
                s.ospa_phd.cardinality += res.ospa_phd[k].cardinality;
                s.card_mean_phd += static_cast<double>(res.phd[k].cardinality());
            }
        }
        s.ospa_mbm.total /= runs;
        s.ospa_mbm.localization /= runs;
        s.ospa_mbm.cardinality /= runs;
        s.ospa_phd.total /= runs;
        s.ospa_phd.localization /= runs;
        s.ospa_phd.cardinality /= runs;
        s.card_mean_mbm /= runs;
        s.card_mean_phd /= runs;
        s.card_true = static_cast<double>(results.front().truth[k].states.size());
    }
    return out;
}

}  // namespace mbm
