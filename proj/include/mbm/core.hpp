#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mbm {

/// Single-target state [p_x, v_x, p_y, v_y] in metres and metres per second.
using State = Eigen::Vector4d;

/// Default random stream. Every stochastic routine takes its engine by
/// reference so that runs are reproducible from a seed.
using Rng = std::mt19937_64;

struct Particle {
    State state = State::Zero();
    double weight = 0.0;
};

/// Weighted sample approximation of a single-target density.
struct ParticleCloud {
    std::vector<Particle> particles;

    [[nodiscard]] std::size_t size() const { return particles.size(); }
    [[nodiscard]] bool empty() const { return particles.empty(); }

    [[nodiscard]] double total_weight() const {
        double s = 0.0;
        for (const auto& p : particles) s += p.weight;
        return s;
    }
};

/// Bernoulli RFS: empty with probability 1 - existence, otherwise one target
/// distributed according to `cloud`.
struct BernoulliComponent {
    double existence = 0.0;
    ParticleCloud cloud;
};

/// Components are immutable once built and are shared between hypotheses that
/// inherited them through the same association history.
using ComponentPtr = std::shared_ptr<const BernoulliComponent>;

inline ComponentPtr make_component(BernoulliComponent c) {
    return std::make_shared<const BernoulliComponent>(std::move(c));
}

/// One multi-Bernoulli term of the mixture.
struct GlobalHypothesis {
    double weight = 0.0;
    std::vector<ComponentPtr> components;
};

/// Multi-Bernoulli mixture density. Hypothesis weights sum to one and all
/// hypotheses carry the same number of components.
struct MbmDensity {
    std::vector<GlobalHypothesis> hypotheses;

    [[nodiscard]] std::size_t num_components() const {
        return hypotheses.empty() ? 0 : hypotheses.front().components.size();
    }
};

/// Target-to-measurement map. theta[i] == 0 means target i is missed,
/// theta[i] == j > 0 means it generated measurement j (1-based).
struct Association {
    std::vector<std::size_t> theta;

    [[nodiscard]] std::size_t size() const { return theta.size(); }

    /// Positive entries must be pairwise distinct and at most `num_measurements`.
    [[nodiscard]] bool valid(std::size_t num_measurements) const {
        std::vector<bool> used(num_measurements + 1, false);
        for (auto j : theta) {
            if (j == 0) continue;
            if (j > num_measurements || used[j]) return false;
            used[j] = true;
        }
        return true;
    }

    friend bool operator==(const Association&, const Association&) = default;
    friend auto operator<=>(const Association&, const Association&) = default;
};

// ---------------------------------------------------------------------------
// Weight arithmetic

/// log(sum(exp(v))) without overflow. Returns -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> log_values) {
    double max_v = -std::numeric_limits<double>::infinity();
    for (double v : log_values) max_v = std::max(max_v, v);
    if (!std::isfinite(max_v)) return max_v;
    double s = 0.0;
    for (double v : log_values) s += std::exp(v - max_v);
    return max_v + std::log(s);
}

/// Linear weights from log weights, normalised to sum to one.
inline std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
    const double lse = log_sum_exp(log_weights);
    if (!std::isfinite(lse)) throw std::domain_error("degenerate weight vector");
    std::vector<double> out(log_weights.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(log_weights[i] - lse);
    return out;
}

/// Scale nonnegative weights to sum to one. The largest weight is factored out
/// first so that tiny but nonzero inputs survive.
inline std::vector<double> normalize_weights(std::span<const double> weights) {
    double max_w = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw std::domain_error("degenerate weight vector");
        max_w = std::max(max_w, w);
    }
    if (max_w <= 0.0) throw std::domain_error("degenerate weight vector");
    double s = 0.0;
    for (double w : weights) s += w / max_w;
    std::vector<double> out(weights.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (weights[i] / max_w) / s;
    return out;
}

// ---------------------------------------------------------------------------
// Resampling

/// Ancestor indices chosen by systematic resampling from normalised weights.
/// One uniform offset u in [0,1) drives all `count` draws.
template <class URBG>
std::vector<std::size_t> systematic_indices(std::span<const double> weights, std::size_t count,
                                            URBG& rng) {
    if (count == 0) throw std::invalid_argument("resample count must be positive");
    const auto normalized = normalize_weights(weights);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);

    std::vector<std::size_t> idx;
    idx.reserve(count);
    const double n = static_cast<double>(count);
    double cumulative = normalized[0] * n;
    std::size_t j = 0;
    for (std::size_t k = 0; k < count; ++k) {
        const double pos = u + static_cast<double>(k);
        while (pos >= cumulative && j + 1 < normalized.size()) {
            ++j;
            cumulative += normalized[j] * n;
        }
        idx.push_back(j);
    }
    return idx;
}

/// Systematic resampling to `count` equally weighted particles.
template <class URBG>
ParticleCloud systematic_resample(const ParticleCloud& cloud, std::size_t count, URBG& rng) {
    if (cloud.empty()) throw std::domain_error("degenerate weight vector");
    std::vector<double> w(cloud.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = cloud.particles[i].weight;
    const auto idx = systematic_indices(std::span<const double>(w), count, rng);

    ParticleCloud out;
    out.particles.reserve(count);
    const double eq = 1.0 / static_cast<double>(count);
    for (auto j : idx) out.particles.push_back({cloud.particles[j].state, eq});
    return out;
}

/// Convex combination of particle states.
inline State weighted_mean(const ParticleCloud& cloud) {
    if (cloud.empty()) throw std::invalid_argument("weighted_mean of empty cloud");
    State m = State::Zero();
    double s = 0.0;
    for (const auto& p : cloud.particles) {
        m += p.weight * p.state;
        s += p.weight;
    }
    if (!(s > 0.0)) throw std::domain_error("degenerate weight vector");
    return m / s;
}

inline ParticleCloud uniform_cloud(std::vector<State> states) {
    ParticleCloud c;
    c.particles.reserve(states.size());
    const double eq = states.empty() ? 0.0 : 1.0 / static_cast<double>(states.size());
    for (auto& s : states) c.particles.push_back({s, eq});
    return c;
}

// ---------------------------------------------------------------------------
// Validation

/// Returns a description of the first violated invariant, or nothing.
inline std::optional<std::string> check_component(const BernoulliComponent& c) {
    if (!(c.existence >= 0.0 && c.existence <= 1.0))
        return "existence outside [0,1]: " + std::to_string(c.existence);
    for (const auto& p : c.cloud.particles) {
        if (!std::isfinite(p.weight) || p.weight < 0.0) return "invalid particle weight";
        if (!p.state.allFinite()) return "non-finite particle state";
    }
    return std::nullopt;
}

inline std::optional<std::string> check_density(const MbmDensity& d, double tol = 1e-9) {
    if (d.hypotheses.empty()) return "density has no hypotheses";
    const std::size_t n = d.num_components();
    double sum = 0.0;
    for (const auto& h : d.hypotheses) {
        if (!std::isfinite(h.weight) || h.weight < 0.0) return "invalid hypothesis weight";
        if (h.components.size() != n) return "component counts differ across hypotheses";
        for (const auto& c : h.components) {
            if (!c) return "null component";
            if (auto e = check_component(*c)) return e;
        }
        sum += h.weight;
    }
    if (std::abs(sum - 1.0) > tol) return "hypothesis weights sum to " + std::to_string(sum);
    return std::nullopt;
}

/// Throws std::logic_error when `d` violates an MBM invariant.
inline void validate(const MbmDensity& d, double tol = 1e-9) {
    if (auto e = check_density(d, tol)) throw std::logic_error("invalid MBM density: " + *e);
}

/// Marginal existence of component i: sum over hypotheses of w_h * r_{h,i}.
inline double marginal_existence(const MbmDensity& d, std::size_t i) {
    double s = 0.0;
    for (const auto& h : d.hypotheses) s += h.weight * h.components[i]->existence;
    return s;
}

}  // namespace mbm
