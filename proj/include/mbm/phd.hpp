#pragma once

#include "mbm/core.hpp"
#include "mbm/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace mbm {

/// Particle approximation of a PHD intensity. Weights are not normalised:
/// their sum is the expected number of targets.
struct PhdParticleSet {
    std::vector<Particle> particles;

    [[nodiscard]] double mass() const {
        double s = 0.0;
        for (const auto& p : particles) s += p.weight;
        return s;
    }
};

struct PhdParams {
    /// Total intensity mass of each birth component.
    double birth_weight = 1e-5;
    /// n^p, particles per expected target after resampling.
    std::size_t particles_per_target = 1000;
    /// Upper bound on the expected-target multiplier used for particle budget.
    std::size_t max_targets = 50;
    std::size_t kmeans_restarts = 10;
    std::size_t kmeans_iterations = 100;
};

/// Survival-weighted propagation plus particle birth.
template <class URBG>
PhdParticleSet phd_predict(const PhdParticleSet& set, const FilterModels& models,
                           const PhdParams& params, URBG& rng) {
    PhdParticleSet out;
    out.particles.reserve(set.particles.size() +
                          models.birth.components.size() * params.particles_per_target);
    for (const auto& p : set.particles) {
        const double ps = models.probabilities.survival(p.state);
        out.particles.push_back({transition_sample(p.state, models.motion, rng), p.weight * ps});
    }
    const double each = params.birth_weight / static_cast<double>(params.particles_per_target);
    for (std::size_t b = 0; b < models.birth.components.size(); ++b) {
        auto cloud = sample_birth_particles(b, models.birth, models.motion, params.particles_per_target, rng);
        for (auto& p : cloud.particles) out.particles.push_back({p.state, each});
    }
    return out;
}

/// Standard SMC-PHD corrector:
/// w' = (1 - p_d) w + sum_z p_d l(z|x) w / (c(z) + sum_q p_d(x_q) l(z|x_q) w_q).
inline PhdParticleSet phd_update(const PhdParticleSet& set, std::span<const Measurement> z,
                                 const FilterModels& models) {
    const std::size_t n = set.particles.size();
    std::vector<double> pd(n);
    std::vector<Measurement> predicted(n);
    std::vector<bool> measurable(n);
    for (std::size_t q = 0; q < n; ++q) {
        const State& x = set.particles[q].state;
        pd[q] = models.probabilities.detection(x);
        measurable[q] = !(x[0] == 0.0 && x[2] == 0.0);
        if (measurable[q]) predicted[q] = measure(x);
    }

    PhdParticleSet out = set;
    for (std::size_t q = 0; q < n; ++q) out.particles[q].weight = (1.0 - pd[q]) * set.particles[q].weight;

    const double clutter = association_clutter_intensity(models.clutter);
    std::vector<double> term(n);
    for (const auto& meas : z) {
        double denom = clutter;
        for (std::size_t q = 0; q < n; ++q) {
            term[q] = measurable[q] && pd[q] > 0.0
                          ? pd[q] * std::exp(measurement_log_likelihood(meas, predicted[q], models.measurement)) *
                                set.particles[q].weight
                          : 0.0;
            denom += term[q];
        }
        for (std::size_t q = 0; q < n; ++q) out.particles[q].weight += term[q] / denom;
    }
    return out;
}

/// Systematic resampling to n^p particles per expected target (at least n^p,
/// at most max_targets * n^p); the total mass is preserved.
template <class URBG>
PhdParticleSet phd_resample(const PhdParticleSet& set, const PhdParams& params, URBG& rng) {
    const double mass = set.mass();
    if (set.particles.empty() || !(mass > 0.0)) return {};
    const auto targets = std::clamp<double>(std::round(mass), 1.0, static_cast<double>(params.max_targets));
    const auto count = static_cast<std::size_t>(targets) * params.particles_per_target;

    std::vector<double> w(set.particles.size());
    for (std::size_t q = 0; q < w.size(); ++q) w[q] = set.particles[q].weight;
    const auto idx = systematic_indices(std::span<const double>(w), count, rng);
    PhdParticleSet out;
    out.particles.reserve(count);
    const double each = mass / static_cast<double>(count);
    for (auto j : idx) out.particles.push_back({set.particles[j].state, each});
    return out;
}

namespace detail {

inline double sq_position_distance(const State& a, const State& b) {
    const double dx = a[0] - b[0];
    const double dy = a[2] - b[2];
    return dx * dx + dy * dy;
}

struct KMeansResult {
    std::vector<State> centroids;
    double score = std::numeric_limits<double>::infinity();
};

/// Weighted k-means on positions with k-means++ seeding.
template <class URBG>
KMeansResult weighted_kmeans(const std::vector<Particle>& pts, std::size_t k, std::size_t iterations,
                             URBG& rng) {
    const std::size_t n = pts.size();
    KMeansResult res;
    std::vector<State> centers;
    centers.reserve(k);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    auto pick = [&](const std::vector<double>& score) {
        double total = 0.0;
        for (std::size_t q = 0; q < n; ++q) total += score[q];
        if (!(total > 0.0)) return static_cast<std::size_t>(unif(rng) * static_cast<double>(n)) % n;
        const double u = unif(rng) * total;
        double c = 0.0;
        for (std::size_t q = 0; q < n; ++q) {
            c += score[q];
            if (u < c) return q;
        }
        return n - 1;
    };

    std::vector<double> score(n);
    for (std::size_t q = 0; q < n; ++q) score[q] = pts[q].weight;
    centers.push_back(pts[pick(score)].state);
    while (centers.size() < k) {
        for (std::size_t q = 0; q < n; ++q) {
            d2[q] = std::min(d2[q], sq_position_distance(pts[q].state, centers.back()));
            score[q] = pts[q].weight * d2[q];
        }
        centers.push_back(pts[pick(score)].state);
    }

    std::vector<std::size_t> label(n, k);
    for (std::size_t it = 0; it < iterations; ++it) {
        bool changed = false;
        for (std::size_t q = 0; q < n; ++q) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = sq_position_distance(pts[q].state, centers[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (label[q] != best) {
                label[q] = best;
                changed = true;
            }
        }
        std::vector<State> sum(k, State::Zero());
        std::vector<double> mass(k, 0.0);
        for (std::size_t q = 0; q < n; ++q) {
            sum[label[q]] += pts[q].weight * pts[q].state;
            mass[label[q]] += pts[q].weight;
        }
        for (std::size_t c = 0; c < k; ++c)
            if (mass[c] > 0.0) centers[c] = sum[c] / mass[c];
        if (!changed) break;
    }

    res.score = 0.0;
    for (std::size_t q = 0; q < n; ++q) res.score += pts[q].weight * sq_position_distance(pts[q].state, centers[label[q]]);
    res.centroids = std::move(centers);
    return res;
}

}  // namespace detail

/// round(mass) target states as centroids of a weighted k-means clustering of
/// particle positions; the best of several seeded restarts is kept.
template <class URBG>
std::vector<State> phd_estimate(const PhdParticleSet& set, const PhdParams& params, URBG& rng) {
    const double mass = set.mass();
    auto k = static_cast<std::size_t>(std::max(0.0, std::round(mass)));
    k = std::min(k, set.particles.size());
    if (k == 0) return {};
    detail::KMeansResult best;
    for (std::size_t r = 0; r < std::max<std::size_t>(1, params.kmeans_restarts); ++r) {
        auto res = detail::weighted_kmeans(set.particles, k, params.kmeans_iterations, rng);
        if (res.score < best.score) best = std::move(res);
    }
    return best.centroids;
}

}  // namespace mbm
