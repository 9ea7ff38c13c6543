#pragma once

#include "mbm/core.hpp"
#include "mbm/cost_matrix.hpp"
#include "mbm/gibbs.hpp"
#include "mbm/models.hpp"
#include "mbm/params.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mbm {

/// Result of updating one Bernoulli component under one association choice.
struct ComponentUpdate {
    BernoulliComponent component;
    /// C_i, the factor this choice contributes to the hypothesis weight.
    double contribution = 0.0;
    double log_contribution = -std::numeric_limits<double>::infinity();
    /// False when the contribution is zero and the choice must not be used.
    bool feasible = false;
};

/// Posterior components for every (target, measurement) pair and every miss.
struct UpdatedComponentTable {
    std::vector<std::vector<ComponentPtr>> detected;  // [target][measurement]
    std::vector<ComponentPtr> missed;
};

namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

/// Per-particle quantities reused across measurements.
struct CloudMeasurementCache {
    std::vector<Measurement> predicted;
    std::vector<double> log_pd;
    std::vector<double> miss_weight;  // 1 - p_d
    bool constant_pd = true;

    CloudMeasurementCache(const ParticleCloud& cloud, const FilterModels& models) {
        const auto n = cloud.size();
        predicted.resize(n);
        log_pd.resize(n);
        miss_weight.resize(n);
        for (std::size_t p = 0; p < n; ++p) {
            const State& x = cloud.particles[p].state;
            const double pd = models.probabilities.detection(x);
            log_pd[p] = safe_log(pd);
            miss_weight[p] = 1.0 - pd;
            // Particles sitting exactly on the sensor cannot produce a return.
            if (x[0] == 0.0 && x[2] == 0.0) log_pd[p] = kNegInf;
            else predicted[p] = measure(x);
            if (p > 0 && miss_weight[p] != miss_weight[0]) constant_pd = false;
        }
    }

    /// log p_d(x_p) + log l(z | x_p) for each particle.
    [[nodiscard]] std::vector<double> detection_log_weights(const Measurement& z,
                                                            const MeasurementModel& mm) const {
        std::vector<double> out(predicted.size());
        for (std::size_t p = 0; p < out.size(); ++p)
            out[p] = std::isfinite(log_pd[p])
                         ? log_pd[p] + measurement_log_likelihood(z, predicted[p], mm)
                         : kNegInf;
        return out;
    }

    [[nodiscard]] double mean_miss() const {
        double s = 0.0;
        for (double w : miss_weight) s += w;
        return predicted.empty() ? 0.0 : s / static_cast<double>(predicted.size());
    }
};

/// log of r * (1/n^p) sum_p p_d l / c(z).
inline double detection_log_contribution(double existence, std::span<const double> log_weights,
                                         double log_clutter) {
    if (log_weights.empty()) return kNegInf;
    return safe_log(existence) + log_sum_exp(log_weights) -
           std::log(static_cast<double>(log_weights.size())) - log_clutter;
}

template <class URBG>
BernoulliComponent detected_component(const BernoulliComponent& comp,
                                      std::span<const double> log_weights, URBG& rng) {
    BernoulliComponent out;
    out.existence = 1.0;
    ParticleCloud weighted = comp.cloud;
    const auto w = normalize_log_weights(log_weights);
    for (std::size_t p = 0; p < w.size(); ++p) weighted.particles[p].weight = w[p];
    out.cloud = systematic_resample(weighted, comp.cloud.size(), rng);
    return out;
}

template <class URBG>
ComponentUpdate missed_update(const BernoulliComponent& comp, const CloudMeasurementCache& cache,
                              URBG& rng) {
    ComponentUpdate u;
    const double r = comp.existence;
    const double q = cache.mean_miss();
    u.contribution = 1.0 - r + r * q;
    u.log_contribution = safe_log(u.contribution);
    u.feasible = u.contribution > 0.0;
    u.component.existence = u.feasible ? r * q / u.contribution : 0.0;

    if (cache.constant_pd || !(q > 0.0) || comp.cloud.empty()) {
        // Equal reweighting leaves the cloud unchanged.
        u.component.cloud = comp.cloud;
    } else {
        ParticleCloud weighted = comp.cloud;
        for (std::size_t p = 0; p < weighted.size(); ++p)
            weighted.particles[p].weight = cache.miss_weight[p];
        u.component.cloud = systematic_resample(weighted, comp.cloud.size(), rng);
    }
    return u;
}

/// Shares updated components between hypotheses that hold the same prior
/// component. Contributions are computed eagerly; updated particle clouds only
/// when an association actually uses them.
template <class URBG>
class UpdateWorkspace {
public:
    UpdateWorkspace(std::span<const Measurement> z, const FilterModels& models)
        : z_(z), models_(models), log_clutter_(std::log(association_clutter_intensity(models.clutter))) {}

    struct Entry {
        const BernoulliComponent* prior = nullptr;
        CloudMeasurementCache cache;
        std::vector<double> log_detect;
        double log_miss = kNegInf;
        ComponentPtr missed;
        std::vector<ComponentPtr> detected;
    };

    std::size_t entry_for(const ComponentPtr& comp) {
        auto [it, inserted] = index_.try_emplace(comp.get(), entries_.size());
        if (!inserted) return it->second;
        Entry e{comp.get(), CloudMeasurementCache(comp->cloud, models_), {}, kNegInf, nullptr, {}};
        e.log_detect.resize(z_.size());
        for (std::size_t j = 0; j < z_.size(); ++j) {
            const auto lw = e.cache.detection_log_weights(z_[j], models_.measurement);
            e.log_detect[j] = detection_log_contribution(comp->existence, lw, log_clutter_);
        }
        const double r = comp->existence;
        e.log_miss = safe_log(1.0 - r + r * e.cache.mean_miss());
        e.detected.resize(z_.size());
        entries_.push_back(std::move(e));
        return entries_.size() - 1;
    }

    [[nodiscard]] const Entry& entry(std::size_t k) const { return entries_[k]; }

    ComponentPtr missed(std::size_t k, URBG& rng) {
        Entry& e = entries_[k];
        if (!e.missed) e.missed = make_component(missed_update(*e.prior, e.cache, rng).component);
        return e.missed;
    }

    ComponentPtr detected(std::size_t k, std::size_t j, URBG& rng) {
        Entry& e = entries_[k];
        if (!e.detected[j]) {
            const auto lw = e.cache.detection_log_weights(z_[j], models_.measurement);
            e.detected[j] = make_component(detected_component(*e.prior, lw, rng));
        }
        return e.detected[j];
    }

private:
    std::span<const Measurement> z_;
    const FilterModels& models_;
    double log_clutter_;
    std::vector<Entry> entries_;
    std::unordered_map<const BernoulliComponent*, std::size_t> index_;
};

}  // namespace detail

/// Bernoulli update when the target generated measurement `z`.
/// Existence becomes 1; particles are reweighted by p_d * l(z|x) and resampled.
template <class URBG>
ComponentUpdate update_detected(const BernoulliComponent& comp, const Measurement& z,
                                const FilterModels& models, URBG& rng) {
    const detail::CloudMeasurementCache cache(comp.cloud, models);
    const auto lw = cache.detection_log_weights(z, models.measurement);
    ComponentUpdate u;
    u.log_contribution = detail::detection_log_contribution(
        comp.existence, lw, std::log(association_clutter_intensity(models.clutter)));
    u.contribution = std::exp(u.log_contribution);
    u.feasible = std::isfinite(u.log_contribution);
    if (u.feasible) {
        u.component = detail::detected_component(comp, lw, rng);
    } else {
        u.component.existence = 1.0;
        u.component.cloud = comp.cloud;
    }
    return u;
}

/// Bernoulli update when the target is not detected.
template <class URBG>
ComponentUpdate update_missed(const BernoulliComponent& comp, const FilterModels& models, URBG& rng) {
    const detail::CloudMeasurementCache cache(comp.cloud, models);
    return detail::missed_update(comp, cache, rng);
}

/// Cost matrix and every candidate posterior component for one hypothesis.
template <class URBG>
std::pair<CostMatrix, UpdatedComponentTable> build_cost_matrix(const GlobalHypothesis& hyp,
                                                               std::span<const Measurement> z,
                                                               const FilterModels& models,
                                                               URBG& rng) {
    const std::size_t n = hyp.components.size();
    const std::size_t m = z.size();
    CostMatrix cost(n, m);
    UpdatedComponentTable table;
    table.detected.assign(n, std::vector<ComponentPtr>(m));
    table.missed.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& comp = *hyp.components[i];
        for (std::size_t j = 0; j < m; ++j) {
            auto u = update_detected(comp, z[j], models, rng);
            cost.log_detect(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = u.log_contribution;
            table.detected[i][j] = make_component(std::move(u.component));
        }
        auto u = update_missed(comp, models, rng);
        cost.log_miss[static_cast<Eigen::Index>(i)] = u.log_contribution;
        table.missed[i] = make_component(std::move(u.component));
    }
    return {std::move(cost), std::move(table)};
}

/// Number of Gibbs sweeps for a prior hypothesis of weight w: ceil(N_h * w), at least 1.
inline std::size_t gibbs_sample_count(std::size_t max_hypotheses, double weight) {
    const double k = std::ceil(static_cast<double>(max_hypotheses) * weight);
    return k < 1.0 ? 1 : static_cast<std::size_t>(k);
}

/// MBM measurement update. Each prior hypothesis spawns one posterior
/// hypothesis per distinct association found for it; weights follow
/// w_h * prod_i C_{i,theta(i)} and are normalised jointly.
template <class URBG>
MbmDensity mbm_update(const MbmDensity& prior, std::span<const Measurement> z,
                      const FilterModels& models, const FilterParams& params, URBG& rng) {
    detail::UpdateWorkspace<URBG> ws(z, models);
    const GibbsConfig gibbs{params.max_hypotheses, params.gibbs_burn_in};

    std::vector<GlobalHypothesis> posterior;
    std::vector<double> log_weights;
    for (const auto& h : prior.hypotheses) {
        const std::size_t n = h.components.size();
        std::vector<std::size_t> entries(n);
        CostMatrix cost(n, z.size());
        for (std::size_t i = 0; i < n; ++i) {
            entries[i] = ws.entry_for(h.components[i]);
            const auto& e = ws.entry(entries[i]);
            const auto row = static_cast<Eigen::Index>(i);
            cost.log_miss[row] = e.log_miss;
            for (std::size_t j = 0; j < z.size(); ++j)
                cost.log_detect(row, static_cast<Eigen::Index>(j)) = e.log_detect[j];
        }

        std::vector<Association> assocs;
        if (params.search == AssociationSearch::exhaustive) {
            assocs = exhaustive_associations(n, z.size());
        } else {
            assocs = gibbs_sample(cost, gibbs_sample_count(params.max_hypotheses, h.weight), gibbs, rng);
        }

        const double log_wh = detail::safe_log(h.weight);
        for (const auto& a : assocs) {
            const double lw = log_wh + cost.log_weight(a);
            if (!std::isfinite(lw)) continue;
            GlobalHypothesis post;
            post.components.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                post.components.push_back(a.theta[i] == 0 ? ws.missed(entries[i], rng)
                                                          : ws.detected(entries[i], a.theta[i] - 1, rng));
            }
            posterior.push_back(std::move(post));
            log_weights.push_back(lw);
        }
    }

    const auto w = normalize_log_weights(log_weights);
    MbmDensity out;
    out.hypotheses = std::move(posterior);
    for (std::size_t k = 0; k < w.size(); ++k) out.hypotheses[k].weight = w[k];
    return out;
}

/// Survival thinning and propagation of one component.
template <class URBG>
BernoulliComponent predict_component(const BernoulliComponent& comp, const FilterModels& models,
                                     URBG& rng) {
    BernoulliComponent out;
    const std::size_t n = comp.cloud.size();
    std::vector<double> ps(n);
    double sum = 0.0;
    bool constant = true;
    for (std::size_t p = 0; p < n; ++p) {
        ps[p] = models.probabilities.survival(comp.cloud.particles[p].state);
        sum += ps[p];
        if (ps[p] != ps[0]) constant = false;
    }
    out.existence = n == 0 ? 0.0 : comp.existence * (sum / static_cast<double>(n));

    ParticleCloud moved;
    moved.particles.reserve(n);
    for (std::size_t p = 0; p < n; ++p)
        moved.particles.push_back({transition_sample(comp.cloud.particles[p].state, models.motion, rng),
                                   constant || !(sum > 0.0) ? 1.0 / static_cast<double>(n) : ps[p] / sum});
    if (constant || !(sum > 0.0)) {
        out.cloud = std::move(moved);
    } else {
        out.cloud = systematic_resample(moved, n, rng);
    }
    return out;
}

/// Birth components for one prediction step, shared by every hypothesis.
template <class URBG>
std::vector<ComponentPtr> sample_birth_components(const FilterModels& models, std::size_t particles,
                                                  URBG& rng) {
    std::vector<ComponentPtr> out;
    out.reserve(models.birth.components.size());
    for (std::size_t b = 0; b < models.birth.components.size(); ++b) {
        out.push_back(make_component(
            {models.birth.components[b].existence,
             sample_birth_particles(b, models.birth, models.motion, particles, rng)}));
    }
    return out;
}

/// MBM prediction: hypothesis weights are carried over untouched, every
/// component is predicted, and the birth components are appended.
template <class URBG>
MbmDensity mbm_predict(const MbmDensity& posterior, const FilterModels& models, std::size_t particles,
                       URBG& rng) {
    std::unordered_map<const BernoulliComponent*, ComponentPtr> predicted;
    MbmDensity out;
    out.hypotheses.reserve(posterior.hypotheses.size());
    for (const auto& h : posterior.hypotheses) {
        GlobalHypothesis nh;
        nh.weight = h.weight;
        nh.components.reserve(h.components.size() + models.birth.components.size());
        for (const auto& c : h.components) {
            auto [it, inserted] = predicted.try_emplace(c.get());
            if (inserted) it->second = make_component(predict_component(*c, models, rng));
            nh.components.push_back(it->second);
        }
        out.hypotheses.push_back(std::move(nh));
    }
    const auto births = sample_birth_components(models, particles, rng);
    for (auto& h : out.hypotheses) h.components.insert(h.components.end(), births.begin(), births.end());
    return out;
}

/// Single empty hypothesis with unit weight.
inline MbmDensity empty_density() {
    MbmDensity d;
    d.hypotheses.push_back(GlobalHypothesis{1.0, {}});
    return d;
}

}  // namespace mbm
