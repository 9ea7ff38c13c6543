#pragma once

#include "mbm/core.hpp"
#include "mbm/params.hpp"

#include <cstddef>
#include <vector>

namespace mbm {

struct StateEstimate {
    std::vector<State> states;
    std::size_t source_hypothesis = 0;

    [[nodiscard]] std::size_t cardinality() const { return states.size(); }
};

/// Index of the highest-weight hypothesis; the lowest index wins ties.
inline std::size_t select_map_hypothesis(const MbmDensity& d) {
    std::size_t best = 0;
    for (std::size_t h = 1; h < d.hypotheses.size(); ++h)
        if (d.hypotheses[h].weight > d.hypotheses[best].weight) best = h;
    return best;
}

/// Weighted-mean states of the MAP hypothesis components whose existence
/// strictly exceeds the extraction threshold.
inline StateEstimate extract_states(const MbmDensity& d, const FilterParams& params) {
    StateEstimate est;
    if (d.hypotheses.empty()) return est;
    est.source_hypothesis = select_map_hypothesis(d);
    for (const auto& c : d.hypotheses[est.source_hypothesis].components)
        if (c->existence > params.extract_threshold && !c->cloud.empty())
            est.states.push_back(weighted_mean(c->cloud));
    return est;
}

/// Drops component i from every hypothesis when sum_h w_h r_{h,i} < r^p.
inline MbmDensity prune_components(const MbmDensity& d, const FilterParams& params) {
    const std::size_t n = d.num_components();
    std::vector<bool> keep(n);
    for (std::size_t i = 0; i < n; ++i) keep[i] = !(marginal_existence(d, i) < params.target_prune);

    MbmDensity out;
    out.hypotheses.reserve(d.hypotheses.size());
    for (const auto& h : d.hypotheses) {
        GlobalHypothesis nh;
        nh.weight = h.weight;
        for (std::size_t i = 0; i < n; ++i)
            if (keep[i]) nh.components.push_back(h.components[i]);
        out.hypotheses.push_back(std::move(nh));
    }
    return out;
}

/// Drops hypotheses with w_h < w^p (never the MAP one) and renormalises.
inline MbmDensity prune_hypotheses(const MbmDensity& d, const FilterParams& params) {
    if (d.hypotheses.empty()) return d;
    const std::size_t map = select_map_hypothesis(d);
    MbmDensity out;
    std::vector<double> w;
    for (std::size_t h = 0; h < d.hypotheses.size(); ++h) {
        if (h != map && d.hypotheses[h].weight < params.hyp_prune) continue;
        out.hypotheses.push_back(d.hypotheses[h]);
        w.push_back(d.hypotheses[h].weight);
    }
    const auto nw = normalize_weights(w);
    for (std::size_t h = 0; h < nw.size(); ++h) out.hypotheses[h].weight = nw[h];
    return out;
}

}  // namespace mbm
