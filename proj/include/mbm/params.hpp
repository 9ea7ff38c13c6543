#pragma once

#include <cstddef>
#include <stdexcept>

namespace mbm {

/// How posterior associations are chosen for each prior hypothesis.
enum class AssociationSearch {
    gibbs,       ///< ceil(N_h * w_h) Gibbs sweeps per prior hypothesis
    exhaustive,  ///< every valid association (small problems only)
};

struct FilterParams {
    /// N_h, maximum number of posterior hypotheses.
    std::size_t max_hypotheses = 100;
    /// r^p: components with marginal existence below this are dropped.
    double target_prune = 1e-5;
    /// w^p: hypotheses with weight below this are dropped.
    double hyp_prune = 1e-5;
    /// r^th: components with existence above this are reported.
    double extract_threshold = 0.5;
    /// n^p, particles per Bernoulli component.
    std::size_t particles = 1000;
    std::size_t gibbs_burn_in = 0;
    AssociationSearch search = AssociationSearch::gibbs;

    void check() const {
        auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!unit(target_prune) || !unit(hyp_prune) || !unit(extract_threshold))
            throw std::invalid_argument("filter thresholds must lie in [0,1]");
        if (max_hypotheses < 1) throw std::invalid_argument("max_hypotheses must be >= 1");
        if (particles < 1) throw std::invalid_argument("particles must be >= 1");
    }
};

}  // namespace mbm
