#pragma once

#include "mbm/core.hpp"
#include "mbm/cost_matrix.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

namespace mbm {

struct GibbsConfig {
    /// N_h: posterior hypotheses budget across one update.
    std::size_t max_hypotheses = 100;
    /// Sweeps discarded before recording.
    std::size_t burn_in = 0;
};

/// Distribution of theta(i) given every other entry of `theta`.
/// Index 0 is the missed-detection option; index j is measurement j. Entries
/// used by other targets, and infeasible pairings, get probability 0.
inline std::vector<double> gibbs_conditional(std::size_t i, const Association& theta,
                                             const CostMatrix& cost) {
    const std::size_t m = cost.num_measurements();
    std::vector<bool> taken(m + 1, false);
    for (std::size_t k = 0; k < theta.size(); ++k)
        if (k != i && theta.theta[k] > 0) taken[theta.theta[k]] = true;

    std::vector<double> logs(m + 1, -std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j <= m; ++j)
        if (!taken[j]) logs[j] = cost.log_contribution(i, j);

    const double lse = log_sum_exp(logs);
    if (!std::isfinite(lse)) throw std::runtime_error("no feasible assignment");
    std::vector<double> p(m + 1);
    for (std::size_t j = 0; j <= m; ++j) p[j] = std::exp(logs[j] - lse);
    return p;
}

namespace detail {

template <class URBG>
std::size_t draw_categorical(const std::vector<double>& p, URBG& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double c = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[j] <= 0.0) continue;
        last_positive = j;
        c += p[j];
        if (u < c) return j;
    }
    return last_positive;
}

template <class URBG>
void gibbs_sweep(Association& theta, const CostMatrix& cost, URBG& rng) {
    for (std::size_t i = 0; i < theta.size(); ++i)
        theta.theta[i] = draw_categorical(gibbs_conditional(i, theta, cost), rng);
}

}  // namespace detail

/// Runs `k` full sweeps of the single-site Gibbs sampler starting from the
/// all-missed association and returns the distinct associations recorded after
/// each sweep, in the order first visited.
template <class URBG>
std::vector<Association> gibbs_sample(const CostMatrix& cost, std::size_t k,
                                      const GibbsConfig& config, URBG& rng) {
    if (k == 0) throw std::invalid_argument("gibbs_sample needs k >= 1");
    Association theta{std::vector<std::size_t>(cost.num_targets(), 0)};
    if (theta.size() == 0) return {theta};

    for (std::size_t s = 0; s < config.burn_in; ++s) detail::gibbs_sweep(theta, cost, rng);

    std::vector<Association> out;
    std::set<Association> seen;
    for (std::size_t s = 0; s < k; ++s) {
        detail::gibbs_sweep(theta, cost, rng);
        if (seen.insert(theta).second) out.push_back(theta);
    }
    return out;
}

/// Number of valid associations of n targets to m measurements:
/// sum_j C(n,j) C(m,j) j!.
inline double association_count(std::size_t n, std::size_t m) {
    double total = 0.0;
    double term = 1.0;  // j = 0
    for (std::size_t j = 0; j <= std::min(n, m); ++j) {
        if (j > 0) {
            term *= static_cast<double>(n - j + 1) * static_cast<double>(m - j + 1) /
                    static_cast<double>(j);
        }
        total += term;
    }
    return total;
}

/// Every valid association, in lexicographic order of theta.
inline std::vector<Association> exhaustive_associations(std::size_t n, std::size_t m,
                                                        double guard = 1e6) {
    if (association_count(n, m) > guard)
        throw std::length_error("association enumeration exceeds guard");
    std::vector<Association> out;
    Association cur{std::vector<std::size_t>(n, 0)};
    std::vector<bool> used(m + 1, false);

    auto recurse = [&](auto&& self, std::size_t i) -> void {
        if (i == n) {
            out.push_back(cur);
            return;
        }
        for (std::size_t j = 0; j <= m; ++j) {
            if (j > 0 && used[j]) continue;
            cur.theta[i] = j;
            if (j > 0) used[j] = true;
            self(self, i + 1);
            if (j > 0) used[j] = false;
        }
        cur.theta[i] = 0;
    };
    recurse(recurse, 0);
    return out;
}

}  // namespace mbm
