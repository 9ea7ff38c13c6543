#pragma once

#include "mbm/core.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mbm {

struct AssignmentResult {
    /// column assigned to each row
    std::vector<std::size_t> permutation;
    double cost = 0.0;
};

/// Exact minimum-cost assignment on a square matrix (Hungarian method with
/// row/column potentials, O(n^3)).
inline AssignmentResult optimal_assignment(const Eigen::MatrixXd& costs) {
    if (costs.rows() != costs.cols()) throw std::invalid_argument("assignment matrix must be square");
    const auto n = static_cast<std::size_t>(costs.rows());
    AssignmentResult result;
    if (n == 0) return result;

    constexpr double inf = std::numeric_limits<double>::infinity();
    // 1-based arrays; column 0 is a virtual start node.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> row_of_col(n + 1, 0), way(n + 1, 0);
    auto a = [&](std::size_t i, std::size_t j) {
        return costs(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1));
    };

    for (std::size_t i = 1; i <= n; ++i) {
        row_of_col[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = row_of_col[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (row_of_col[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    result.permutation.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) result.permutation[row_of_col[j] - 1] = j - 1;
    for (std::size_t i = 0; i < n; ++i)
        result.cost += costs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(result.permutation[i]));
    return result;
}

using BaseDistance = std::function<double(const State&, const State&)>;

/// Euclidean distance between the (p_x, p_y) parts of two states.
inline double position_distance(const State& a, const State& b) {
    return std::hypot(a[0] - b[0], a[2] - b[2]);
}

struct OspaParams {
    double cutoff = 10.0;
    double order = 2.0;
    BaseDistance base_distance = position_distance;

    void check() const {
        if (!(cutoff > 0.0)) throw std::invalid_argument("OSPA cutoff must be positive");
        if (!(order >= 1.0)) throw std::invalid_argument("OSPA order must be >= 1");
    }
};

struct OspaResult {
    double total = 0.0;
    double localization = 0.0;
    double cardinality = 0.0;
};

/// OSPA distance between two finite sets. The smaller set is padded with
/// dummy elements at cutoff distance so that one square assignment covers both
/// the localisation and cardinality terms.
inline OspaResult ospa_distance(const std::vector<State>& x, const std::vector<State>& y,
                                const OspaParams& params = {}) {
    params.check();
    const auto* small = &x;
    const auto* large = &y;
    if (small->size() > large->size()) std::swap(small, large);
    const std::size_t n = small->size();
    const std::size_t m = large->size();
    if (m == 0) return {};

    const double c = params.cutoff;
    const double p = params.order;
    const double cp = std::pow(c, p);
    Eigen::MatrixXd costs(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            costs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                i < n ? std::pow(std::min(c, params.base_distance((*small)[i], (*large)[j])), p) : cp;
        }
    }
    const auto assignment = optimal_assignment(costs);
    double loc_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        loc_sum += costs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(assignment.permutation[i]));
    const double card_sum = cp * static_cast<double>(m - n);
    const double md = static_cast<double>(m);

    OspaResult r;
    r.localization = std::pow(loc_sum / md, 1.0 / p);
    r.cardinality = std::pow(card_sum / md, 1.0 / p);
    r.total = std::pow((loc_sum + card_sum) / md, 1.0 / p);
    return r;
}

}  // namespace mbm
