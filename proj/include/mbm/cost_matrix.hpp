#pragma once

#include "mbm/core.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mbm {

/// Per-target contributions to a posterior hypothesis weight, stored as logs.
/// Row i of `log_detect` holds log C_{i,j} for measurement j (0-based column),
/// `log_miss[i]` holds log C_{i,0}. -inf marks an infeasible pairing.
struct CostMatrix {
    Eigen::MatrixXd log_detect;
    Eigen::VectorXd log_miss;

    CostMatrix() = default;
    CostMatrix(std::size_t targets, std::size_t measurements)
        : log_detect(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(targets),
                                               static_cast<Eigen::Index>(measurements),
                                               -std::numeric_limits<double>::infinity())),
          log_miss(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(targets),
                                             -std::numeric_limits<double>::infinity())) {}

    /// Builds from linear-domain contributions (n x m detect, n miss).
    static CostMatrix from_linear(const Eigen::MatrixXd& detect, const Eigen::VectorXd& miss) {
        if (detect.rows() != miss.size()) throw std::invalid_argument("cost matrix shape mismatch");
        CostMatrix c;
        c.log_detect = detect.array().log().matrix();
        c.log_miss = miss.array().log().matrix();
        return c;
    }

    [[nodiscard]] std::size_t num_targets() const { return static_cast<std::size_t>(log_miss.size()); }
    [[nodiscard]] std::size_t num_measurements() const {
        return static_cast<std::size_t>(log_detect.cols());
    }

    /// Log contribution of target i under theta value j (0 = missed).
    [[nodiscard]] double log_contribution(std::size_t i, std::size_t j) const {
        const auto r = static_cast<Eigen::Index>(i);
        return j == 0 ? log_miss[r] : log_detect(r, static_cast<Eigen::Index>(j - 1));
    }

    [[nodiscard]] double contribution(std::size_t i, std::size_t j) const {
        return std::exp(log_contribution(i, j));
    }

    /// Sum over targets of log C_{i,theta(i)}.
    [[nodiscard]] double log_weight(const Association& a) const {
        if (a.size() != num_targets()) throw std::invalid_argument("association length mismatch");
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += log_contribution(i, a.theta[i]);
        return s;
    }
};

}  // namespace mbm
