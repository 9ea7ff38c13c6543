#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the filter code paths it is used to check.

#include "mbm/core.hpp"
#include "mbm/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

namespace mbm::oracle {

/// Normal density written out longhand.
inline double normal_pdf(double x, double variance) {
    return std::exp(-x * x / (2.0 * variance)) / std::sqrt(2.0 * std::numbers::pi * variance);
}

/// Range-bearing likelihood with its own residual wrapping.
inline double likelihood(double z_range, double z_bearing, double px, double py, double range_var,
                         double bearing_var) {
    const double r = std::sqrt(px * px + py * py);
    const double b = std::atan2(py, px);
    double db = z_bearing - b;
    while (db > std::numbers::pi) db -= 2.0 * std::numbers::pi;
    while (db <= -std::numbers::pi) db += 2.0 * std::numbers::pi;
    return normal_pdf(z_range - r, range_var) * normal_pdf(db, bearing_var);
}

/// Unnormalised posterior weight of one association, evaluated directly from
/// the prior particles: w_h * prod detected r*mean(pd*l)/c * prod missed (1-r+r*mean(1-pd)).
/// Detection probability is a constant here.
inline double hypothesis_weight(double prior_weight, const std::vector<BernoulliComponent>& comps,
                                const std::vector<Measurement>& z, const std::vector<std::size_t>& theta,
                                double pd, double clutter, double range_var, double bearing_var) {
    double w = prior_weight;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const auto& c = comps[i];
        const double np = static_cast<double>(c.cloud.particles.size());
        if (theta[i] == 0) {
            w *= 1.0 - c.existence + c.existence * (1.0 - pd);
        } else {
            const auto& meas = z[theta[i] - 1];
            double s = 0.0;
            for (const auto& p : c.cloud.particles)
                s += pd * likelihood(meas.range, meas.bearing, p.state[0], p.state[2], range_var, bearing_var);
            w *= c.existence * s / (np * clutter);
        }
    }
    return w;
}

/// Minimum-cost OSPA by enumerating every injection of the smaller set.
inline double brute_force_ospa(const std::vector<State>& x, const std::vector<State>& y, double c, double p) {
    const auto& small = x.size() <= y.size() ? x : y;
    const auto& large = x.size() <= y.size() ? y : x;
    const std::size_t n = small.size();
    const std::size_t m = large.size();
    if (m == 0) return 0.0;
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = std::hypot(small[i][0] - large[perm[i]][0], small[i][2] - large[perm[i]][2]);
            s += std::pow(std::min(c, d), p);
        }
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::pow((best + std::pow(c, p) * static_cast<double>(m - n)) / static_cast<double>(m), 1.0 / p);
}

/// Every n-tuple over {0..m} with distinct positive entries, by filtering the
/// full Cartesian product.
inline std::vector<std::vector<std::size_t>> brute_force_associations(std::size_t n, std::size_t m) {
    std::vector<std::vector<std::size_t>> out;
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= (m + 1);
    for (std::size_t code = 0; code < total; ++code) {
        std::vector<std::size_t> t(n);
        std::size_t c = code;
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = c % (m + 1);
            c /= (m + 1);
        }
        bool ok = true;
        for (std::size_t a = 0; a < n && ok; ++a)
            for (std::size_t b = a + 1; b < n && ok; ++b)
                if (t[a] > 0 && t[a] == t[b]) ok = false;
        if (ok) out.push_back(t);
    }
    return out;
}

/// Composite midpoint rule on a rectangle.
template <class F>
double integrate_2d(F f, double x0, double x1, double y0, double y1, int nx, int ny) {
    const double hx = (x1 - x0) / nx;
    const double hy = (y1 - y0) / ny;
    double s = 0.0;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) s += f(x0 + (i + 0.5) * hx, y0 + (j + 0.5) * hy);
    return s * hx * hy;
}

}  // namespace mbm::oracle
