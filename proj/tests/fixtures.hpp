#pragma once

#include "mbm/core.hpp"
#include "mbm/models.hpp"

#include <cmath>
#include <numbers>

namespace mbm::testing {

/// Every particle at the same state, equal weights.
inline ParticleCloud point_cloud(const State& s, std::size_t n = 10) {
    ParticleCloud c;
    for (std::size_t p = 0; p < n; ++p) c.particles.push_back({s, 1.0 / static_cast<double>(n)});
    return c;
}

/// Default models with constant p_d / p_s, no birth, and the clutter rate
/// rescaled so that the association clutter intensity equals `c`.
inline FilterModels constant_models(double pd, double ps, double c) {
    FilterModels m;
    m.probabilities.detection = constant_probability(pd);
    m.probabilities.survival = constant_probability(ps);
    m.clutter.area_intensity = c * m.clutter.support().volume() / m.clutter.area();
    return m;
}

/// Range offset that puts the range-bearing likelihood at `target` when the
/// bearing residual is zero.
inline double range_offset_for_likelihood(double target, const MeasurementModel& mm) {
    const double peak = 1.0 / (2.0 * std::numbers::pi * std::sqrt(mm.range_variance * mm.bearing_variance));
    return std::sqrt(-2.0 * mm.range_variance * std::log(target / peak));
}

}  // namespace mbm::testing
