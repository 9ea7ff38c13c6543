#pragma once

#include "mbm/core.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace mbm {

/// Range (m) and four-quadrant bearing (rad, in (-pi, pi]) of a position
/// relative to a sensor at the origin.
struct Measurement {
    double range = 0.0;
    double bearing = 0.0;

    friend bool operator==(const Measurement&, const Measurement&) = default;
};

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    if (a > std::numbers::pi) a -= two_pi;
    return a;
}

// ---------------------------------------------------------------------------
// Motion

/// Nearly-constant-velocity model, independent acceleration noise per axis.
struct MotionModel {
    double period = 1.0;
    std::array<double, 2> accel_variances{4e-6, 4e-6};

    void check() const {
        if (!(period > 0.0)) throw std::invalid_argument("motion period must be positive");
        if (accel_variances[0] < 0.0 || accel_variances[1] < 0.0)
            throw std::invalid_argument("acceleration variances must be nonnegative");
    }
};

inline State transition_deterministic(const State& x, const MotionModel& m) {
    const double t = m.period;
    return State{x[0] + t * x[1], x[1], x[2] + t * x[3], x[3]};
}

template <class URBG>
State transition_sample(const State& x, const MotionModel& m, URBG& rng) {
    State out = transition_deterministic(x, m);
    const double t = m.period;
    std::normal_distribution<double> std_normal(0.0, 1.0);
    const double nx = std::sqrt(m.accel_variances[0]) * std_normal(rng);
    const double ny = std::sqrt(m.accel_variances[1]) * std_normal(rng);
    out[0] += 0.5 * t * t * nx;
    out[1] += t * nx;
    out[2] += 0.5 * t * t * ny;
    out[3] += t * ny;
    return out;
}

// ---------------------------------------------------------------------------
// Measurement

struct MeasurementModel {
    double range_variance = 0.25;
    double bearing_variance = 0.09;

    void check() const {
        if (!(range_variance > 0.0) || !(bearing_variance > 0.0))
            throw std::invalid_argument("measurement variances must be positive");
    }
};

inline Measurement measure_position(double px, double py) {
    if (px == 0.0 && py == 0.0) throw std::domain_error("bearing undefined");
    return {std::hypot(px, py), std::atan2(py, px)};
}

inline Measurement measure(const State& x) { return measure_position(x[0], x[2]); }

/// Cartesian position (p_x, p_y) of a range-bearing point.
inline std::array<double, 2> position_of(const Measurement& z) {
    return {z.range * std::cos(z.bearing), z.range * std::sin(z.bearing)};
}

/// Log density of `z` given a predicted noise-free measurement.
inline double measurement_log_likelihood(const Measurement& z, const Measurement& predicted,
                                         const MeasurementModel& m) {
    const double dr = z.range - predicted.range;
    const double db = wrap_angle(z.bearing - predicted.bearing);
    const double log_norm =
        -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(m.range_variance * m.bearing_variance);
    return log_norm - 0.5 * (dr * dr / m.range_variance + db * db / m.bearing_variance);
}

inline double measurement_log_likelihood(const Measurement& z, const State& x,
                                         const MeasurementModel& m) {
    if (x[0] == 0.0 && x[2] == 0.0) return -std::numeric_limits<double>::infinity();
    return measurement_log_likelihood(z, measure(x), m);
}

/// l(z | x): product of independent normal densities in range and wrapped bearing.
inline double measurement_likelihood(const Measurement& z, const State& x,
                                     const MeasurementModel& m) {
    return std::exp(measurement_log_likelihood(z, x, m));
}

template <class URBG>
Measurement noisy_measurement(const State& x, const MeasurementModel& m, URBG& rng) {
    std::normal_distribution<double> std_normal(0.0, 1.0);
    Measurement z = measure(x);
    z.range += std::sqrt(m.range_variance) * std_normal(rng);
    z.bearing = wrap_angle(z.bearing + std::sqrt(m.bearing_variance) * std_normal(rng));
    return z;
}

// ---------------------------------------------------------------------------
// Clutter

/// Rectangle in range-bearing space covered by the Cartesian field of view.
/// Bearing membership is tested on the circle: z is inside when its bearing,
/// shifted by whole turns, lies in [bearing_lo, bearing_hi].
struct MeasurementSupport {
    double range_lo = 0.0;
    double range_hi = 0.0;
    double bearing_lo = 0.0;
    double bearing_hi = 0.0;

    [[nodiscard]] double volume() const {
        return (range_hi - range_lo) * (bearing_hi - bearing_lo);
    }

    /// Bearing shifted by whole turns to the representative closest to the interval.
    [[nodiscard]] double unwrap_bearing(double b) const {
        const double mid = 0.5 * (bearing_lo + bearing_hi);
        return mid + wrap_angle(b - mid);
    }

    [[nodiscard]] bool contains(const Measurement& z) const {
        const double b = unwrap_bearing(z.bearing);
        return z.range >= range_lo && z.range <= range_hi && b >= bearing_lo && b <= bearing_hi;
    }
};

/// Poisson clutter, uniform over a Cartesian field of view.
struct ClutterModel {
    std::array<double, 2> fov_x{-50.0, 50.0};
    std::array<double, 2> fov_y{0.0, 100.0};
    /// Expected clutter points per square metre.
    double area_intensity = 5e-4;

    void check() const {
        if (!(fov_x[1] > fov_x[0]) || !(fov_y[1] > fov_y[0]))
            throw std::invalid_argument("field of view must have positive extent");
        if (!(area_intensity >= 0.0)) throw std::invalid_argument("clutter intensity must be >= 0");
    }

    [[nodiscard]] double area() const { return (fov_x[1] - fov_x[0]) * (fov_y[1] - fov_y[0]); }

    /// Expected number of clutter points per scan.
    [[nodiscard]] double expected_count() const { return area_intensity * area(); }

    [[nodiscard]] MeasurementSupport support() const {
        const std::array<std::array<double, 2>, 4> corners{{{fov_x[0], fov_y[0]},
                                                            {fov_x[1], fov_y[0]},
                                                            {fov_x[1], fov_y[1]},
                                                            {fov_x[0], fov_y[1]}}};
        MeasurementSupport s;
        const double cx = std::clamp(0.0, fov_x[0], fov_x[1]);
        const double cy = std::clamp(0.0, fov_y[0], fov_y[1]);
        s.range_lo = std::hypot(cx, cy);
        for (const auto& c : corners) s.range_hi = std::max(s.range_hi, std::hypot(c[0], c[1]));

        const bool origin_strictly_inside =
            fov_x[0] < 0.0 && 0.0 < fov_x[1] && fov_y[0] < 0.0 && 0.0 < fov_y[1];
        if (origin_strictly_inside) {
            s.bearing_lo = -std::numbers::pi;
            s.bearing_hi = std::numbers::pi;
            return s;
        }
        // Field of view left of the origin and straddling the negative x-axis:
        // measure bearings in [0, 2pi) so the interval is contiguous.
        const bool straddles_cut = fov_x[1] <= 0.0 && fov_y[0] < 0.0 && fov_y[1] > 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& c : corners) {
            if (c[0] == 0.0 && c[1] == 0.0) continue;
            double b = std::atan2(c[1], c[0]);
            if (straddles_cut && b < 0.0) b += 2.0 * std::numbers::pi;
            lo = std::min(lo, b);
            hi = std::max(hi, b);
        }
        s.bearing_lo = lo;
        s.bearing_hi = hi;
        return s;
    }
};

/// c(z): expected count spread uniformly over the induced measurement support.
inline double clutter_intensity(const Measurement& z, const ClutterModel& m) {
    const auto s = m.support();
    if (!s.contains(z)) return 0.0;
    return m.expected_count() / s.volume();
}

/// Clutter intensity used when weighting associations. Measurements that fall
/// outside the support (noise can push target returns there) are scored with
/// the uniform value, and a zero clutter rate is floored so that log weights
/// stay finite; clutter-explained measurements then cost about exp(-708).
inline double association_clutter_intensity(const ClutterModel& m) {
    const double c = m.expected_count() / m.support().volume();
    return std::max(c, std::numeric_limits<double>::min());
}

template <class URBG>
std::vector<Measurement> sample_clutter(const ClutterModel& m, URBG& rng) {
    std::vector<Measurement> out;
    const double lambda = m.expected_count();
    if (lambda <= 0.0) return out;
    std::poisson_distribution<int> count_dist(lambda);
    std::uniform_real_distribution<double> ux(m.fov_x[0], m.fov_x[1]);
    std::uniform_real_distribution<double> uy(m.fov_y[0], m.fov_y[1]);
    const int count = count_dist(rng);
    out.reserve(static_cast<std::size_t>(count));
    while (static_cast<int>(out.size()) < count) {
        const double x = ux(rng);
        const double y = uy(rng);
        if (x == 0.0 && y == 0.0) continue;
        out.push_back(measure_position(x, y));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Detection and survival

using StateProbability = std::function<double(const State&)>;

inline StateProbability constant_probability(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0,1]");
    return [p](const State&) { return p; };
}

struct DetectionSurvival {
    StateProbability detection = constant_probability(0.9);
    StateProbability survival = constant_probability(0.99);
};

// ---------------------------------------------------------------------------
// Birth

struct BirthComponentSpec {
    double existence = 0.01;
    State seed_state = State::Zero();
};

/// Multi-Bernoulli birth: the same components are offered at every prediction.
struct BirthModel {
    std::vector<BirthComponentSpec> components;

    void check() const {
        for (const auto& c : components)
            if (!(c.existence >= 0.0 && c.existence <= 1.0))
                throw std::invalid_argument("birth existence outside [0,1]");
    }
};

/// Particles for birth component `index`, each one transition step from its seed.
template <class URBG>
ParticleCloud sample_birth_particles(std::size_t index, const BirthModel& birth,
                                     const MotionModel& motion, std::size_t count, URBG& rng) {
    if (index >= birth.components.size()) throw std::out_of_range("birth component index");
    if (count == 0) throw std::invalid_argument("particle count must be positive");
    const State& seed = birth.components[index].seed_state;
    ParticleCloud c;
    c.particles.reserve(count);
    const double eq = 1.0 / static_cast<double>(count);
    for (std::size_t p = 0; p < count; ++p) c.particles.push_back({transition_sample(seed, motion, rng), eq});
    return c;
}

/// Everything the filters need to know about targets and sensor.
struct FilterModels {
    MotionModel motion;
    MeasurementModel measurement;
    ClutterModel clutter;
    DetectionSurvival probabilities;
    BirthModel birth;
};

}  // namespace mbm
