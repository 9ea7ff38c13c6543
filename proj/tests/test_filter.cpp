#include "mbm/filter.hpp"
#include "mbm/sim.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mbm;
using mbm::testing::constant_models;
using mbm::testing::point_cloud;

namespace {

const State kTarget{30.0, 0.0, 40.0, 0.0};

/// A measurement whose likelihood under kTarget is exactly `l` (range residual only).
Measurement measurement_with_likelihood(double l, const MeasurementModel& mm) {
    const auto pred = measure(kTarget);
    return {pred.range + mbm::testing::range_offset_for_likelihood(l, mm), pred.bearing};
}

ParticleCloud two_point_cloud(const State& a, const State& b, std::size_t half) {
    ParticleCloud c;
    const double w = 0.5 / static_cast<double>(half);
    for (std::size_t p = 0; p < half; ++p) c.particles.push_back({a, w});
    for (std::size_t p = 0; p < half; ++p) c.particles.push_back({b, w});
    return c;
}

double fraction_at(const ParticleCloud& c, double x) {
    double n = 0;
    for (const auto& p : c.particles) n += p.state[0] == x ? 1 : 0;
    return n / static_cast<double>(c.size());
}

}  // namespace

TEST(UpdateDetected, ContributionExample) {
    const auto models = constant_models(0.9, 0.99, 0.1);
    const auto z = measurement_with_likelihood(0.4, models.measurement);
    ASSERT_NEAR(measurement_likelihood(z, kTarget, models.measurement), 0.4, 1e-12);
    Rng rng(1);
    const auto u = update_detected(BernoulliComponent{0.5, point_cloud(kTarget)}, z, models, rng);
    EXPECT_TRUE(u.feasible);
    EXPECT_NEAR(u.contribution, 1.8, 1.8e-12);
    EXPECT_EQ(u.component.existence, 1.0);
}

TEST(UpdateDetected, ExistenceIsOneForAnyInput) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto models = constant_models(0.9, 0.99, 0.1);
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const double r = u(gen);
        const Measurement z{10.0 + 80.0 * u(gen), 3.0 * u(gen)};
        EXPECT_EQ(update_detected(BernoulliComponent{r, point_cloud(kTarget)}, z, models, rng).component.existence,
                  1.0);
    }
}

TEST(UpdateDetected, UndetectableTarget) {
    const auto models = constant_models(0.0, 0.99, 0.1);
    Rng rng(3);
    const auto u = update_detected(BernoulliComponent{0.5, point_cloud(kTarget)}, measure(kTarget), models, rng);
    EXPECT_EQ(u.contribution, 0.0);
    EXPECT_FALSE(u.feasible);
}

TEST(UpdateDetected, ReweightsByLikelihood) {
    const auto models = constant_models(0.9, 0.99, 0.1);
    const State near = kTarget;
    State far = kTarget;
    far[0] += 0.5;
    const auto z = measure(kTarget);
    const double ln = oracle::likelihood(z.range, z.bearing, near[0], near[2], 0.25, 0.09);
    const double lf = oracle::likelihood(z.range, z.bearing, far[0], far[2], 0.25, 0.09);
    Rng rng(4);
    const auto u = update_detected(BernoulliComponent{0.5, two_point_cloud(near, far, 500)}, z, models, rng);
    // Systematic resampling is exact up to one particle.
    EXPECT_NEAR(fraction_at(u.component.cloud, near[0]), ln / (ln + lf), 1.0 / 1000);
    EXPECT_NEAR(u.component.cloud.total_weight(), 1.0, 1e-12);
}

TEST(UpdateMissed, ClosedFormExample) {
    const auto models = constant_models(0.9, 0.99, 0.1);
    Rng rng(5);
    const auto u = update_missed(BernoulliComponent{0.5, point_cloud(kTarget)}, models, rng);
    EXPECT_NEAR(u.component.existence, 1.0 / 11.0, 1e-15);
    EXPECT_NEAR(u.contribution, 0.55, 1e-15);
}

TEST(UpdateMissed, DegenerateDetectors) {
    Rng rng(6);
    const BernoulliComponent comp{0.3, point_cloud(kTarget)};

    const auto none = update_missed(comp, constant_models(0.0, 0.99, 0.1), rng);
    EXPECT_DOUBLE_EQ(none.component.existence, 0.3);
    EXPECT_DOUBLE_EQ(none.contribution, 1.0);
    EXPECT_EQ(none.component.cloud.size(), comp.cloud.size());

    const auto certain = update_missed(comp, constant_models(1.0, 0.99, 0.1), rng);
    EXPECT_EQ(certain.component.existence, 0.0);
    EXPECT_DOUBLE_EQ(certain.contribution, 0.7);

    const auto impossible = update_missed(BernoulliComponent{1.0, point_cloud(kTarget)},
                                          constant_models(1.0, 0.99, 0.1), rng);
    EXPECT_EQ(impossible.contribution, 0.0);
    EXPECT_FALSE(impossible.feasible);
    EXPECT_EQ(impossible.component.existence, 0.0);
}

TEST(UpdateMissed, StateDependentDetectionReweights) {
    auto models = constant_models(0.9, 0.99, 0.1);
    models.probabilities.detection = [](const State& x) { return x[0] > 0.0 ? 0.9 : 0.1; };
    const State right{10, 0, 40, 0};
    const State left{-10, 0, 40, 0};
    Rng rng(7);
    const auto u = update_missed(BernoulliComponent{0.5, two_point_cloud(right, left, 500)}, models, rng);
    // q = 0.5; miss weights 0.1 and 0.9.
    EXPECT_NEAR(u.contribution, 0.75, 1e-12);
    EXPECT_NEAR(u.component.existence, 0.25 / 0.75, 1e-12);
    EXPECT_NEAR(fraction_at(u.component.cloud, 10.0), 0.1, 1.0 / 1000);
}

TEST(CostMatrix, SinglePairExample) {
    const auto models = constant_models(0.9, 0.99, 0.1);
    const std::vector<Measurement> z{measurement_with_likelihood(0.4, models.measurement)};
    const GlobalHypothesis h{1.0, {make_component({0.5, point_cloud(kTarget)})}};
    Rng rng(8);
    const auto [cost, table] = build_cost_matrix(h, z, models, rng);
    EXPECT_NEAR(cost.contribution(0, 1), 1.8, 1e-12);
    EXPECT_NEAR(cost.contribution(0, 0), 0.55, 1e-15);
    EXPECT_EQ(table.detected[0][0]->existence, 1.0);
    EXPECT_NEAR(table.missed[0]->existence, 1.0 / 11.0, 1e-15);
}

TEST(CostMatrix, NoMeasurements) {
    const auto models = constant_models(0.9, 0.99, 0.1);
    const GlobalHypothesis h{1.0, {make_component({0.5, point_cloud(kTarget)}),
                                   make_component({0.2, point_cloud(kTarget)})}};
    Rng rng(9);
    const auto [cost, table] = build_cost_matrix(h, std::vector<Measurement>{}, models, rng);
    EXPECT_EQ(cost.num_measurements(), 0u);
    EXPECT_EQ(cost.num_targets(), 2u);
    EXPECT_NEAR(cost.contribution(1, 0), 0.8 + 0.2 * 0.1, 1e-15);
}

TEST(CostMatrix, IndependentOfMeasurementOrder) {
    const auto models = constant_models(0.9, 0.99, 0.1);
    const GlobalHypothesis h{1.0, {make_component({0.5, point_cloud(kTarget)})}};
    const std::vector<Measurement> z{{50.0, 0.9}, {49.5, 0.95}, {52.0, 0.93}};
    const std::vector<Measurement> zr{z[2], z[0], z[1]};
    Rng rng(10);
    const auto a = build_cost_matrix(h, z, models, rng).first;
    const auto b = build_cost_matrix(h, zr, models, rng).first;
    EXPECT_EQ(a.log_detect(0, 0), b.log_detect(0, 1));
    EXPECT_EQ(a.log_detect(0, 1), b.log_detect(0, 2));
    EXPECT_EQ(a.log_detect(0, 2), b.log_detect(0, 0));
    for (const auto& v : {a.log_detect(0, 0), a.log_detect(0, 1), a.log_detect(0, 2)}) EXPECT_TRUE(std::isfinite(v));
}

TEST(CostMatrix, WeightFactorisationMatchesDirectEvaluation) {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    const auto models = constant_models(0.9, 0.99, 0.014);
    Rng rng(12);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + trial % 3;
        const std::size_t m = trial % 4;
        std::vector<BernoulliComponent> comps;
        GlobalHypothesis h{u(gen), {}};
        for (std::size_t i = 0; i < n; ++i) {
            ParticleCloud c;
            const State centre{10.0 * static_cast<double>(i) - 10.0, 0.0, 50.0, 0.0};
            for (int p = 0; p < 25; ++p)
                c.particles.push_back({centre + State{nd(gen), 0.0, nd(gen), 0.0}, 1.0 / 25});
            comps.push_back({u(gen), c});
            h.components.push_back(make_component(comps.back()));
        }
        std::vector<Measurement> z;
        for (std::size_t j = 0; j < m; ++j) {
            const State s{10.0 * static_cast<double>(j % n) - 10.0 + nd(gen), 0.0, 50.0 + nd(gen), 0.0};
            z.push_back(measure(s));
        }
        const auto cost = build_cost_matrix(h, z, models, rng).first;
        const double c = association_clutter_intensity(models.clutter);
        for (const auto& a : exhaustive_associations(n, m)) {
            const double direct = oracle::hypothesis_weight(h.weight, comps, z, a.theta, 0.9, c, 0.25, 0.09);
            ASSERT_GT(direct, 0.0);
            const double mine = std::log(h.weight) + cost.log_weight(a);
            EXPECT_NEAR(mine, std::log(direct), 1e-12 * std::max(1.0, std::abs(std::log(direct))));
        }
    }
}

TEST(MbmUpdate, TwoHypothesisExample) {
    const auto models = constant_models(0.9, 0.99, 0.1);
    const std::vector<Measurement> z{measurement_with_likelihood(0.4, models.measurement)};
    MbmDensity prior;
    prior.hypotheses.push_back({1.0, {make_component({0.5, point_cloud(kTarget)})}});

    for (auto search : {AssociationSearch::exhaustive, AssociationSearch::gibbs}) {
        FilterParams params;
        params.search = search;
        Rng rng(13);
        auto post = mbm_update(prior, z, models, params, rng);
        ASSERT_EQ(post.hypotheses.size(), 2u);
        std::vector<double> w(2);
        for (const auto& h : post.hypotheses) w[h.components[0]->existence == 1.0 ? 0 : 1] = h.weight;
        EXPECT_NEAR(w[0], 1.8 / 2.35, 1e-12);
        EXPECT_NEAR(w[1], 0.55 / 2.35, 1e-12);
        EXPECT_NO_THROW(validate(post));
    }
}

TEST(MbmUpdate, NoMeasurementsKeepsOneHypothesisPerPrior) {
    const auto models = constant_models(0.9, 0.99, 0.1);
    MbmDensity prior;
    prior.hypotheses.push_back({0.3, {make_component({0.5, point_cloud(kTarget)}),
                                      make_component({0.2, point_cloud(kTarget)})}});
    prior.hypotheses.push_back({0.7, {make_component({0.8, point_cloud(kTarget)}),
                                      make_component({0.1, point_cloud(kTarget)})}});
    Rng rng(14);
    const auto post = mbm_update(prior, std::vector<Measurement>{}, models, FilterParams{}, rng);
    ASSERT_EQ(post.hypotheses.size(), 2u);
    auto miss = [](double r) { return 1.0 - r + r * 0.1; };
    const double a = 0.3 * miss(0.5) * miss(0.2);
    const double b = 0.7 * miss(0.8) * miss(0.1);
    EXPECT_NEAR(post.hypotheses[0].weight, a / (a + b), 1e-12);
    EXPECT_NEAR(post.hypotheses[1].weight, b / (a + b), 1e-12);
}

TEST(MbmUpdate, NoComponentsLeavesWeightsUnchanged) {
    const auto models = constant_models(0.9, 0.99, 0.1);
    MbmDensity prior;
    prior.hypotheses.push_back({0.25, {}});
    prior.hypotheses.push_back({0.75, {}});
    const std::vector<Measurement> z{{40.0, 1.0}, {60.0, 2.0}};
    Rng rng(15);
    const auto post = mbm_update(prior, z, models, FilterParams{}, rng);
    ASSERT_EQ(post.hypotheses.size(), 2u);
    EXPECT_NEAR(post.hypotheses[0].weight, 0.25, 1e-15);
    EXPECT_NEAR(post.hypotheses[1].weight, 0.75, 1e-15);

    Rng rng2(15);
    const auto single = mbm_update(empty_density(), z, models, FilterParams{}, rng2);
    ASSERT_EQ(single.hypotheses.size(), 1u);
    EXPECT_EQ(single.hypotheses[0].weight, 1.0);
}

TEST(MbmUpdate, GibbsMatchesExhaustiveWhenBudgetCoversAll) {
    // Heavy clutter keeps detect and miss contributions comparable.
    const auto models = constant_models(0.9, 0.99, 1.0);
    MbmDensity prior;
    GlobalHypothesis h{1.0, {}};
    for (int i = 0; i < 3; ++i) h.components.push_back(make_component({0.6, point_cloud(State{5.0 * i, 0, 50, 0})}));
    prior.hypotheses.push_back(h);
    std::vector<Measurement> z;
    for (int j = 0; j < 3; ++j) z.push_back(measure(State{5.0 * j + 0.3, 0, 50.2, 0}));

    FilterParams ex;
    ex.search = AssociationSearch::exhaustive;
    FilterParams gb;
    gb.max_hypotheses = 10000;
    Rng r1(16), r2(17);
    const auto a = mbm_update(prior, z, models, ex, r1);
    const auto b = mbm_update(prior, z, models, gb, r2);
    ASSERT_EQ(a.hypotheses.size(), association_count(3, 3));
    ASSERT_EQ(b.hypotheses.size(), a.hypotheses.size());
    std::vector<double> wa, wb;
    for (const auto& x : a.hypotheses) wa.push_back(x.weight);
    for (const auto& x : b.hypotheses) wb.push_back(x.weight);
    std::sort(wa.begin(), wa.end());
    std::sort(wb.begin(), wb.end());
    for (std::size_t k = 0; k < wa.size(); ++k) EXPECT_NEAR(wa[k], wb[k], 1e-12);
}

TEST(PredictComponent, SurvivalExamples) {
    Rng rng(18);
    const BernoulliComponent comp{0.4, point_cloud(kTarget)};
    EXPECT_NEAR(predict_component(comp, constant_models(0.9, 0.99, 0.1), rng).existence, 0.396, 1e-15);
    EXPECT_EQ(predict_component(comp, constant_models(0.9, 1.0, 0.1), rng).existence, 0.4);
    EXPECT_EQ(predict_component(comp, constant_models(0.9, 0.0, 0.1), rng).existence, 0.0);
}

TEST(PredictComponent, StateDependentSurvivalReweights) {
    auto models = constant_models(0.9, 0.99, 0.1);
    models.motion.accel_variances = {0.0, 0.0};
    models.probabilities.survival = [](const State& x) { return x[0] > 0.0 ? 0.8 : 0.2; };
    Rng rng(19);
    const auto out = predict_component(BernoulliComponent{1.0, two_point_cloud({10, 0, 40, 0}, {-10, 0, 40, 0}, 500)},
                                       models, rng);
    EXPECT_NEAR(out.existence, 0.5, 1e-12);
    EXPECT_NEAR(fraction_at(out.cloud, 10.0), 0.8, 1.0 / 1000);
}

TEST(MbmPredict, WeightsUntouchedAndBirthAppended) {
    auto scenario = crossing_scenario();
    MbmDensity post;
    post.hypotheses.push_back({0.6, {make_component({0.9, point_cloud(kTarget)})}});
    post.hypotheses.push_back({0.4, {make_component({0.3, point_cloud(kTarget)})}});
    Rng rng(20);
    const auto pred = mbm_predict(post, scenario.models, 50, rng);
    ASSERT_EQ(pred.hypotheses.size(), 2u);
    EXPECT_EQ(pred.hypotheses[0].weight, 0.6);
    EXPECT_EQ(pred.hypotheses[1].weight, 0.4);
    EXPECT_EQ(pred.hypotheses[0].weight + pred.hypotheses[1].weight, 1.0);
    for (const auto& h : pred.hypotheses) {
        ASSERT_EQ(h.components.size(), 1u + 5u);
        for (std::size_t b = 0; b < 5; ++b) {
            EXPECT_EQ(h.components[1 + b], pred.hypotheses[0].components[1 + b]);
            EXPECT_EQ(h.components[1 + b]->existence, scenario.models.birth.components[b].existence);
        }
    }
}

TEST(MbmPredict, DegeneratePredictionOnlyPropagates) {
    auto models = constant_models(0.9, 1.0, 0.1);
    models.motion.accel_variances = {0.0, 0.0};
    const State s{1.0, 0.5, 2.0, -0.25};
    MbmDensity post;
    post.hypotheses.push_back({1.0, {make_component({0.7, point_cloud(s, 4)})}});
    Rng rng(21);
    const auto pred = mbm_predict(post, models, 10, rng);
    ASSERT_EQ(pred.hypotheses[0].components.size(), 1u);
    const auto& c = *pred.hypotheses[0].components[0];
    EXPECT_EQ(c.existence, 0.7);
    for (const auto& p : c.cloud.particles) EXPECT_TRUE(p.state.isApprox(transition_deterministic(s, models.motion)));
}

TEST(MbmRecursion, ExistenceBoundsOverLongRun) {
    const auto scenario = crossing_scenario();
    FilterParams params;
    params.particles = 100;
    Rng data(22), rng(23);
    const auto truth = generate_truth(scenario);
    const auto scans = generate_measurements(truth, scenario, data);
    MbmTracker<Rng> tracker(scenario.models, params);
    tracker.initialize(rng);
    for (const auto& s : scans) {
        tracker.update(s.measurements, rng);
        const auto& post = tracker.density();
        double total = 0.0;
        for (const auto& h : post.hypotheses) {
            total += h.weight;
            for (const auto& c : h.components) {
                EXPECT_GE(c->existence, 0.0);
                EXPECT_LE(c->existence, 1.0);
            }
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        const MbmDensity before = tracker.density();
        tracker.predict(rng);
        ASSERT_EQ(tracker.density().hypotheses.size(), before.hypotheses.size());
        for (std::size_t h = 0; h < before.hypotheses.size(); ++h)
            ASSERT_EQ(tracker.density().hypotheses[h].weight, before.hypotheses[h].weight);
    }
}
