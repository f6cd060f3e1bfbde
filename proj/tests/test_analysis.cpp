#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "caplab/analysis.hpp"

using namespace caplab;

namespace {

const ModelParams fig1{1.0, 100.0, 0.001, 0.2, 0.09};
const ModelParams fig2{1.0, 100.0, 0.1, 0.2, 0.001};

Trajectory recorded(std::vector<double> t, std::vector<double> v, double u = 1.0)
{
    Trajectory traj;
    traj.times = std::move(t);
    for (double x : v) traj.states.push_back({u, x});
    traj.clamped.assign(traj.times.size(), false);
    return traj;
}

std::vector<double> grid(std::size_t n, double dt)
{
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = static_cast<double>(k) * dt;
    return t;
}

} // namespace

TEST(TimeAverage, ExactOnConstantAndLinear)
{
    const auto t = grid(11, 0.5);
    EXPECT_DOUBLE_EQ(time_average(recorded(t, std::vector<double>(11, 3.25)), Component::V), 3.25);
    EXPECT_DOUBLE_EQ(time_average(recorded(t, t), Component::V), 2.5);
    EXPECT_DOUBLE_EQ(time_average(recorded(t, t, 7.0), Component::U), 7.0);
}

TEST(TimeAverage, AffineOnUnevenGrid)
{
    const std::vector<double> t{0.0, 0.1, 0.7, 1.5, 4.0};
    std::vector<double> x;
    for (double s : t) x.push_back(2.0 - 0.5 * s);
    EXPECT_NEAR(time_average(recorded(t, x), Component::V), 2.0 - 0.5 * 2.0, 1e-15);
}

TEST(TimeAverage, RejectsSinglePoint)
{
    EXPECT_THROW(time_average(recorded({0.0}, {1.0}), Component::V), ConfigError);
}

TEST(TimeAverage, IgnoresRecordStride)
{
    const auto path = generate(4, 0, 0.01, 5000);
    const auto full = simulate(Scheme::Milstein, fig2, {50, 10}, 50.0, 0.01, &path);
    const auto thin = simulate(Scheme::Milstein, fig2, {50, 10}, 50.0, 0.01, &path, {100});
    EXPECT_EQ(time_average(full, Component::V), time_average(thin, Component::V));

    // With every step recorded the accumulator and the recorded points agree.
    Trajectory copy = full;
    copy.running_integral.reset();
    EXPECT_NEAR(time_average(copy, Component::V), time_average(full, Component::V), 1e-12);
}

TEST(DetectExtinction, Basics)
{
    const auto t = grid(101, 1.0);
    const auto zero = detect_extinction(recorded(t, std::vector<double>(101, 0.0)), 1e-2, 10.0);
    ASSERT_TRUE(zero.time);
    EXPECT_EQ(*zero.time, 0.0);

    const auto high = detect_extinction(recorded(t, std::vector<double>(101, 5.0)), 1e-2, 10.0);
    EXPECT_FALSE(high.time);
    EXPECT_FALSE(high.insufficient_horizon);

    const auto too_long = detect_extinction(recorded(t, std::vector<double>(101, 0.0)), 1e-2, 200.0);
    EXPECT_FALSE(too_long.time);
    EXPECT_TRUE(too_long.insufficient_horizon);

    EXPECT_THROW(detect_extinction(recorded(t, t), 0.0, 1.0), ConfigError);
    EXPECT_THROW(detect_extinction(recorded(t, t), 1.0, 0.0), ConfigError);
}

TEST(DetectExtinction, EarliestSustainedDip)
{
    // Brief dip at t = 10..12, sustained from t = 40 on.
    const auto t = grid(101, 1.0);
    std::vector<double> v(101, 1.0);
    for (int k = 10; k <= 12; ++k) v[k] = 0.0;
    for (int k = 40; k <= 100; ++k) v[k] = 0.001;
    const auto r = detect_extinction(recorded(t, v), 1e-2, 5.0);
    ASSERT_TRUE(r.time);
    EXPECT_EQ(*r.time, 40.0);

    const auto shortw = detect_extinction(recorded(t, v), 1e-2, 2.0);
    ASSERT_TRUE(shortw.time);
    EXPECT_EQ(*shortw.time, 10.0);

    // The window must fit before the end of the record.
    for (int k = 40; k < 97; ++k) v[k] = 1.0;
    EXPECT_FALSE(detect_extinction(recorded(t, v), 1e-2, 5.0).time);
}

TEST(DetectExtinction, Figure1PathsDie)
{
    int found = 0;
    for (std::uint64_t i = 0; i < 10; ++i) {
        const auto path = generate(20240101, i, 0.01, 50000);
        const auto traj = simulate(Scheme::Milstein, fig1, {50, 10}, 500.0, 0.01, &path, {10});
        const auto r = detect_extinction(traj, 1e-2, 50.0);
        if (r.time && *r.time < 500.0) ++found;
    }
    EXPECT_EQ(found, 10);
}

TEST(Quantiles, NearestRank)
{
    const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    EXPECT_EQ(nearest_rank(x, 0.05), 1.0);
    EXPECT_EQ(nearest_rank(x, 0.5), 5.0);
    EXPECT_EQ(nearest_rank(x, 0.95), 10.0);
    const std::vector<double> one{4.0};
    EXPECT_EQ(nearest_rank(one, 0.05), 4.0);
    EXPECT_EQ(nearest_rank(one, 0.95), 4.0);
}

TEST(Ensemble, SinglePathIsDegenerate)
{
    const auto stats = ensemble(fig2, Scheme::Milstein, {50, 10}, 10.0, 0.01, 1, 99);
    const auto path = generate(99, 0, 0.01, 1000);
    const auto traj = simulate(Scheme::Milstein, fig2, {50, 10}, 10.0, 0.01, &path);
    ASSERT_EQ(stats.times.size(), traj.times.size());
    for (std::size_t k = 0; k < stats.times.size(); ++k) {
        EXPECT_EQ(stats.u.mean[k], traj.states[k].u);
        EXPECT_EQ(stats.v.mean[k], traj.states[k].v);
        EXPECT_EQ(stats.u.stddev[k], 0.0);
        EXPECT_EQ(stats.v.q05[k], traj.states[k].v);
        EXPECT_EQ(stats.v.q95[k], traj.states[k].v);
    }
}

TEST(Ensemble, NoNoiseMeansNoSpread)
{
    const auto stats = ensemble(fig2.with_sigma(0.0), Scheme::EulerMaruyama, {50, 10}, 5.0, 0.01, 8, 1);
    for (std::size_t k = 0; k < stats.times.size(); ++k) {
        EXPECT_EQ(stats.u.stddev[k], 0.0);
        EXPECT_EQ(stats.v.stddev[k], 0.0);
    }
}

TEST(Ensemble, QuantilesAreOrdered)
{
    const auto stats = ensemble(fig1, Scheme::Milstein, {50, 10}, 5.0, 0.01, 40, 5, {1, 2});
    EXPECT_EQ(stats.n_paths, 40u);
    for (const Moments* m : {&stats.u, &stats.v})
        for (std::size_t k = 0; k < stats.times.size(); ++k) {
            EXPECT_LE(m->q05[k], m->q50[k]);
            EXPECT_LE(m->q50[k], m->q95[k]);
        }
}

TEST(Ensemble, IndependentOfWorkerCount)
{
    const auto a = ensemble(fig1, Scheme::Milstein, {50, 10}, 20.0, 0.01, 24, 7, {3, 1});
    const auto b = ensemble(fig1, Scheme::Milstein, {50, 10}, 20.0, 0.01, 24, 7, {3, 5});
    EXPECT_EQ(a.times, b.times);
    EXPECT_EQ(a.u.mean, b.u.mean);
    EXPECT_EQ(a.v.stddev, b.v.stddev);
    EXPECT_EQ(a.v.q50, b.v.q50);
    for (std::size_t i = 0; i < a.paths.size(); ++i) EXPECT_EQ(a.paths[i].terminal, b.paths[i].terminal);
}

TEST(Ensemble, Errors)
{
    EXPECT_THROW(ensemble(fig1, Scheme::Milstein, {50, 10}, 1.0, 0.01, 0, 1), ConfigError);
    // Far too coarse a step: the deterministic solver overshoots below zero.
    try {
        ensemble(fig2, Scheme::RK4Deterministic, {50, 200}, 10.0, 5.0, 3, 1);
        FAIL() << "expected a numerical failure";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("path_index 0"), std::string::npos);
    }
}

TEST(FitLine, ExactLine)
{
    const std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
    const auto [slope, residual] = fit_line(x, y);
    EXPECT_DOUBLE_EQ(slope, 2.0);
    EXPECT_NEAR(residual, 0.0, 1e-15);
}

TEST(StrongOrder, DeterministicEulerIsFirstOrder)
{
    const auto rep = strong_order(fig2.with_sigma(0.0), Scheme::EulerMaruyama, {50, 10}, 1.0, 1.0 / 16384, 5, 4,
                                  1, {4, 2});
    EXPECT_NEAR(rep.slope, 1.0, 0.15);
    EXPECT_LT(rep.residual, 0.3);
    ASSERT_EQ(rep.levels.size(), 5u);
    EXPECT_EQ(rep.levels.front().level, 4);
    EXPECT_DOUBLE_EQ(rep.levels.front().dt, 1.0 / 1024);
    EXPECT_DOUBLE_EQ(rep.levels.back().dt, 1.0 / 64);
}

TEST(StrongOrder, MilsteinFirstOrderOnFigure2)
{
    const auto rep = strong_order(fig2, Scheme::Milstein, {50, 10}, 1.0, 1.0 / 16384, 5, 50, 3, {4, 0});
    EXPECT_NEAR(rep.slope, 1.0, 0.2);
    EXPECT_LT(rep.residual, 0.3);
}

// With noise large enough to dominate the drift error, Euler-Maruyama shows
// its strong order of one half and Milstein stays at one.
TEST(StrongOrder, NoiseDominatedRegime)
{
    const ModelParams p = fig2.with_sigma(0.05);
    const auto em = strong_order(p, Scheme::EulerMaruyama, {2.0, 9.8}, 1.0, 1.0 / 16384, 5, 100, 3, {4, 0});
    const auto mil = strong_order(p, Scheme::Milstein, {2.0, 9.8}, 1.0, 1.0 / 16384, 5, 100, 3, {4, 0});
    EXPECT_NEAR(em.slope, 0.5, 0.15);
    EXPECT_NEAR(mil.slope, 1.0, 0.2);
    EXPECT_LT(em.residual, 0.3);
    EXPECT_LT(mil.residual, 0.3);
}

TEST(StrongOrder, Errors)
{
    EXPECT_THROW(strong_order(fig2, Scheme::Milstein, {50, 10}, 1.0, 1.0 / 1024, 2, 4, 1), ConfigError);
    // 1000 steps are not divisible by 2^4.
    EXPECT_THROW(strong_order(fig2, Scheme::Milstein, {50, 10}, 1.0, 1e-3, 4, 4, 1, {1, 1}), ConfigError);
    EXPECT_THROW(strong_order(fig2, Scheme::Milstein, {50, 10}, 1.0, 1.0 / 1024, 5, 0, 1), ConfigError);
}

TEST(RegimeMap, TablePointsAndErrorCell)
{
    SweepConfig cfg;
    cfg.n_paths = 20;
    cfg.horizon = 200.0;
    cfg.record_stride = 100;
    cfg.workers = 0;

    const std::vector<double> m1{0.001}, s1{0.09};
    const auto c1 = regime_map(fig1, m1, s1, cfg);
    ASSERT_EQ(c1.size(), 1u);
    EXPECT_EQ(c1[0].predicted, Regime::Extinction);
    EXPECT_EQ(c1[0].observed, Observed::VExtinct);

    const std::vector<double> m2{0.1}, s2{0.001};
    const auto c2 = regime_map(fig1, m2, s2, cfg);
    EXPECT_EQ(c2[0].predicted, Regime::Persistence);
    EXPECT_EQ(c2[0].observed, Observed::VPersists);
    EXPECT_GT(c2[0].v_time_avg, 2.65);

    const std::vector<double> s0{0.0};
    const auto c0 = regime_map(fig1, m1, s0, cfg);
    ASSERT_EQ(c0.size(), 1u);
    EXPECT_TRUE(c0[0].error);
    EXPECT_FALSE(c0[0].predicted);

    const std::vector<double> none;
    EXPECT_THROW(regime_map(fig1, none, s1, cfg), ConfigError);
}

TEST(RegimeMap, PredictedExtinctionIsObserved)
{
    SweepConfig cfg;
    cfg.n_paths = 100;
    cfg.horizon = 500.0;
    cfg.dt = 0.01;
    cfg.record_stride = 1000;
    cfg.workers = 0;
    const std::vector<double> m{0.001, 0.01}, s{0.05, 0.09};
    for (const auto& cell : regime_map(fig1, m, s, cfg)) {
        ASSERT_FALSE(cell.error);
        ASSERT_EQ(cell.predicted, Regime::Extinction) << "m=" << cell.m << " sigma=" << cell.sigma;
        EXPECT_EQ(cell.observed, Observed::VExtinct) << "m=" << cell.m << " sigma=" << cell.sigma;
    }
}

TEST(PersistenceThreshold, HalfTheFloorOrDefault)
{
    EXPECT_NEAR(persistence_threshold(fig2), 1.325, 1e-12);
    EXPECT_EQ(persistence_threshold(fig1), 0.1);
}
