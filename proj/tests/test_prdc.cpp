#include <gtest/gtest.h>

#include <numeric>

#include "support/oracles.hpp"
#include "vbal/prdc.hpp"

using vbal::BoundedDensity;
using vbal::RngStream;
using vbal::SignedCombination;
using vbal::VectorSet;

namespace {

SignedCombination point(std::vector<double> v, std::uint32_t idx) {
    return SignedCombination::from_parts(std::move(v), {{idx, 1}});
}

}  // namespace

TEST(Partition, FactorAndCubeCount) {
    auto p = vbal::partition(1.0, 4096, 2);
    EXPECT_EQ(p.per_axis, 3u);
    EXPECT_DOUBLE_EQ(p.child_alpha, 1.0 / 3.0);
    EXPECT_EQ(p.cube_count, 36u);
    auto d = vbal::partition(2.0, 1, 3);
    EXPECT_EQ(d.per_axis, 1u);
    EXPECT_EQ(d.child_alpha, 2.0);
    EXPECT_EQ(vbal::partition_factor(256, 2), 2u);
    EXPECT_EQ(vbal::partition_factor(257, 2), 3u);
    EXPECT_EQ(vbal::partition_factor(100000, 1), 18u);
}

TEST(Partition, EveryPointLandsInExactlyTheCubeContainingIt) {
    RngStream rng(1, 0);
    auto p = vbal::partition(0.7, 5000, 2);
    for (int t = 0; t < 10000; ++t) {
        std::vector<double> x{rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)};
        if (t % 10 == 0) x[0] = -0.7 + p.child_alpha * static_cast<double>(rng.below(2 * p.per_axis));
        const auto id = p.index_of(x);
        ASSERT_LT(id, p.cube_count);
        const auto box = p.box(id);
        EXPECT_TRUE(box.contains(x));
        for (int a = 0; a < 2; ++a) {
            if (x[a] != 0.7) {
                EXPECT_LT(x[a], box.hi[a]);
            }  // half-open
        }
    }
}

TEST(Partition, RightBoundaryGoesToLastCube) {
    auto p = vbal::partition(1.0, 100, 1);
    EXPECT_EQ(p.index_of(std::vector<double>{1.0}), p.cube_count - 1);
    EXPECT_EQ(p.index_of(std::vector<double>{-1.0}), 0u);
    EXPECT_THROW(p.index_of(std::vector<double>{1.0 + 1e-12}), vbal::DomainError);
}

TEST(Resample, UniformKeepsEverything) {
    RngStream rng(2, 0);
    auto x = vbal::sample_instance(BoundedDensity::uniform(1.0), 2, 2000, rng);
    auto st = vbal::PhaseState::initial(x, BoundedDensity::uniform(1.0));
    auto part = vbal::partition(1.0, st.S.size(), 2);
    auto r = vbal::resample(std::move(st.S), st.g, part, rng);
    EXPECT_EQ(r.bad.size(), 0u);
    EXPECT_EQ(r.good.size(), 2000u);
}

TEST(Resample, MinimizingCornerIsAlwaysGood) {
    const auto tri = BoundedDensity::triangular(1.0);
    auto part = vbal::partition(1.0, 16, 1);  // k = 2, cells of width 0.5
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        RngStream rng(seed, 0);
        std::vector<SignedCombination> S{point({-0.5}, 0), point({0.5}, 1)};
        // cells [-0.5, 0) and [0.5, 1]: the minimum of each sits at -0.5 and at 1
        auto r = vbal::resample(std::move(S), tri, part, rng);
        EXPECT_EQ(r.labels[0].good, true);
    }
}

TEST(Resample, BadFractionWithinTheLipschitzBound) {
    // (2 Delta)^m L D^(m-1) m alpha' for the triangular density on [-1, 1]^2
    RngStream rng(3, 0);
    const auto tri = BoundedDensity::triangular(1.0);
    auto x = vbal::sample_instance(tri, 2, 100000, rng);
    auto st = vbal::PhaseState::initial(x, tri);
    auto part = vbal::partition(1.0, st.S.size(), 2);
    const double bound = 4.0 * tri.lipschitz() * tri.sup_bound() * 2.0 * part.child_alpha;
    auto r = vbal::resample(std::move(st.S), tri, part, rng);
    const double frac = static_cast<double>(r.bad.size()) / 1e5;
    EXPECT_LE(frac, bound);
    // per-axis acceptance is 1 - 1/k for the triangular law, so the expected fraction is 1 - (1 - 1/k)^2
    const double k = static_cast<double>(part.per_axis);
    EXPECT_NEAR(frac, 1.0 - (1.0 - 1.0 / k) * (1.0 - 1.0 / k), 0.01);
}

TEST(Resample, ZeroDensityPointIsImpossible) {
    RngStream rng(4, 0);
    std::vector<SignedCombination> S{point({1.0}, 0)};
    EXPECT_THROW(vbal::resample(std::move(S), BoundedDensity::triangular(1.0), vbal::partition(1.0, 1, 1), rng),
                 vbal::InvariantViolation);
}

TEST(Difference, PairGivesSignedDifference) {
    RngStream rng(5, 0);
    std::vector<SignedCombination> good{point({0.1, 0.2}, 0), point({0.3, 0.1}, 1)};
    std::vector<std::uint64_t> cubes{4, 4};
    auto d = vbal::difference(std::move(good), cubes, 2, rng);
    ASSERT_EQ(d.differences.size(), 1u);
    EXPECT_TRUE(d.leftovers.empty());
    const auto v = d.differences[0].value();
    const bool pq = std::abs(v[0] - (-0.2)) < 1e-15;
    const bool qp = std::abs(v[0] - 0.2) < 1e-15;
    EXPECT_TRUE(pq || qp);
    const auto sup = d.differences[0].support();
    ASSERT_EQ(sup.size(), 2u);
    EXPECT_EQ(sup[0].sign, 1);
    EXPECT_EQ(sup[1].sign, -1);
}

TEST(Difference, OddCubeLeavesOne) {
    RngStream rng(6, 0);
    std::vector<SignedCombination> good;
    for (std::uint32_t i = 0; i < 5; ++i) good.push_back(point({0.01 * i}, i));
    std::vector<std::uint64_t> cubes(5, 0);
    auto d = vbal::difference(std::move(good), cubes, 5, rng);
    EXPECT_EQ(d.differences.size(), 2u);
    EXPECT_EQ(d.leftovers.size(), 1u);
}

TEST(Difference, ValuesStayInsideTheChildCube) {
    RngStream rng(7, 0);
    auto x = vbal::sample_instance(BoundedDensity::uniform(1.0), 2, 20000, rng);
    auto st = vbal::PhaseState::initial(x, BoundedDensity::uniform(1.0));
    auto part = vbal::partition(1.0, st.S.size(), 2);
    auto r = vbal::resample(std::move(st.S), st.g, part, rng);
    auto d = vbal::difference(std::move(r.good), r.good_cubes, x.count(), rng);
    for (const auto& c : d.differences) {
        for (double v : c.value()) EXPECT_LT(std::abs(v), part.child_alpha);
        EXPECT_TRUE(c.consistent_with(x));
    }
}

TEST(Difference, SupportCollisionThrows) {
    RngStream rng(8, 0);
    std::vector<SignedCombination> good{point({0.1}, 3), point({0.2}, 3)};
    std::vector<std::uint64_t> cubes{0, 0};
    EXPECT_THROW(vbal::difference(std::move(good), cubes, 5, rng), vbal::InvariantViolation);
}

TEST(Cleanup, ShorteningStep) {
    RngStream rng(9, 0);
    auto v = SignedCombination::from_parts({3, 0}, {{0, 1}});
    std::vector<SignedCombination> diffs{point({1, 0}, 1)};
    // threshold gamma m child = 1 * 2 * 1.2 = 2.4: one draw takes |v| from 3 to 2
    auto r = vbal::cleanup({}, std::move(v), std::move(diffs), 1.2, 1.0, rng);
    EXPECT_EQ(r.draws, 1u);
    EXPECT_EQ(std::vector<double>(r.v.value().begin(), r.v.value().end()), (std::vector<double>{2, 0}));
    EXPECT_TRUE(r.survivors.empty());
    EXPECT_EQ(r.v.support()[1].sign, -1);
}

TEST(Cleanup, NoDrawsWhenAlreadyShort) {
    RngStream rng(10, 0);
    auto v = SignedCombination::from_parts({0.1, 0}, {{0, 1}});
    std::vector<SignedCombination> diffs{point({1, 0}, 1), point({0, 1}, 2)};
    auto r = vbal::cleanup({}, std::move(v), std::move(diffs), 1.0, 1.0, rng);
    EXPECT_EQ(r.draws, 0u);
    EXPECT_EQ(r.survivors.size(), 2u);
}

TEST(Cleanup, TieChoosesPlus) {
    std::vector<double> v{1, 0}, u{0, 1};
    EXPECT_EQ(vbal::cleanup_sign(v, u), 1);
    std::vector<double> w{1, 1};
    EXPECT_EQ(vbal::cleanup_sign(v, w), -1);
}

TEST(Cleanup, UpdateNeverExceedsTheExpansion) {
    RngStream rng(11, 0);
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> v(3), u(3);
        for (auto& a : v) a = rng.uniform(-2, 2);
        for (auto& a : u) a = rng.uniform(-1, 1);
        const int s = vbal::cleanup_sign(v, u);
        double nv = 0, nu = 0, dot = 0, nn = 0;
        for (int k = 0; k < 3; ++k) {
            nv += v[k] * v[k];
            nu += u[k] * u[k];
            dot += v[k] * u[k];
            nn += (v[k] + s * u[k]) * (v[k] + s * u[k]);
        }
        EXPECT_LE(nn, nv + nu - 2 * std::abs(dot) + 1e-12);
        if (nu <= 2 * std::abs(dot)) {
            EXPECT_LE(nn, nv + 1e-12);
        }
    }
}

TEST(Cleanup, ExhaustedBudgetReportsBestNorm) {
    RngStream rng(12, 0);
    auto v = SignedCombination::from_parts({5, 0}, {{0, 1}});
    std::vector<SignedCombination> diffs;
    for (std::uint32_t i = 1; i <= 16; ++i) diffs.push_back(point({0.1, 0}, i));
    try {
        vbal::cleanup({}, std::move(v), std::move(diffs), 0.1, 1.0, rng, 4);
        FAIL() << "expected PhaseFailure";
    } catch (const vbal::PhaseFailure& e) {
        EXPECT_EQ(e.phase(), 4);
        EXPECT_NEAR(e.best_norm(), 5.0 - 0.1 * 8, 1e-12);  // budget ceil(16^(3/4)) = 8
    }
}

TEST(Cleanup, ReduceFoldsStragglersIntoV) {
    RngStream rng(13, 0);
    std::vector<SignedCombination> strag{point({0.5, 0.5}, 1), point({0.5, -0.5}, 2), point({-0.2, 0.1}, 3)};
    auto r = vbal::cleanup(std::move(strag), SignedCombination::zero(2), {}, 10.0, 1.0, rng);
    EXPECT_EQ(r.v.support().size(), 3u);
    EXPECT_LE(r.reduce_sup_norm, 1.0);
}

TEST(RunPhase, UniformSurvivalAndInvariants) {
    RngStream rng(14, 0);
    const auto rho = BoundedDensity::uniform(1.0);
    auto x = vbal::sample_instance(rho, 2, 100000, rng);
    auto st = vbal::PhaseState::initial(x, rho);
    const double gamma = vbal::default_gamma(vbal::cached_khintchine(2));
    auto [next, diag] = vbal::run_phase(st, gamma, x.count(), RngStream(14, 1), true);
    EXPECT_GE(static_cast<double>(next.S.size()), 0.3 * 100000);
    EXPECT_EQ(diag.n_good + diag.n_bad, diag.n_in);
    EXPECT_EQ(diag.n_differences, (diag.n_good - diag.n_leftover) / 2);
    ASSERT_TRUE(diag.configuration);
    EXPECT_EQ(diag.configuration->size(), diag.n_in);
    EXPECT_EQ(next.phase, 2);
    EXPECT_DOUBLE_EQ(next.alpha, diag.child_alpha);
    EXPECT_NO_THROW(vbal::check_phase_state(next, x, gamma, true));
}

TEST(RunPhase, DeterministicForAFixedStream) {
    RngStream rng(15, 0);
    const auto rho = BoundedDensity::uniform(1.0);
    auto x = vbal::sample_instance(rho, 1, 5000, rng);
    auto a = vbal::run_phase(vbal::PhaseState::initial(x, rho), 6.0, x.count(), RngStream(1, 2));
    auto b = vbal::run_phase(vbal::PhaseState::initial(x, rho), 6.0, x.count(), RngStream(1, 2));
    ASSERT_EQ(a.first.S.size(), b.first.S.size());
    for (std::size_t i = 0; i < a.first.S.size(); ++i) EXPECT_EQ(a.first.S[i].value()[0], b.first.S[i].value()[0]);
}

TEST(RunPhase, LaterPhasesAreTriangular) {
    RngStream rng(16, 0);
    const auto rho = BoundedDensity::uniform(1.0);
    auto x = vbal::sample_instance(rho, 2, 30000, rng);
    auto [s2, d1] = vbal::run_phase(vbal::PhaseState::initial(x, rho), 6.0, x.count(), RngStream(16, 1));
    std::vector<double> pooled;
    for (const auto& c : s2.S) {
        for (double v : c.value()) pooled.push_back(v);
        if (pooled.size() >= 10000) break;
    }
    ASSERT_GE(pooled.size(), 10000u);
    const double a = s2.alpha;
    EXPECT_GT(oracle::ks_one_sample(pooled, [a](double t) { return oracle::triangular_cdf(t, a); }).p_value, 0.001);

    auto [s3, d2] = vbal::run_phase(s2, 6.0, x.count(), RngStream(16, 2));
    pooled.clear();
    for (const auto& c : s3.S) {
        for (double v : c.value()) pooled.push_back(v);
    }
    const double a3 = s3.alpha;
    EXPECT_GT(oracle::ks_one_sample(pooled, [a3](double t) { return oracle::triangular_cdf(t, a3); }).p_value, 0.001);
}

TEST(Khintchine, EstimateIsStableAndBelowTheOneDimensionalValue) {
    // E|u| = 1/3 for u triangular on [-1, 1]
    const double c1 = vbal::khintchine_estimate(1);
    EXPECT_NEAR(c1, 1.0 / 3.0, 0.01);
    EXPECT_LT(c1, 1.0 / 3.0);
    const double c2 = vbal::cached_khintchine(2);
    EXPECT_GT(c2, 0.25);
    EXPECT_LT(c2, 1.0 / 3.0);
    EXPECT_EQ(c2, vbal::cached_khintchine(2));
    EXPECT_GE(vbal::default_gamma(c2), 2.0 / c2);
}
