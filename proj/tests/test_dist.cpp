#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "support/oracles.hpp"
#include "vbal/density.hpp"
#include "vbal/rng.hpp"

using vbal::BoundedDensity;
using vbal::RngStream;

TEST(Philox, KnownAnswers) {
    auto z = vbal::philox4x32_10({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(z, (std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    auto f = vbal::philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(f, (std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    auto p = vbal::philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(p, (std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdcceb, 0x5001e420u, 0x24126ea1u}));
}

TEST(RngStream, ReplayAndRandomAccessAgree) {
    RngStream a(42, 3), b(42, 3);
    for (std::uint64_t i = 0; i < 9; ++i) {
        const auto v = a.next_u64();
        EXPECT_EQ(v, b.at(i));
    }
    EXPECT_EQ(a.draws(), 9u);
}

TEST(RngStream, DistinctStreamsLookIndependent) {
    RngStream a(42, 0), b(42, 1);
    const int n = 100000;
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (int i = 0; i < n; ++i) {
        const double x = a.uniform() - 0.5, y = b.uniform() - 0.5;
        sa += x;
        sb += y;
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    const double corr = (sab / n - sa / n * sb / n) / std::sqrt((saa / n) * (sbb / n));
    EXPECT_LT(std::abs(corr), 4.0 / std::sqrt(n));
    EXPECT_NE(RngStream(1, 0).derive(5).stream_id(), RngStream(1, 0).derive(6).stream_id());
    EXPECT_EQ(RngStream(1, 9).derive({2, 3}).stream_id(), RngStream(1, 9).derive(2).derive(3).stream_id());
}

TEST(RngStream, BelowIsUniform) {
    RngStream rng(8, 8);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
    for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(SampleInstance, UniformSupportAndReplay) {
    const auto rho = BoundedDensity::uniform(1.0);
    RngStream r1(5, 0), r2(5, 0);
    auto x = vbal::sample_instance(rho, 2, 3, r1);
    auto y = vbal::sample_instance(rho, 2, 3, r2);
    EXPECT_EQ(r1.draws(), 6u);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_LE(std::abs(x.data()[i]), 1.0);
        EXPECT_EQ(x.data()[i], y.data()[i]);
    }
}

TEST(SampleInstance, DrawCountsAreDocumented) {
    RngStream tri(1, 0), tab(1, 1);
    vbal::sample_instance(BoundedDensity::triangular(1.0), 3, 5, tri);
    EXPECT_EQ(tri.draws(), 30u);
    vbal::sample_instance(BoundedDensity::tabulated({-1, 0, 1}, {0, 1, 0}), 3, 5, tab);
    EXPECT_EQ(tab.draws(), 15u);
    RngStream g(1, 2);
    std::uint64_t rejections = 0;
    vbal::sample_instance(BoundedDensity::truncated_gaussian(1.0), 1, 1000, g, &rejections);
    EXPECT_EQ(g.draws(), 2 * (1000 + rejections));
}

TEST(SampleInstance, TriangularMeanWithinCltBand) {
    RngStream rng(77, 0);
    auto x = vbal::sample_instance(BoundedDensity::triangular(1.0), 1, 100000, rng);
    double mean = 0.0;
    for (double v : x.data()) mean += v;
    mean /= 1e5;
    EXPECT_LT(std::abs(mean), 3.0 * (1.0 / std::sqrt(6.0)) / std::sqrt(1e5));
}

TEST(TruncatedGaussian, StaysInside) {
    RngStream rng(3, 0);
    auto t = vbal::truncate_gaussian(4, 5000, 3.0, rng);
    EXPECT_LE(t.instance.max_abs_entry(), 3.0);
    EXPECT_GT(t.rejections, 0u);
}

TEST(TruncatedGaussian, WideTruncationNeverRejects) {
    RngStream rng(3, 1);
    EXPECT_EQ(vbal::truncate_gaussian(10, 10, 10.0, rng).rejections, 0u);
}

TEST(TruncatedGaussian, NarrowAcceptanceRateMatchesQuadrature) {
    RngStream rng(3, 2);
    auto t = vbal::truncate_gaussian(1, 200, 0.01, rng);
    const double attempts = 200.0 + static_cast<double>(t.rejections);
    const double rate = 200.0 / attempts;
    const double p = oracle::gauss_interval_quad(0.01);
    EXPECT_NEAR(rate / p, 1.0, 0.1 + 3.0 / std::sqrt(200.0));
    EXPECT_GT(attempts, 1e4);
}

TEST(ProductDensity, Examples) {
    std::vector<double> x{0.3, -0.9, 1.0};
    EXPECT_DOUBLE_EQ(vbal::product_density_eval(BoundedDensity::uniform(1.0), x), 0.125);
    std::vector<double> zero{0.0, 0.0};
    EXPECT_DOUBLE_EQ(vbal::product_density_eval(BoundedDensity::triangular(1.0), zero), 1.0);
    std::vector<double> out{1.5};
    EXPECT_THROW(vbal::product_density_eval(BoundedDensity::uniform(1.0), out), vbal::DomainError);
}

TEST(ProductDensity, L1LipschitzWithLTimesDToTheMMinusOne) {
    RngStream rng(12, 0);
    for (const auto& rho : {BoundedDensity::triangular(1.0), BoundedDensity::truncated_gaussian(2.0),
                            BoundedDensity::uniform(1.5)}) {
        const std::size_t m = 3;
        const double lp = rho.lipschitz() * std::pow(rho.sup_bound(), static_cast<double>(m - 1));
        for (int t = 0; t < 1000; ++t) {
            std::vector<double> a(m), b(m);
            double l1 = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                a[k] = rng.uniform(-rho.half_width(), rho.half_width());
                b[k] = rng.uniform(-rho.half_width(), rho.half_width());
                l1 += std::abs(a[k] - b[k]);
            }
            EXPECT_LE(std::abs(vbal::product_density_eval(rho, a) - vbal::product_density_eval(rho, b)),
                      lp * l1 * (1 + 1e-12) + 1e-15);
        }
    }
}

TEST(SubcubeMin, Examples) {
    const auto u = BoundedDensity::uniform(2.0);
    EXPECT_DOUBLE_EQ(vbal::subcube_density_min(u, {{-1, 0}, {0.5, 2}}), 1.0 / 16.0);
    const auto tri = BoundedDensity::triangular(1.0);
    EXPECT_DOUBLE_EQ(vbal::subcube_density_min(tri, {{0.5}, {0.75}}), 0.25);
    EXPECT_DOUBLE_EQ(vbal::subcube_density_min(tri, {{0.5, -0.25}, {0.75, 0.0}}), 0.1875);
}

TEST(SubcubeMin, BelowEveryInteriorPoint) {
    RngStream rng(2, 2);
    const std::vector<BoundedDensity> kinds{BoundedDensity::uniform(1.0), BoundedDensity::triangular(1.0),
                                            BoundedDensity::truncated_gaussian(1.5),
                                            BoundedDensity::tabulated({-1, -0.5, 0, 0.5, 1}, {0.2, 1, 0.3, 0.8, 0})};
    for (const auto& rho : kinds) {
        for (int c = 0; c < 20; ++c) {
            vbal::Box box;
            for (int k = 0; k < 2; ++k) {
                double a = rng.uniform(-rho.half_width(), rho.half_width());
                double b = rng.uniform(-rho.half_width(), rho.half_width());
                box.lo.push_back(std::min(a, b));
                box.hi.push_back(std::max(a, b));
            }
            const double lo = vbal::subcube_density_min(rho, box);
            for (int t = 0; t < 50; ++t) {
                std::vector<double> x{rng.uniform(box.lo[0], box.hi[0]), rng.uniform(box.lo[1], box.hi[1])};
                EXPECT_LE(lo, vbal::product_density_eval(rho, x) * (1 + 1e-12));
            }
        }
    }
}

TEST(Densities, NormalizedBoundedAndLipschitzOnGrid) {
    const std::vector<BoundedDensity> kinds{BoundedDensity::uniform(1.0), BoundedDensity::triangular(2.0),
                                            BoundedDensity::truncated_gaussian(3.0, 1.3),
                                            BoundedDensity::tabulated({-2, -1, 0, 1, 2}, {0, 2, 1, 3, 1})};
    for (const auto& rho : kinds) {
        const int n = 10000;
        const double a = rho.half_width();
        const double h = 2 * a / n;
        double mass = 0.0, prev = rho.pdf(-a);
        for (int i = 1; i <= n; ++i) {
            const double x = -a + h * i;
            const double y = rho.pdf(x);
            mass += 0.5 * h * (y + prev);
            EXPECT_LE(y, rho.sup_bound() * (1 + 1e-12));
            EXPECT_LE(std::abs(y - prev), rho.lipschitz() * h * (1 + 1e-9) + 1e-12);
            prev = y;
        }
        EXPECT_NEAR(mass, 1.0, 1e-6) << vbal::to_string(rho.kind());
        double s = 0.0;
        const int k = 20000;
        const double lo = -0.2 * a, hh = 0.5 * a / k;
        for (int i = 0; i < k; ++i) s += hh * rho.pdf(lo + hh * (i + 0.5));
        EXPECT_NEAR(rho.cdf(0.3 * a) - rho.cdf(-0.2 * a), s, 1e-6);
    }
}

TEST(Triangular, MatchesDifferenceOfUniforms) {
    const double r = 1.0;
    RngStream rng(31, 0), ref(31, 1);
    const auto tri = BoundedDensity::triangular(r);
    for (int coord = 0; coord < 2; ++coord) {
        std::vector<double> a(100000), b(100000);
        for (auto& v : a) v = tri.sample(rng);
        for (auto& v : b) v = ref.uniform(0.0, r) - ref.uniform(0.0, r);
        EXPECT_GT(oracle::ks_two_sample(a, b).p_value, 0.001);
    }
}

TEST(Tabulated, SamplesFollowTheTable) {
    const auto rho = BoundedDensity::tabulated({-1, -0.5, 0, 0.5, 1}, {0.2, 1, 0.3, 0.8, 0});
    RngStream rng(6, 0);
    std::vector<double> xs(50000);
    for (auto& v : xs) v = rho.sample(rng);
    EXPECT_GT(oracle::ks_one_sample(xs, [&](double x) { return rho.cdf(x); }).p_value, 0.001);
    EXPECT_DOUBLE_EQ(rho.min_on_interval(-0.75, 0.25), rho.pdf(0.0));
    EXPECT_THROW(BoundedDensity::tabulated({-1, 0.2, 1}, {1, 1, 1}), vbal::ValidationError);
    EXPECT_THROW(BoundedDensity::tabulated({-1, 0, 1}, {1, -1, 1}), vbal::ValidationError);
}

TEST(DensitySpec, Parses) {
    EXPECT_EQ(vbal::parse_density_spec("uniform:2").half_width(), 2.0);
    EXPECT_EQ(vbal::parse_density_spec("triangular").kind(), vbal::DensityKind::triangular);
    auto g = vbal::parse_density_spec("gaussian", 1000);
    EXPECT_DOUBLE_EQ(g.half_width(), 3.0 * std::sqrt(std::log(1000.0)));
    EXPECT_DOUBLE_EQ(vbal::parse_density_spec("gaussian", 2).half_width(), 3.0);
    EXPECT_EQ(vbal::parse_density_spec("gaussian:4:2").sigma(), 2.0);
    EXPECT_THROW(vbal::parse_density_spec("cauchy"), vbal::ValidationError);
    EXPECT_THROW(vbal::parse_density_spec("uniform:-1"), vbal::DomainError);

    const auto path = std::filesystem::temp_directory_path() / "vbal_table_test.csv";
    {
        std::ofstream out(path);
        out << "# x,density\n-1,0\n0,1\n1,0\n";
    }
    auto t = vbal::parse_density_spec("tabulated:" + path.string());
    EXPECT_EQ(t.kind(), vbal::DensityKind::tabulated);
    EXPECT_DOUBLE_EQ(t.pdf(0.0), 1.0);
    std::filesystem::remove(path);
}
