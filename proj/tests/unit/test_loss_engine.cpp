#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include <dic/errors.hpp>
#include <dic/loss_engine.hpp>
#include <dic/normal.hpp>
#include <dic/parallel.hpp>
#include <dic/rng.hpp>

#include "oracles.hpp"
#include "worlds.hpp"

using namespace dic;

namespace {

FactorDraw random_draw(const PortfolioSlice& slice, std::uint64_t path) {
    FactorSampler sampler(slice.copula(), slice.laws());
    PathRng rng(11, Stream::Pricing, 0, path);
    FactorDraw d;
    sampler.draw(rng, d);
    return d;
}

// per-name conditional pd and payout loss amount
void name_losses(const PortfolioSlice& slice, const FactorDraw& d, std::vector<double>& pd, std::vector<double>& loss) {
    pd.clear();
    loss.clear();
    for (const auto& n : slice.names()) {
        pd.push_back(n.conditional_pd(d));
        loss.push_back(n.weight * n.payout_lgd(d));
    }
}

} // namespace

TEST(ConditionalMoments, ZeroHazardGivesZero) {
    dic::CurveSet curves;
    std::map<std::string, LinkageSpec> specs;
    std::vector<Constituent> names;
    for (int j = 0; j < 3; ++j) {
        const std::string id = "Z" + std::to_string(j);
        curves.emplace(id, CreditCurve::flat_hazard(id, 0.0, {1.0, 5.0, 10.0}));
        specs.emplace(id, LinkageSpec(id, {{"A", 1.0}}, 0.5));
        names.push_back({id, 1.0, RecoverySpec::deterministic(0.4), std::nullopt});
    }
    const Portfolio portfolio(std::move(names));
    const Model model({synthetic::gamma_law("A", {5.0, 7.0}, 1.0)}, FactorCopula::independent({"A"}), specs, curves);
    const PortfolioSlice slice(portfolio, model, 5.0);
    for (std::uint64_t p = 0; p < 20; ++p) {
        const auto m = conditional_moments(slice, random_draw(slice, p));
        EXPECT_EQ(m.mean, 0.0);
        EXPECT_EQ(m.variance, 0.0);
    }
}

TEST(ConditionalMoments, SingleNameIsBernoulli) {
    auto w = worlds::one_factor(1);
    Portfolio p({{"W0", 1.0, RecoverySpec::deterministic(0.0), std::nullopt}});
    const PortfolioSlice slice(p, w.model, 5.0);
    for (std::uint64_t path = 0; path < 20; ++path) {
        const auto d = random_draw(slice, path);
        const double q = slice.names()[0].conditional_pd(d);
        const auto m = conditional_moments(slice, d);
        EXPECT_DOUBLE_EQ(m.mean, q);
        EXPECT_NEAR(m.variance, q * (1.0 - q), 1e-16);
    }
}

TEST(ConditionalMoments, MatchEnumerationOfDefaultPatterns) {
    auto w = worlds::two_factor(5, 0.4, worlds::Loading::Mixed);
    const PortfolioSlice slice(w.portfolio, w.model, 7.0);
    std::vector<double> pd, loss;
    for (std::uint64_t path = 0; path < 50; ++path) {
        const auto d = random_draw(slice, path);
        name_losses(slice, d, pd, loss);
        const auto [mean, var] = dic::testing::enumerated_moments(pd, loss);
        const auto m = conditional_moments(slice, d);
        EXPECT_NEAR(m.mean, mean, 1e-15);
        EXPECT_NEAR(m.variance, var, 1e-15);
    }
}

TEST(ConditionalMoments, OverrideChangesPayoutNotProbability) {
    auto w = worlds::two_factor(6, 0.3);
    const auto overridden = w.portfolio.with_recovery_override(0.9);
    const PortfolioSlice a(w.portfolio, w.model, 5.0), b(overridden, w.model, 5.0);
    const auto d = random_draw(a, 3);
    double mean = 0.0;
    for (std::size_t j = 0; j < a.names().size(); ++j) {
        EXPECT_EQ(a.names()[j].conditional_pd(d), b.names()[j].conditional_pd(d));
        mean += a.names()[j].weight * 0.1 * a.names()[j].conditional_pd(d);
    }
    EXPECT_NEAR(conditional_moments(b, d).mean, mean, 1e-15);
}

TEST(NormalEtl, Examples) {
    EXPECT_EQ(normal_etl({0.03, 0.0}, 0.0, 0.03), 1.0);
    EXPECT_EQ(normal_etl({0.01, 0.0}, 0.03, 0.07), 0.0);
    EXPECT_NEAR(normal_etl({0.05, 0.0}, 0.03, 0.07), 0.5, 1e-15);
    for (double s : {0.001, 0.02, 0.1})
        EXPECT_NEAR(expected_call(0.2, s, 0.2), s * kInvSqrt2Pi, 1e-16);
}

TEST(NormalEtl, MatchesDirectNormalSampling) {
    const double mu = 0.05, sd = 0.02, a = 0.03, d = 0.07;
    PathRng rng(3, Stream::Pricing, 1, 0);
    MomentAccumulator acc;
    for (int i = 0; i < 10000000; ++i) {
        const double l = mu + sd * rng.normal();
        acc.add(std::clamp(l - a, 0.0, d - a) / (d - a));
    }
    EXPECT_LT(std::abs(normal_etl({mu, sd * sd}, a, d) - acc.mean), 3.0 * acc.stderr_of_mean());
}

TEST(NormalEtl, PartitionAddsUpToMean) {
    PathRng rng(8, Stream::Pricing, 2, 0);
    for (int trial = 0; trial < 200; ++trial) {
        // moments where no tranche clamps: mean well inside (0,1)
        const ConditionalMoments m{0.05 + 0.4 * rng.uniform(), std::pow(0.01 + 0.1 * rng.uniform(), 2)};
        std::vector<double> points = {0.0};
        while (points.back() < 1.0)
            points.push_back(std::min(1.0, points.back() + 0.02 + 0.2 * rng.uniform()));
        double sum = 0.0;
        for (std::size_t k = 0; k + 1 < points.size(); ++k)
            sum += (points[k + 1] - points[k]) * normal_etl(m, points[k], points[k + 1]);
        ASSERT_NEAR(sum, m.mean, 1e-12);
    }
}

TEST(NormalEtl, MonotoneProperties) {
    PathRng rng(9, Stream::Pricing, 3, 0);
    for (int trial = 0; trial < 500; ++trial) {
        const double sd = 0.001 + 0.1 * rng.uniform();
        const double mu = 0.3 * rng.uniform();
        const double a = 0.2 * rng.uniform(), w = 0.01 + 0.2 * rng.uniform();
        const double base = normal_etl({mu, sd * sd}, a, a + w);
        ASSERT_GE(base, 0.0);
        ASSERT_LE(base, 1.0);
        ASSERT_GE(normal_etl({mu + 0.01, sd * sd}, a, a + w), base);
        // the adjacent detach-ward tranche of equal width
        if (a + 2 * w <= 1.0)
            ASSERT_LE(normal_etl({mu, sd * sd}, a + w, a + 2 * w), base + 1e-15);
    }
}

TEST(NormalEtl, SensitivityMatchesFiniteDifference) {
    for (const ConditionalMoments m : {ConditionalMoments{0.04, 4e-4}, ConditionalMoments{0.12, 1e-3},
                                       ConditionalMoments{0.01, 1e-5}}) {
        for (auto [a, d] : {std::pair{0.0, 0.03}, std::pair{0.03, 0.07}, std::pair{0.1, 0.15}}) {
            const auto s = normal_etl_sensitivity(m, a, d);
            EXPECT_DOUBLE_EQ(s.etl, normal_etl(m, a, d));
            const double hm = 1e-6, hv = 1e-8;
            const double dm = (normal_etl({m.mean + hm, m.variance}, a, d) - normal_etl({m.mean - hm, m.variance}, a, d)) /
                              (2 * hm);
            const double dv = (normal_etl({m.mean, m.variance + hv}, a, d) - normal_etl({m.mean, m.variance - hv}, a, d)) /
                              (2 * hv);
            EXPECT_NEAR(s.d_mean, dm, 1e-6 * std::max(1.0, std::abs(dm)));
            EXPECT_NEAR(s.d_variance, dv, 1e-4 * std::max(1.0, std::abs(dv)));
        }
    }
}

TEST(SubPortfolioCache, EqualsDirectEvaluationAtEveryAtom) {
    auto w = worlds::two_factor(9, 0.5);
    const PortfolioSlice slice(w.portfolio, w.model, 6.0);
    for (std::size_t f = 0; f < 2; ++f) {
        const auto cache = build_cache(slice, f);
        ASSERT_EQ(cache.grid.size(), slice.laws()[f].size());
        // the sub-portfolio of names on factor f, evaluated directly
        std::vector<Constituent> sub;
        for (const auto& n : slice.names())
            if (n.loadings.front().factor == f)
                sub.push_back(w.portfolio.constituents()[n.index]);
        const double share = [&] {
            double s = 0.0;
            for (const auto& c : sub)
                s += c.notional;
            return s / w.portfolio.total_notional();
        }();
        const Portfolio sub_portfolio(sub);
        const PortfolioSlice sub_slice(sub_portfolio, w.model, 6.0);
        FactorDraw d;
        d.t = 6.0;
        d.values = {0.0, 0.0};
        d.atoms = {0, 0};
        for (std::size_t k = 0; k < cache.grid.size(); ++k) {
            d.values[f] = cache.grid[k];
            d.atoms[f] = static_cast<std::uint32_t>(k);
            const auto m = conditional_moments(sub_slice, d);
            ASSERT_NEAR(cache.mu[k], share * m.mean, 1e-15);
            ASSERT_NEAR(cache.var[k], share * share * m.variance, 1e-15);
            if (k > 0)
                ASSERT_GE(cache.mu[k], cache.mu[k - 1]);
        }
    }
}

TEST(SubPortfolioCache, EmptyAndOneAtom) {
    auto w = worlds::two_factor(4, 0.0);
    const PortfolioSlice slice(w.portfolio, w.model, 5.0);
    // nobody loads on B among names 0 and 2
    const Portfolio only_a({w.portfolio.constituents()[0], w.portfolio.constituents()[2]});
    const auto empty = build_cache(PortfolioSlice(only_a, w.model, 5.0), 1);
    for (std::size_t k = 0; k < empty.grid.size(); ++k) {
        EXPECT_EQ(empty.mu[k], 0.0);
        EXPECT_EQ(empty.var[k], 0.0);
    }
    const MarginalFactorLaw point("A", {5.0, 7.0}, {0.8}, {{1.0}, {1.0}});
    const Model one_atom({point, w.model.laws[1]}, w.model.copula, w.model.linkage, w.model.curves);
    const PortfolioSlice s1(w.portfolio, one_atom, 5.0);
    const auto c = build_cache(s1, 0);
    ASSERT_EQ(c.mu.size(), 1u);
    const FactorDraw d{5.0, {0.8, 0.0}, {}, {0, 0}};
    const auto direct = conditional_moments(PortfolioSlice(only_a, one_atom, 5.0), d);
    EXPECT_NEAR(c.mu[0] * w.portfolio.total_notional() / only_a.total_notional(), direct.mean, 1e-15);
}

TEST(SubPortfolioCache, RejectsMultiFactorNames) {
    auto w = worlds::two_factor(6, 0.3, worlds::Loading::Mixed);
    const PortfolioSlice slice(w.portfolio, w.model, 5.0);
    EXPECT_FALSE(slice.many_to_one());
    EXPECT_THROW(build_cache(slice, 0), ValidationError);
    EXPECT_THROW(build_caches(slice), ValidationError);
}

TEST(AggregateMoments, EqualsWholePortfolioMoments) {
    // three one-factor indices and their union
    const auto desk = synthetic::desk_market();
    const auto model = desk.model(0.5);
    const PortfolioSlice slice(desk.supermix, model, 5.0);
    const auto caches = build_caches(slice);
    EXPECT_EQ(caches.caches.size(), 3u);
    for (std::uint64_t path = 0; path < 200; ++path) {
        const auto d = random_draw(slice, path);
        const auto direct = conditional_moments(slice, d);
        const auto agg = caches.at(d);
        ASSERT_NEAR(agg.mean, direct.mean, 1e-14);
        ASSERT_NEAR(agg.variance, direct.variance, 1e-14);
        const auto by_atoms = caches.at_atoms(d.atoms);
        ASSERT_EQ(by_atoms.mean, agg.mean);
    }
}

TEST(AggregateMoments, SingleAndDisjointCaches) {
    auto w = worlds::two_factor(8, 0.2);
    const PortfolioSlice slice(w.portfolio, w.model, 5.0);
    const auto a = build_cache(slice, 0), b = build_cache(slice, 1);
    const auto d = random_draw(slice, 7);
    const std::vector<SubPortfolioCache> one = {a}, both = {a, b};
    const auto m1 = aggregate_moments(one, d);
    EXPECT_EQ(m1.mean, a.mu[d.atoms[0]]);
    EXPECT_EQ(m1.variance, a.var[d.atoms[0]]);
    const auto m2 = aggregate_moments(both, d);
    EXPECT_EQ(m2.mean, a.mu[d.atoms[0]] + b.mu[d.atoms[1]]);
}
