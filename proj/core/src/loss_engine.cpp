#include <dic/loss_engine.hpp>

#include <algorithm>
#include <cmath>

#include <dic/errors.hpp>
#include <dic/normal.hpp>

namespace dic {

ConditionalMoments conditional_moments(const PortfolioSlice& slice, const FactorDraw& draw) {
    ConditionalMoments m;
    for (const auto& n : slice.names()) {
        const double p = n.conditional_pd(draw);
        const double loss = n.weight * n.payout_lgd(draw);
        m.mean += loss * p;
        m.variance += loss * loss * p * (1.0 - p);
    }
    return m;
}

double expected_call(double mean, double stdev, double strike) {
    if (!(stdev > 0.0))
        return std::max(mean - strike, 0.0);
    const double d = (mean - strike) / stdev;
    return (mean - strike) * normal_cdf(d) + stdev * normal_pdf(d);
}

namespace {

// Call on a loss known to lie in [0,1]: exact at the two ends, Bachelier inside.
double bounded_call(double mean, double stdev, double strike) {
    if (strike <= 0.0)
        return mean - strike;
    if (strike >= 1.0)
        return 0.0;
    return expected_call(mean, stdev, strike);
}

struct CallSensitivity {
    double value, d_mean, d_variance;
};

CallSensitivity bounded_call_sensitivity(double mean, double stdev, double strike) {
    if (strike <= 0.0)
        return {mean - strike, 1.0, 0.0};
    if (strike >= 1.0)
        return {0.0, 0.0, 0.0};
    if (!(stdev > 0.0))
        return {std::max(mean - strike, 0.0), mean > strike ? 1.0 : 0.0, 0.0};
    const double d = (mean - strike) / stdev;
    const double pdf = normal_pdf(d);
    return {(mean - strike) * normal_cdf(d) + stdev * pdf, normal_cdf(d), pdf / (2.0 * stdev)};
}

} // namespace

double normal_etl(const ConditionalMoments& moments, double attach, double detach) {
    const double stdev = std::sqrt(std::max(moments.variance, 0.0));
    const double etl =
        (bounded_call(moments.mean, stdev, attach) - bounded_call(moments.mean, stdev, detach)) / (detach - attach);
    return std::clamp(etl, 0.0, 1.0);
}

EtlSensitivity normal_etl_sensitivity(const ConditionalMoments& moments, double attach, double detach) {
    const double stdev = std::sqrt(std::max(moments.variance, 0.0));
    const auto a = bounded_call_sensitivity(moments.mean, stdev, attach);
    const auto d = bounded_call_sensitivity(moments.mean, stdev, detach);
    const double width = detach - attach;
    const double raw = (a.value - d.value) / width;
    if (raw < 0.0 || raw > 1.0)
        return {std::clamp(raw, 0.0, 1.0), 0.0, 0.0};
    return {raw, (a.d_mean - d.d_mean) / width, (a.d_variance - d.d_variance) / width};
}

SubPortfolioCache build_cache(const PortfolioSlice& slice, std::size_t factor) {
    DIC_REQUIRE(factor < slice.laws().size(), "build_cache: factor index out of range");
    SubPortfolioCache cache;
    cache.factor = factor;
    cache.grid = slice.laws()[factor].support;
    cache.mu.assign(cache.grid.size(), 0.0);
    cache.var.assign(cache.grid.size(), 0.0);
    for (const auto& n : slice.names()) {
        DIC_REQUIRE(n.loadings.size() <= 1, "build_cache: issuer " << slice.portfolio().constituents()[n.index].issuer_id
                                                                   << " loads on several factors");
        DIC_REQUIRE(n.payout_fixed, "build_cache: issuer " << slice.portfolio().constituents()[n.index].issuer_id
                                                           << " has conditional recovery");
        if (n.loadings.empty() || n.loadings.front().factor != factor)
            continue;
        const double beta = n.loadings.front().beta;
        const double loss = n.weight * n.lgd_payout;
        for (std::size_t k = 0; k < cache.grid.size(); ++k) {
            const double p = n.link.conditional_pd(beta * cache.grid[k]);
            cache.mu[k] += loss * p;
            cache.var[k] += loss * loss * p * (1.0 - p);
        }
    }
    return cache;
}

ConditionalMoments idiosyncratic_moments(const PortfolioSlice& slice) {
    ConditionalMoments m;
    for (const auto& n : slice.names()) {
        if (!n.loadings.empty())
            continue;
        DIC_REQUIRE(n.payout_fixed, "idiosyncratic_moments: conditional recovery on a purely idiosyncratic name");
        const double p = n.link.conditional_pd(0.0);
        const double loss = n.weight * n.lgd_payout;
        m.mean += loss * p;
        m.variance += loss * loss * p * (1.0 - p);
    }
    return m;
}

ConditionalMoments aggregate_moments(std::span<const SubPortfolioCache> caches, const FactorDraw& draw,
                                     const ConditionalMoments& base) {
    ConditionalMoments m = base;
    for (const auto& c : caches) {
        const std::uint32_t k = draw.atoms[c.factor];
        m.mean += c.mu[k];
        m.variance += c.var[k];
    }
    return m;
}

ConditionalMoments MomentCaches::at_atoms(std::span<const std::uint32_t> atoms) const {
    ConditionalMoments m = base;
    for (const auto& c : caches) {
        m.mean += c.mu[atoms[c.factor]];
        m.variance += c.var[atoms[c.factor]];
    }
    return m;
}

MomentCaches build_caches(const PortfolioSlice& slice) {
    DIC_REQUIRE(slice.many_to_one(), "build_caches: portfolio is not many-to-one");
    MomentCaches out;
    std::vector<bool> used(slice.laws().size(), false);
    for (const auto& n : slice.names())
        if (!n.loadings.empty())
            used[n.loadings.front().factor] = true;
    for (std::size_t f = 0; f < used.size(); ++f)
        if (used[f])
            out.caches.push_back(build_cache(slice, f));
    out.base = idiosyncratic_moments(slice);
    return out;
}

} // namespace dic
