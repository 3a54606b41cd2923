#include <dic/synthetic.hpp>

#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include <dic/errors.hpp>
#include <dic/rng.hpp>

namespace dic::synthetic {

MarginalFactorLaw gamma_law(const std::string& factor_id, const std::vector<double>& tenors, double shape,
                            double time_exponent, const std::vector<double>& support) {
    DIC_REQUIRE(shape > 0.0 && !tenors.empty(), "gamma_law: bad parameters");
    std::vector<std::vector<double>> probs;
    for (double t : tenors) {
        const double scale = std::pow(t / tenors.back(), time_exponent) / shape;
        std::vector<double> q(support.size());
        double prev = 0.0;
        for (std::size_t a = 0; a + 1 < support.size(); ++a) {
            const double cdf = boost::math::gamma_p(shape, 0.5 * (support[a] + support[a + 1]) / scale);
            q[a] = cdf - prev;
            prev = cdf;
        }
        q.back() = 1.0 - prev;
        probs.push_back(std::move(q));
    }
    return MarginalFactorLaw(factor_id, tenors, support, std::move(probs)).normalized();
}

CreditCurve sloped_curve(const std::string& issuer_id, double hazard, double slope) {
    std::vector<CurvePillar> pillars;
    for (double t : {1.0, 2.0, 3.0, 5.0, 7.0, 10.0})
        pillars.push_back({t, -std::expm1(-hazard * t * (1.0 + slope * t))});
    return CreditCurve(issuer_id, std::move(pillars));
}

std::vector<IndexBlueprint> default_blueprints() {
    return {{"CDX", 125, 0.004, 0.03, 0.4, 0.3}, {"ITX", 125, 0.003, 0.025, 0.4, 0.375}, {"HY", 100, 0.015, 0.08, 0.3, 0.5}};
}

std::vector<std::string> DeskMarket::factor_ids() const {
    std::vector<std::string> ids;
    for (const auto& l : laws)
        ids.push_back(l.factor_id());
    return ids;
}

Model DeskMarket::model(double uniform_correlation) const {
    return Model(laws, FactorCopula::uniform(factor_ids(), uniform_correlation), linkage, curves);
}

DeskMarket desk_market(double alpha, std::uint64_t seed, std::vector<IndexBlueprint> blueprints,
                       std::vector<double> law_tenors) {
    DeskMarket m;
    m.blueprints = std::move(blueprints);
    std::vector<double> shares;
    for (std::size_t b = 0; b < m.blueprints.size(); ++b) {
        const auto& bp = m.blueprints[b];
        PathRng rng(seed, Stream::Calibration, b, 0);
        std::vector<Constituent> names;
        for (std::size_t j = 0; j < bp.names; ++j) {
            const std::string id = bp.id + "_" + std::to_string(j + 1);
            // log-uniform hazards, evenly spread then jittered
            const double u = (static_cast<double>(j) + rng.uniform()) / static_cast<double>(bp.names);
            const double hazard = bp.hazard_lo * std::pow(bp.hazard_hi / bp.hazard_lo, u);
            m.curves.emplace(id, sloped_curve(id, hazard));
            m.linkage.emplace(id, LinkageSpec(id, {{bp.id, 1.0}}, alpha));
            names.push_back({id, 1.0, RecoverySpec::deterministic(bp.recovery), std::nullopt});
        }
        m.indices.emplace_back(std::move(names));
        m.laws.push_back(gamma_law(bp.id, law_tenors, bp.shape));
        shares.push_back(1.0 / static_cast<double>(m.blueprints.size()));
    }
    m.supermix = Portfolio::merge(m.indices, shares);
    return m;
}

std::vector<TrancheSpec> tranche_stack(const std::vector<double>& points, double maturity) {
    std::vector<TrancheSpec> out;
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
        out.emplace_back(points[i], points[i + 1], maturity);
    return out;
}

} // namespace dic::synthetic
