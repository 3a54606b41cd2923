#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <dic/factor_law.hpp>
#include <dic/hazard_link.hpp>
#include <dic/market.hpp>
#include <dic/model.hpp>

/*! Synthetic desk-scale markets: three credit indices with one factor each
    and their equal-notional union. Everything is a deterministic function
    of the seed.
*/
namespace dic::synthetic {

/*! Gamma(shape) law whose scale grows like t^time_exponent, rounded to the
    nearest atom of `support`, then normalized so E[X] = 1 at the last tenor.
*/
MarginalFactorLaw gamma_law(const std::string& factor_id, const std::vector<double>& tenors, double shape,
                            double time_exponent = 0.75,
                            const std::vector<double>& support = MarginalFactorLaw::default_support());

//! Curve with cumulative hazard hazard * t * (1 + slope * t) at the standard pillars.
CreditCurve sloped_curve(const std::string& issuer_id, double hazard, double slope = 0.02);

struct IndexBlueprint {
    std::string id; // also the factor id
    std::size_t names;
    double hazard_lo;
    double hazard_hi;
    double recovery;
    double shape; // gamma shape of the factor law
};

std::vector<IndexBlueprint> default_blueprints();

struct DeskMarket {
    std::vector<IndexBlueprint> blueprints;
    std::vector<Portfolio> indices;
    Portfolio supermix; // one third of the notional in each index
    std::vector<MarginalFactorLaw> laws;
    CurveSet curves;
    std::map<std::string, LinkageSpec> linkage;

    std::vector<std::string> factor_ids() const;
    Model model(double uniform_correlation) const;
};

DeskMarket desk_market(double alpha = 0.2, std::uint64_t seed = 2009,
                       std::vector<IndexBlueprint> blueprints = default_blueprints(),
                       std::vector<double> law_tenors = {5.0, 7.0});

//! Contiguous tranches between consecutive attachment points.
std::vector<TrancheSpec> tranche_stack(const std::vector<double>& points, double maturity);

} // namespace dic::synthetic
