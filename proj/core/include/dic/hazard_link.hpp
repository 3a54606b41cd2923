#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <dic/factor_law.hpp>
#include <dic/market.hpp>

namespace dic {

//! gamma = (1 - exp(-alpha h)) / (alpha h), with gamma(0) = 1.
double systemic_fraction(double alpha, double h);
//! c = exp((1 - gamma) log(1 - p)).
double idiosyncratic_factor(double gamma, double p);

/*! How an issuer loads on the market factors. Betas are nonnegative and
    normalized to sum to one; an issuer with no positive beta is purely
    idiosyncratic (gamma = 0, b = 0).
*/
class LinkageSpec {
public:
    LinkageSpec(std::string issuer_id, std::vector<std::pair<std::string, double>> betas, double alpha);

    const std::string& issuer_id() const { return issuer_id_; }
    const std::vector<std::pair<std::string, double>>& betas() const { return betas_; }
    double alpha() const { return alpha_; }
    bool idiosyncratic_only() const { return betas_.empty(); }

private:
    std::string issuer_id_;
    std::vector<std::pair<std::string, double>> betas_;
    double alpha_;
};

//! Factor exposure resolved against a model's factor order.
struct Loading {
    std::uint32_t factor;
    double beta;
};

std::vector<Loading> resolve_loadings(const LinkageSpec& spec, const FactorCopula& copula);

//! Calibrated linkage of one issuer at one date.
struct LinkagePoint {
    double t = 0.0;
    double p = 0.0;        // unconditional default probability
    double h = 0.0;        // cumulative hazard
    double alpha = 1.0;
    double gamma = 1.0;    // systemic fraction
    double b = 0.0;        // systemic scaling
    double tilted_mean = 0.0; // E[S e^{-bS}] / E[e^{-bS}], S = sum beta X
    double residual = 0.0; // log E[e^{-bS}] + gamma h

    double systemic_budget() const { return gamma * h; }
    double idiosyncratic_budget() const { return (1.0 - gamma) * h; }
    double c() const;
    double log_c() const { return -idiosyncratic_budget(); }

    //! 1 - c e^{-b s}.
    double conditional_pd(double s) const;
    /*! d p_cond / d p at fixed s, with gamma, c and b re-derived from the
        perturbed p (b through the calibration equation).
    */
    double conditional_pd_sensitivity(double s) const;
};

//! Weighted distribution of S = sum_i beta_i X_i at one date.
struct SystemicDistribution {
    std::vector<double> weights;
    std::vector<double> values;
};

SystemicDistribution systemic_distribution(const FactorQuadrature& quadrature, const std::vector<Loading>& loadings,
                                           const std::vector<std::size_t>& quadrature_factors);

/*! Solves log E[e^{-b S}] = -budget for b >= 0 by bracketed root finding.
    Throws RootNotBracketed when the budget exceeds -log P(S = 0).
*/
double solve_systemic_scale(const SystemicDistribution& s, double budget, double* tilted_mean = nullptr,
                            double* residual = nullptr);

//! Links one issuer at one date given its cumulative hazard and systemic budget.
LinkagePoint link_point(double t, double h, double gamma, double alpha, const SystemicDistribution& s,
                        const std::string& issuer_id);

/*! Per-issuer linkage over a tenor grid.

    Off-grid dates interpolate the systemic and idiosyncratic budgets
    linearly in t and re-solve b against the factor law at that date, so
    the survival identity holds wherever the calibration is queried.
*/
class LinkageCalibration {
public:
    LinkageCalibration(std::string issuer_id, std::vector<LinkagePoint> points);

    const std::string& issuer_id() const { return issuer_id_; }
    const std::vector<LinkagePoint>& points() const { return points_; }
    const LinkagePoint* find(double t) const;
    LinkagePoint at(double t, const SystemicDistribution& s) const;

private:
    std::string issuer_id_;
    std::vector<LinkagePoint> points_;
};

/*! Calibrates b_j(t) at every grid date against the joint factor law.
    p = 0 dates give b = 0 and c = 1.
*/
LinkageCalibration calibrate_b(const LinkageSpec& spec, const CreditCurve& curve,
                               const std::vector<MarginalFactorLaw>& laws, const FactorCopula& copula,
                               const std::vector<double>& tenor_grid);

//! Systemic distribution for an issuer's loadings at date t.
SystemicDistribution issuer_systemic_distribution(const std::vector<Loading>& loadings,
                                                  const std::vector<LawSlice>& slices, const FactorCopula& copula);

double conditional_default_probability(const LinkagePoint& point, const std::vector<Loading>& loadings,
                                       const FactorDraw& draw);

} // namespace dic
