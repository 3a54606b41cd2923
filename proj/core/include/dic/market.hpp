#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dic {

struct CurvePillar {
    double tenor;
    double default_probability;
};

/*! Single-name default probability curve p_j(t).

    Interpolation is piecewise-constant in the forward hazard between
    pillars (cumulative hazard linear in t), starting from p(0) = 0, with
    the last segment's hazard extrapolated flat beyond the last pillar.
*/
class CreditCurve {
public:
    CreditCurve(std::string issuer_id, std::vector<CurvePillar> pillars);

    static CreditCurve flat_hazard(std::string issuer_id, double hazard, const std::vector<double>& tenors);

    const std::string& issuer_id() const { return issuer_id_; }
    const std::vector<CurvePillar>& pillars() const { return pillars_; }

    double default_probability(double t) const;
    //! h(t) = -log(1 - p(t)).
    double cumulative_hazard(double t) const;

    /*! Returns the curve with cumulative hazards at the pillars replaced by
        (1 + multiplicative) * h(t_k) + additive * t_k. Additive is a constant
        hazard-rate bump; multiplicative scales every name's hazard by the same factor.
    */
    CreditCurve bumped(double additive, double multiplicative) const;

private:
    std::string issuer_id_;
    std::vector<CurvePillar> pillars_;
    std::vector<double> hazards_; // cumulative hazard at each pillar
};

using CurveSet = std::map<std::string, CreditCurve>;

/*! Recovery of a constituent: either a fixed rate or a hook evaluated on
    the full factor draw (aligned with the model's factor order).
*/
class RecoverySpec {
public:
    using Hook = std::function<double(std::span<const double> factor_values)>;

    static RecoverySpec deterministic(double rate);
    static RecoverySpec conditional(Hook hook);

    bool is_deterministic() const { return !hook_; }
    double rate() const;
    //! Recovery given the draw; checked to lie in [0,1].
    double at(std::span<const double> factor_values) const;

private:
    RecoverySpec() = default;
    double rate_ = 0.0;
    Hook hook_;
};

struct Constituent {
    std::string issuer_id;
    double notional;
    RecoverySpec recovery;
    //! Contractual recovery used for the tranche payout only.
    std::optional<double> recovery_override;
};

class Portfolio {
public:
    Portfolio() = default;
    explicit Portfolio(std::vector<Constituent> constituents);

    const std::vector<Constituent>& constituents() const { return constituents_; }
    std::size_t size() const { return constituents_.size(); }
    bool empty() const { return constituents_.empty(); }
    double total_notional() const { return total_notional_; }
    double weight(std::size_t j) const { return constituents_[j].notional / total_notional_; }
    bool has_conditional_recovery() const;

    //! Same names, every payout recovery replaced by `rate`.
    Portfolio with_recovery_override(double rate) const;
    //! Concatenation; issuer ids must stay unique.
    static Portfolio merge(const std::vector<Portfolio>& parts, const std::vector<double>& notional_share);

private:
    std::vector<Constituent> constituents_;
    double total_notional_ = 0.0;
};

//! Quarterly dates generated backwards from maturity, front stub if needed.
std::vector<double> quarterly_grid(double maturity);

struct TrancheSpec {
    TrancheSpec(double attach, double detach, double maturity);
    TrancheSpec(double attach, double detach, double maturity, std::vector<double> payment_grid);

    double attach;
    double detach;
    double maturity;
    std::vector<double> payment_grid;

    double width() const { return detach - attach; }
};

struct EtlPoint {
    double t;
    double etl;
    double std_error;
};

struct EtlCurve {
    std::vector<EtlPoint> points;

    //! Throws if t is not one of the curve's dates.
    const EtlPoint& at(double t) const;
};

/*! Sum_j w_j (1 - R_j) p_j(t) as a fraction of portfolio notional.
    Constituents with conditional recovery need the factor model; see
    dic::expected_loss in model.hpp.
*/
double portfolio_expected_loss(const Portfolio& portfolio, const CurveSet& curves, double t);

const CreditCurve& find_curve(const CurveSet& curves, const std::string& issuer_id);

} // namespace dic
