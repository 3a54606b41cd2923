#include <dic/market.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include <dic/errors.hpp>

namespace dic {

CreditCurve::CreditCurve(std::string issuer_id, std::vector<CurvePillar> pillars)
    : issuer_id_(std::move(issuer_id)), pillars_(std::move(pillars)) {
    DIC_REQUIRE(!pillars_.empty(), "curve " << issuer_id_ << ": no pillars");
    double prev_t = 0.0, prev_p = 0.0;
    for (const auto& [t, p] : pillars_) {
        DIC_REQUIRE(std::isfinite(t) && t > prev_t, "curve " << issuer_id_ << ": tenors must be positive and strictly increasing (" << t << ")");
        DIC_REQUIRE(p >= 0.0 && p < 1.0, "curve " << issuer_id_ << ": pd " << p << " at " << t << " outside [0,1)");
        DIC_REQUIRE(p >= prev_p, "curve " << issuer_id_ << ": pd decreases at tenor " << t);
        prev_t = t;
        prev_p = p;
        hazards_.push_back(-std::log1p(-p));
    }
}

CreditCurve CreditCurve::flat_hazard(std::string issuer_id, double hazard, const std::vector<double>& tenors) {
    DIC_REQUIRE(hazard >= 0.0, "flat_hazard: negative hazard " << hazard);
    std::vector<CurvePillar> pillars;
    for (double t : tenors)
        pillars.push_back({t, -std::expm1(-hazard * t)});
    return CreditCurve(std::move(issuer_id), std::move(pillars));
}

double CreditCurve::cumulative_hazard(double t) const {
    DIC_REQUIRE(t >= 0.0, "curve " << issuer_id_ << ": negative time " << t);
    const auto it = std::upper_bound(pillars_.begin(), pillars_.end(), t,
                                     [](double x, const CurvePillar& p) { return x < p.tenor; });
    const std::size_t k = static_cast<std::size_t>(it - pillars_.begin());
    if (k < pillars_.size() && k > 0 && pillars_[k - 1].tenor == t)
        return hazards_[k - 1];
    // segment [t0, t1] containing t; beyond the last pillar reuse the last segment's slope
    std::size_t hi = std::min(k, pillars_.size() - 1);
    const double t0 = hi == 0 ? 0.0 : pillars_[hi - 1].tenor;
    const double h0 = hi == 0 ? 0.0 : hazards_[hi - 1];
    const double slope = (hazards_[hi] - h0) / (pillars_[hi].tenor - t0);
    if (k == pillars_.size())
        return hazards_.back() + slope * (t - pillars_.back().tenor);
    return h0 + slope * (t - t0);
}

double CreditCurve::default_probability(double t) const { return -std::expm1(-cumulative_hazard(t)); }

CreditCurve CreditCurve::bumped(double additive, double multiplicative) const {
    std::vector<CurvePillar> out;
    out.reserve(pillars_.size());
    for (std::size_t k = 0; k < pillars_.size(); ++k) {
        const double h = (1.0 + multiplicative) * hazards_[k] + additive * pillars_[k].tenor;
        DIC_REQUIRE(h >= 0.0 && std::isfinite(h), "curve " << issuer_id_ << ": bump drives hazard negative");
        const double p = -std::expm1(-h);
        DIC_REQUIRE(p < 1.0, "curve " << issuer_id_ << ": bump drives pd to 1");
        out.push_back({pillars_[k].tenor, p});
    }
    return CreditCurve(issuer_id_, std::move(out));
}

RecoverySpec RecoverySpec::deterministic(double rate) {
    DIC_REQUIRE(rate >= 0.0 && rate <= 1.0, "recovery rate " << rate << " outside [0,1]");
    RecoverySpec r;
    r.rate_ = rate;
    return r;
}

RecoverySpec RecoverySpec::conditional(Hook hook) {
    DIC_REQUIRE(static_cast<bool>(hook), "conditional recovery needs a hook");
    RecoverySpec r;
    r.hook_ = std::move(hook);
    return r;
}

double RecoverySpec::rate() const {
    DIC_REQUIRE(is_deterministic(), "rate() on a conditional recovery");
    return rate_;
}

double RecoverySpec::at(std::span<const double> factor_values) const {
    if (!hook_)
        return rate_;
    const double r = hook_(factor_values);
    DIC_REQUIRE(r >= 0.0 && r <= 1.0, "recovery hook returned " << r);
    return r;
}

Portfolio::Portfolio(std::vector<Constituent> constituents) : constituents_(std::move(constituents)) {
    std::set<std::string> seen;
    for (const auto& c : constituents_) {
        DIC_REQUIRE(c.notional > 0.0 && std::isfinite(c.notional), "constituent " << c.issuer_id << ": notional must be positive");
        DIC_REQUIRE(seen.insert(c.issuer_id).second, "duplicate issuer " << c.issuer_id << " in portfolio");
        if (c.recovery_override)
            DIC_REQUIRE(*c.recovery_override >= 0.0 && *c.recovery_override <= 1.0,
                        "constituent " << c.issuer_id << ": recovery override outside [0,1]");
        total_notional_ += c.notional;
    }
}

bool Portfolio::has_conditional_recovery() const {
    return std::any_of(constituents_.begin(), constituents_.end(),
                       [](const Constituent& c) { return !c.recovery.is_deterministic(); });
}

Portfolio Portfolio::with_recovery_override(double rate) const {
    DIC_REQUIRE(rate >= 0.0 && rate <= 1.0, "recovery override " << rate << " outside [0,1]");
    auto copy = constituents_;
    for (auto& c : copy)
        c.recovery_override = rate;
    return Portfolio(std::move(copy));
}

Portfolio Portfolio::merge(const std::vector<Portfolio>& parts, const std::vector<double>& notional_share) {
    DIC_REQUIRE(parts.size() == notional_share.size(), "merge: one share per part");
    std::vector<Constituent> all;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        DIC_REQUIRE(notional_share[i] > 0.0 && !parts[i].empty(), "merge: empty part or non-positive share");
        for (auto c : parts[i].constituents()) {
            c.notional *= notional_share[i] / parts[i].total_notional();
            all.push_back(std::move(c));
        }
    }
    return Portfolio(std::move(all));
}

std::vector<double> quarterly_grid(double maturity) {
    DIC_REQUIRE(maturity > 0.0, "maturity must be positive");
    const auto n = static_cast<std::size_t>(std::ceil(maturity / 0.25 - 1e-9));
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i)
        grid[i] = maturity - 0.25 * static_cast<double>(n - 1 - i);
    return grid;
}

TrancheSpec::TrancheSpec(double attach, double detach, double maturity)
    : TrancheSpec(attach, detach, maturity, quarterly_grid(maturity)) {}

TrancheSpec::TrancheSpec(double attach_, double detach_, double maturity_, std::vector<double> payment_grid_)
    : attach(attach_), detach(detach_), maturity(maturity_), payment_grid(std::move(payment_grid_)) {
    DIC_REQUIRE(attach >= 0.0 && attach < detach && detach <= 1.0,
                "tranche [" << attach << ", " << detach << "] must satisfy 0 <= A < D <= 1");
    DIC_REQUIRE(maturity > 0.0, "tranche maturity must be positive");
    DIC_REQUIRE(!payment_grid.empty() && payment_grid.back() == maturity, "payment grid must end at maturity");
    for (std::size_t i = 0; i < payment_grid.size(); ++i)
        DIC_REQUIRE(payment_grid[i] > (i == 0 ? 0.0 : payment_grid[i - 1]), "payment grid must be positive and increasing");
}

const EtlPoint& EtlCurve::at(double t) const {
    for (const auto& p : points)
        if (p.t == t)
            return p;
    DIC_THROW(NotCalibrated, "ETL curve has no point at t = " << t);
}

const CreditCurve& find_curve(const CurveSet& curves, const std::string& issuer_id) {
    const auto it = curves.find(issuer_id);
    if (it == curves.end())
        DIC_THROW(NotCalibrated, "no credit curve for issuer " << issuer_id);
    return it->second;
}

double portfolio_expected_loss(const Portfolio& portfolio, const CurveSet& curves, double t) {
    double el = 0.0;
    for (std::size_t j = 0; j < portfolio.size(); ++j) {
        const auto& c = portfolio.constituents()[j];
        if (!c.recovery.is_deterministic())
            DIC_THROW(ValidationError, "issuer " << c.issuer_id << " has conditional recovery; use dic::expected_loss");
        el += portfolio.weight(j) * (1.0 - c.recovery.rate()) * find_curve(curves, c.issuer_id).default_probability(t);
    }
    return el;
}

} // namespace dic
