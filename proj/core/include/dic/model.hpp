#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <dic/factor_law.hpp>
#include <dic/hazard_link.hpp>
#include <dic/market.hpp>

namespace dic {

/*! Calibrated market: factor laws (aligned with copula.factor_ids()),
    the copula, per-issuer linkage specs and single-name curves.
*/
struct Model {
    std::vector<MarginalFactorLaw> laws;
    FactorCopula copula;
    std::map<std::string, LinkageSpec> linkage;
    CurveSet curves;
    bool extrapolate_laws = false;

    Model(std::vector<MarginalFactorLaw> laws, FactorCopula copula, std::map<std::string, LinkageSpec> linkage,
          CurveSet curves);

    std::vector<LawSlice> slices(double t) const;
    const LinkageSpec& spec(const std::string& issuer_id) const;
    const CreditCurve& curve(const std::string& issuer_id) const { return find_curve(curves, issuer_id); }
    //! Content hash of laws and copula; part of every linkage cache key.
    std::uint64_t factor_hash() const;

    Model with_copula(FactorCopula copula) const;
    Model with_curve(const CreditCurve& curve) const;
};

/*! Memo of calibrated LinkagePoints keyed by issuer, a hash of everything
    the calibration depends on, and the date. Thread-safe. Persistable so
    b_j(t) can be computed once and reused across runs.
*/
class LinkageCache {
public:
    LinkagePoint get_or_calibrate(const Model& model, const std::string& issuer_id, double t,
                                  const std::vector<LawSlice>& slices);

    std::size_t size() const;
    std::size_t misses() const { return misses_; }
    void save(const std::string& path) const;
    //! Loads entries; a missing file leaves the cache empty.
    void load(const std::string& path);

    static std::string key(const Model& model, const std::string& issuer_id, double t);

private:
    mutable std::mutex mutex_;
    std::map<std::string, LinkagePoint> entries_;
    std::size_t misses_ = 0;
};

//! One constituent resolved at a date.
struct NameSlice {
    std::size_t index;      // position in the portfolio
    double weight;          // notional / total notional
    double lgd_market;      // 1 - R (deterministic recoveries)
    double lgd_payout;      // 1 - override, else lgd_market
    const RecoverySpec* recovery;
    bool deterministic;
    bool payout_fixed;      // deterministic recovery or an override
    std::vector<Loading> loadings;
    LinkagePoint link;

    double systemic_value(const FactorDraw& draw) const;
    double conditional_pd(const FactorDraw& draw) const { return link.conditional_pd(systemic_value(draw)); }
    //! Payout LGD given the draw.
    double payout_lgd(const FactorDraw& draw) const;
    double market_lgd(const FactorDraw& draw) const;
};

/*! Everything needed to evaluate conditional losses of a portfolio at one
    date: factor slices, copula, and calibrated names.
*/
class PortfolioSlice {
public:
    PortfolioSlice(const Portfolio& portfolio, const Model& model, double t, LinkageCache* cache = nullptr);

    double t() const { return t_; }
    const Portfolio& portfolio() const { return *portfolio_; }
    const std::vector<LawSlice>& laws() const { return laws_; }
    const FactorCopula& copula() const { return copula_; }
    const std::vector<NameSlice>& names() const { return names_; }
    //! Every name loads on at most one factor and has a fixed payout recovery.
    bool many_to_one() const { return many_to_one_; }

private:
    const Portfolio* portfolio_;
    double t_;
    std::vector<LawSlice> laws_;
    FactorCopula copula_;
    std::vector<NameSlice> names_;
    bool many_to_one_ = true;
};

/*! Portfolio expected loss at t under the model. Equals
    portfolio_expected_loss for deterministic recoveries; conditional
    recoveries are integrated over the joint factor law.
*/
double expected_loss(const Portfolio& portfolio, const Model& model, double t, LinkageCache* cache = nullptr);

} // namespace dic
