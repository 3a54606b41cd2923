#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <dic/loss_engine.hpp>
#include <dic/model.hpp>

namespace dic {

/*! Replacement for the normal approximation of the conditional tranche
    loss. Receives per-name conditional default probabilities and payout
    loss amounts (fractions of portfolio notional).
*/
class ConditionalTrancheEvaluator {
public:
    virtual ~ConditionalTrancheEvaluator() = default;
    virtual double etl(std::span<const double> pd, std::span<const double> loss_given_default, double attach,
                       double detach) const = 0;
};

struct SamcConfig {
    std::size_t n_paths = 250000;
    std::uint64_t seed = 20091231;
    bool use_control_variate = false;
    bool use_many_to_one = true;
    unsigned threads = 1;
    //! Null means the normal approximation.
    std::shared_ptr<const ConditionalTrancheEvaluator> evaluator;
    //! Shared b_j(t) memo; a run-local one is used when null.
    LinkageCache* cache = nullptr;

    void validate() const;
};

struct SamcResult {
    std::vector<EtlCurve> curves;
    //! Standard error of the plain estimator on the same paths (equals curves' std_error without control variate).
    std::vector<std::vector<double>> plain_std_error;
};

/*! Expected tranche loss curves by semi-analytical Monte Carlo: at every
    payment date draw the factor vector (fresh draws per date), evaluate the
    conditional tranche loss analytically and average. Uses the per-factor
    moment caches when every name is single-factor.
*/
SamcResult run_samc(const Portfolio& portfolio, std::span<const TrancheSpec> tranches, const Model& model,
                    const SamcConfig& config);

EtlCurve price_etl_curve(const Portfolio& portfolio, const TrancheSpec& tranche, const Model& model,
                         const SamcConfig& config);

/*! Control-variate estimator: mean of [ETL(draw) - ETL(comonotone draw on the
    same normals)] plus the exact comonotone ETL.
*/
EtlCurve price_with_control_variate(const Portfolio& portfolio, const TrancheSpec& tranche, const Model& model,
                                    SamcConfig config);

//! Payout recovery of every name replaced by `override_rate`; same draws and default probabilities.
EtlCurve price_fixed_recovery(const Portfolio& portfolio, double override_rate, const TrancheSpec& tranche,
                              const Model& model, const SamcConfig& config);

/*! Exact ETL at date t of the 100%-correlated model (no simulation). With a
    single factor this is the exact one-factor grid price.
*/
double comonotone_etl(const PortfolioSlice& slice, double attach, double detach);
std::vector<double> comonotone_etl(const PortfolioSlice& slice, std::span<const TrancheSpec> tranches);

struct NameDelta {
    std::string issuer_id;
    double hedge_ratio;
    double std_error;
};

struct DeltaReport {
    double t;
    double attach;
    double detach;
    std::vector<NameDelta> names;
};

/*! Pathwise hedge ratios at date t: dETL/dp_j through (mean, variance) with
    the draw fixed, divided by d(w_j (1 - R_j) p_j)/dp_j so that a name's
    ratio is per unit of its expected loss, normalized by notional.
*/
std::vector<DeltaReport> pathwise_single_name_deltas(const Portfolio& portfolio,
                                                     std::span<const TrancheSpec> tranches, const Model& model,
                                                     const SamcConfig& config, double t);

enum class BumpMode { Additive, Multiplicative };

struct ModelDelta {
    double leverage;
    double tranche_etl_change;
    double index_el_change;
};

/*! Index tranche model delta at date t: every constituent's hazard bumped,
    linkage recalibrated with factor laws frozen, ratio of tranche ETL change
    to index expected-loss change. Single-factor portfolios are priced on the
    exact factor grid; otherwise SAMC with common random numbers.
*/
ModelDelta index_model_delta(const Portfolio& index_portfolio, const TrancheSpec& tranche, const Model& model,
                             BumpMode mode, double bump_size, double t, const SamcConfig& config);

Model bump_model(const Model& model, const Portfolio& portfolio, BumpMode mode, double bump_size);

} // namespace dic
