#pragma once

#include <span>
#include <vector>

#include <dic/model.hpp>

namespace dic {

//! Conditional mean and variance of portfolio loss (fractions of notional).
struct ConditionalMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/*! Moments given the draw; names are independent conditional on it.
    Payout uses recovery_override where set, default probability never does.
*/
ConditionalMoments conditional_moments(const PortfolioSlice& slice, const FactorDraw& draw);

//! E[(L - K)^+] for L ~ Normal(mean, stdev^2) (Bachelier call).
double expected_call(double mean, double stdev, double strike);

/*! Expected tranche loss as a fraction of tranche width,
    (C(A) - C(D)) / (D - A), where C is the Bachelier call on the normal
    loss for strikes in (0,1). Loss is nonnegative and bounded by the
    portfolio notional, so C(0) = mean and C(1) = 0 exactly. The result is
    clamped to [0,1].
*/
double normal_etl(const ConditionalMoments& moments, double attach, double detach);

struct EtlSensitivity {
    double etl = 0.0;
    double d_mean = 0.0;
    double d_variance = 0.0;
};

//! normal_etl with its partial derivatives in mean and variance.
EtlSensitivity normal_etl_sensitivity(const ConditionalMoments& moments, double attach, double detach);

//! Conditional moments of one factor's sub-portfolio at every atom of that factor.
struct SubPortfolioCache {
    std::size_t factor = 0;
    std::vector<double> grid;
    std::vector<double> mu;
    std::vector<double> var;
};

/*! Per-atom moments of the names that load on `factor` only. Names with a
    loading on any other factor are rejected; names without systemic
    loading contribute a constant and belong to `idiosyncratic_moments`.
*/
SubPortfolioCache build_cache(const PortfolioSlice& slice, std::size_t factor);
//! Moments of the names with no factor loading (independent of the draw).
ConditionalMoments idiosyncratic_moments(const PortfolioSlice& slice);

//! Sum of the per-factor cached moments at the draw's atoms.
ConditionalMoments aggregate_moments(std::span<const SubPortfolioCache> caches, const FactorDraw& draw,
                                     const ConditionalMoments& base = {});

//! Caches for every factor of a many-to-one slice plus the idiosyncratic base.
struct MomentCaches {
    std::vector<SubPortfolioCache> caches;
    ConditionalMoments base;

    ConditionalMoments at(const FactorDraw& draw) const { return aggregate_moments(caches, draw, base); }
    ConditionalMoments at_atoms(std::span<const std::uint32_t> atoms) const;
};

MomentCaches build_caches(const PortfolioSlice& slice);

} // namespace dic
