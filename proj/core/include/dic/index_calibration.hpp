#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <dic/factor_law.hpp>
#include <dic/hazard_link.hpp>
#include <dic/market.hpp>
#include <dic/model.hpp>

namespace dic {

struct TrancheBounds {
    double attach;
    double detach;
};

/*! Index tranche ETL targets, etl[tranche][tenor], tranches ordered from
    equity upwards and tenors ascending.
*/
struct EtlTargetSurface {
    std::string index_id;
    std::vector<TrancheBounds> tranches;
    std::vector<double> tenors;
    std::vector<std::vector<double>> etl;
    std::vector<std::vector<double>> weights; // empty means all ones

    double weight(std::size_t tranche, std::size_t tenor) const {
        return weights.empty() ? 1.0 : weights[tranche][tenor];
    }
};

//! Throws InfeasibleTargets if the surface breaks ETL bounds or monotonicity.
void validate_targets(const EtlTargetSurface& targets);
//! Same shape checks applied to any ETL matrix; empty string when valid.
std::string etl_surface_violation(const std::vector<TrancheBounds>& tranches,
                                  const std::vector<std::vector<double>>& etl, double tolerance = 0.0);

struct CalibrationIterate {
    std::size_t tenor_index;
    std::size_t iteration;
    double objective;
    //! Full law with the tenors fitted so far; later tenors hold their initial guess.
    const MarginalFactorLaw* law;
};

struct CalibrationConfig {
    std::vector<double> support = MarginalFactorLaw::default_support();
    double regularization = 1e-4;
    std::size_t max_iterations = 500;
    double tolerance = 1e-12;
    bool normalize_scale = true;
    //! Called for the starting point and every accepted step.
    std::function<void(const CalibrationIterate&)> observer;
};

struct CalibrationReport {
    MarginalFactorLaw law;
    std::vector<std::vector<double>> model_etl; // [tranche][tenor]
    std::vector<std::vector<double>> error;     // model - target
    double objective = 0.0;
    double fit_objective = 0.0;
    std::size_t iterations = 0;
    bool converged = false;

    double rms_error() const;
    double max_abs_error() const;
};

/*! Fits the factor's per-tenor PMFs to index tranche ETL targets.

    The shortest tenor is fitted first; each later tenor is constrained to
    lie below the previous CDF. Variables are the CDF values on the fixed
    support, kept feasible at every iterate by projection (isotonic
    regression clipped to the tenor bounds). Steps are Levenberg-Marquardt
    on the weighted squared ETL errors plus a curvature penalty on the CDF.
    Every objective evaluation recalibrates b_j of all index names.
*/
CalibrationReport calibrate_marginals(const Portfolio& index_portfolio, const CurveSet& curves,
                                      const std::map<std::string, LinkageSpec>& specs,
                                      const EtlTargetSurface& targets, const CalibrationConfig& config = {});

//! Exact ETL at t for a portfolio whose names all load on one factor; the copula is ignored.
double model_etl_grid(const PortfolioSlice& slice, double attach, double detach);

//! Index model built from a single calibrated law (one-factor copula).
Model single_factor_model(const MarginalFactorLaw& law, const CurveSet& curves,
                          const std::map<std::string, LinkageSpec>& specs);

} // namespace dic
