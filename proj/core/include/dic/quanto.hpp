#pragma once

#include <span>
#include <vector>

#include <dic/model.hpp>
#include <dic/samc.hpp>

namespace dic {

struct FxSpec {
    //! Lognormal cumulative volatility at the reference horizon.
    double cumulative_vol = 0.30;
    double reference_horizon = 5.0;
    //! Gaussian-copula correlation between FX and the DCEPL.
    double correlation = 0.0;

    void validate() const;
    double vol_at(double t) const;
};

//! Difference of conditional expected losses of two unit-notional portfolios.
double dcepl(const PortfolioSlice& first, const PortfolioSlice& second, const FactorDraw& draw);

/*! Empirical distribution of the DCEPL at one horizon. The CDF uses
    mid-ranks, (count below + count equal / 2) / n, clamped to
    [0.5/n, 1 - 0.5/n], which is (r - 0.5)/n for untied values.
*/
class DceplLaw {
public:
    DceplLaw(double t, std::vector<double> samples);

    double t() const { return t_; }
    std::size_t size() const { return sorted_.size(); }
    const std::vector<double>& sorted() const { return sorted_; }
    double cdf(double value) const;

private:
    double t_;
    std::vector<double> sorted_;
};

struct DceplInputs {
    Portfolio first;  // the protection-side index (CDX in the USD/EUR example)
    Portfolio second; // the other currency zone's index
    std::vector<DceplLaw> laws;

    const DceplLaw& law_at(double t) const;
};

DceplLaw build_dcepl_law(const Model& model, const Portfolio& first, const Portfolio& second, double t,
                         std::size_t n_paths, std::uint64_t seed, unsigned threads = 1,
                         LinkageCache* cache = nullptr);

//! Pass 1 over every date the tranches need.
DceplInputs build_dcepl_inputs(const Model& model, Portfolio first, Portfolio second,
                               std::span<const TrancheSpec> tranches, const SamcConfig& config);

struct QuantoResult {
    std::vector<EtlCurve> base;
    std::vector<EtlCurve> quanto;
    //! adjustment = quanto - base on identical draws; std_error of the per-path difference.
    std::vector<EtlCurve> adjustment;
};

/*! Pass 2: per draw, u = CDF_dcepl(DCEPL(draw)), FX from a bivariate
    Gaussian copula with that uniform, FX = exp(v z - v^2/2) with
    v = vol * sqrt(t / T_ref), and the conditional ETL converted by FX.
*/
QuantoResult quanto_etl(const Portfolio& tranche_portfolio, std::span<const TrancheSpec> tranches,
                        const Model& model, const FxSpec& fx, const DceplInputs& inputs, const SamcConfig& config);

} // namespace dic
