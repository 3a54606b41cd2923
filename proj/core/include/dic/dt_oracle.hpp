#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <dic/model.hpp>
#include <dic/parallel.hpp>

namespace dic {

inline constexpr double kNoDefault = std::numeric_limits<double>::infinity();

struct DefaultScenario {
    std::size_t path = 0;
    std::vector<double> default_times; // kNoDefault if the name survives the grid
    std::vector<double> recoveries;    // payout recovery realized at default
};

/*! Full default-time simulation on the co-monotonic chain.

    One copula draw per path is shared by all horizons, so every factor
    path is non-decreasing. Each name gets one independent uniform and
    defaults at the first grid date where it falls below the name's
    conditional cumulative default profile along the path.

    Validation only; it is not used by any pricer.
*/
class DefaultTimeSimulator {
public:
    DefaultTimeSimulator(const Portfolio& portfolio, const Model& model, std::vector<double> horizon_grid,
                         LinkageCache* cache = nullptr);

    const std::vector<double>& grid() const { return grid_; }
    std::size_t names() const { return n_names_; }
    //! Throws ValidationError with diagnostics if a profile decreases along the path.
    void simulate(std::uint64_t seed, std::size_t path, DefaultScenario& out) const;

private:
    const Portfolio* portfolio_;
    std::vector<double> grid_;
    std::vector<PortfolioSlice> slices_;
    FactorCopula copula_;
    std::size_t n_names_ = 0;
};

void simulate_scenarios(const Portfolio& portfolio, const Model& model, const std::vector<double>& horizon_grid,
                        std::size_t n_paths, std::uint64_t seed,
                        const std::function<void(const DefaultScenario&)>& sink);

//! Streaming tranche-payoff average over simulated scenarios.
class OracleAccumulator {
public:
    OracleAccumulator(const Portfolio& portfolio, std::span<const TrancheSpec> tranches, std::vector<double> grid);

    void add(const DefaultScenario& scenario);
    void merge(const OracleAccumulator& other);
    std::vector<EtlCurve> curves() const;
    //! Empirical default frequency of name j by grid date k.
    double default_frequency(std::size_t name, std::size_t date) const;
    double paths() const { return paths_; }

private:
    const Portfolio* portfolio_;
    std::vector<TrancheSpec> tranches_;
    std::vector<double> grid_;
    std::vector<std::vector<MomentAccumulator>> tranche_loss_; // [tranche][date]
    std::vector<std::vector<double>> default_counts_;          // [name][date]
    double paths_ = 0.0;
    std::vector<double> losses_;
};

/*! Oracle ETL curves over the union grid of the tranches (ETL reported on each
    tranche's own dates), computed with deterministic block-parallel reduction.
*/
struct OracleResult {
    std::vector<EtlCurve> curves;
    std::vector<double> grid;
    std::vector<std::vector<double>> default_frequency; // [name][date]
};

OracleResult run_oracle(const Portfolio& portfolio, std::span<const TrancheSpec> tranches, const Model& model,
                        std::size_t n_paths, std::uint64_t seed, unsigned threads = 1);

std::vector<EtlCurve> oracle_etl(const std::vector<DefaultScenario>& scenarios, const Portfolio& portfolio,
                                 std::span<const TrancheSpec> tranches, const std::vector<double>& grid);

} // namespace dic
