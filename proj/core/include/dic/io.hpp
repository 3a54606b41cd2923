#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <dic/dt_oracle.hpp>
#include <dic/factor_law.hpp>
#include <dic/hazard_link.hpp>
#include <dic/index_calibration.hpp>
#include <dic/market.hpp>
#include <dic/samc.hpp>

/*! JSON documents (strict: unknown fields are rejected) and CSV reports.

    curves.json     [{issuer_id, pillars:[{tenor, pd}]}]
    portfolio.json  [{issuer_id, notional, recovery:{kind:"deterministic", rate}, recovery_override?}]
    factors.json    [{factor_id, tenors, support[], probs[][]}]
    copula.json     {factor_ids, correlation[][]}
    linkage.json    [{issuer_id, betas:{factor_id: weight}, alpha}]
    targets.json    {index_id, tranches:[{attach, detach}], tenors, etl[tranche][tenor], weights?}
    tranches.json   [{attach, detach, maturity}]
*/
namespace dic::io {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t value);

CurveSet parse_curves(const std::string& json_text);
Portfolio parse_portfolio(const std::string& json_text);
std::vector<MarginalFactorLaw> parse_factors(const std::string& json_text);
FactorCopula parse_copula(const std::string& json_text);
std::map<std::string, LinkageSpec> parse_linkage(const std::string& json_text);
EtlTargetSurface parse_targets(const std::string& json_text);
std::vector<TrancheSpec> parse_tranches(const std::string& json_text);

std::string dump_curves(const CurveSet& curves);
std::string dump_portfolio(const Portfolio& portfolio);
std::string dump_factors(const std::vector<MarginalFactorLaw>& laws);
std::string dump_copula(const FactorCopula& copula);
std::string dump_linkage(const std::map<std::string, LinkageSpec>& specs);
std::string dump_targets(const EtlTargetSurface& targets);
std::string dump_tranches(const std::vector<TrancheSpec>& tranches);

std::string dump_linkage_points(const std::map<std::string, LinkagePoint>& entries);
std::map<std::string, LinkagePoint> parse_linkage_points(const std::string& json_text);

//! Fixed ten-significant-digit formatting used by every report.
std::string fmt(double value);

/*! Header block written at the top of every output file: "# key: value"
    lines for CSV, "// key: value" for JSON (the parsers accept comments).
*/
struct ReportHeader {
    std::string tool_version;
    std::string command;
    std::vector<std::pair<std::string, std::string>> inputs; // name -> fnv1a64 hex
    std::uint64_t seed = 0;
    std::size_t n_paths = 0;
    std::vector<std::pair<std::string, std::string>> extra;

    void write(std::ostream& out, const char* prefix = "# ") const;
};

void write_etl_csv(std::ostream& out, const std::vector<TrancheSpec>& tranches, const std::vector<EtlCurve>& curves);
void write_delta_csv(std::ostream& out, const std::vector<DeltaReport>& reports);
//! Pass column_names = false to append further indices to the same table.
void write_calibration_csv(std::ostream& out, const EtlTargetSurface& targets, const CalibrationReport& report,
                           bool column_names = true);
void write_scenarios_csv(std::ostream& out, const Portfolio& portfolio, const std::vector<DefaultScenario>& scenarios);

} // namespace dic::io
