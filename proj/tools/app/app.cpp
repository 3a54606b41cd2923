#include "app.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <dic/dt_oracle.hpp>
#include <dic/errors.hpp>
#include <dic/index_calibration.hpp>
#include <dic/io.hpp>
#include <dic/quanto.hpp>
#include <dic/samc.hpp>
#include <dic/synthetic.hpp>

namespace dic::app {
namespace fs = std::filesystem;

namespace {

class MissingFile : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Common {
    std::uint64_t seed = SamcConfig{}.seed;
    std::size_t paths = SamcConfig{}.n_paths;
    unsigned threads = 1;
    std::string out_dir = ".";
    std::string cache_dir;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "Top-level random seed");
    cmd->add_option("--paths", c.paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
    cmd->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--out", c.out_dir, "Output directory");
    cmd->add_option("--cache", c.cache_dir, "Directory holding linkage_cache.json (read and updated)");
}

// Reads an input and records its hash for the report header.
class Inputs {
public:
    std::string read(const std::string& role, const std::string& path) {
        if (!fs::is_regular_file(path))
            throw MissingFile("missing input file for " + role + ": " + path);
        std::string text = io::read_file(path);
        hashes_.emplace_back(role, io::hex64(io::fnv1a64(text)));
        return text;
    }
    const std::vector<std::pair<std::string, std::string>>& hashes() const { return hashes_; }

private:
    std::vector<std::pair<std::string, std::string>> hashes_;
};

struct ModelFiles {
    std::string factors, copula, linkage, curves;
};

void add_model_files(CLI::App* cmd, ModelFiles& m) {
    cmd->add_option("--factors", m.factors, "factors.json")->required();
    cmd->add_option("--copula", m.copula, "copula.json")->required();
    cmd->add_option("--linkage", m.linkage, "linkage.json")->required();
    cmd->add_option("--curves", m.curves, "curves.json")->required();
}

Model load_model(Inputs& in, const ModelFiles& m) {
    auto factors = io::parse_factors(in.read("factors", m.factors));
    auto copula = io::parse_copula(in.read("copula", m.copula));
    auto linkage = io::parse_linkage(in.read("linkage", m.linkage));
    auto curves = io::parse_curves(in.read("curves", m.curves));
    return Model(std::move(factors), std::move(copula), std::move(linkage), std::move(curves));
}

//! Optional persisted b_j(t) memo.
class CacheFile {
public:
    explicit CacheFile(std::string dir) : dir_(std::move(dir)) {
        if (!dir_.empty())
            cache_.load(path());
    }
    LinkageCache* get() { return dir_.empty() ? nullptr : &cache_; }
    void save() const {
        if (dir_.empty())
            return;
        fs::create_directories(dir_);
        cache_.save(path());
    }

private:
    std::string path() const { return (fs::path(dir_) / "linkage_cache.json").string(); }
    std::string dir_;
    LinkageCache cache_;
};

SamcConfig samc_config(const Common& c, LinkageCache* cache) {
    SamcConfig cfg;
    cfg.seed = c.seed;
    cfg.n_paths = c.paths;
    cfg.threads = c.threads;
    cfg.cache = cache;
    return cfg;
}

io::ReportHeader header(const std::string& command, const Common& c, const Inputs& in, std::size_t n_paths) {
    io::ReportHeader h;
    h.tool_version = kToolVersion;
    h.command = command;
    h.inputs = in.hashes();
    h.seed = c.seed;
    h.n_paths = n_paths;
    return h;
}

void write_output(const Common& c, const std::string& name, const std::string& body) {
    fs::create_directories(c.out_dir);
    io::write_file((fs::path(c.out_dir) / name).string(), body);
}

std::string join(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i)
        s += (i ? "," : "") + io::fmt(xs[i]);
    return s;
}

// --- calibrate -------------------------------------------------------------

struct CalibrateArgs {
    Common common;
    std::string curves, linkage;
    std::vector<std::string> targets, portfolios;
    double regularization = CalibrationConfig{}.regularization;
    std::size_t max_iterations = CalibrationConfig{}.max_iterations;
};

int calibrate(const CalibrateArgs& a, std::ostream& out) {
    if (a.targets.size() != a.portfolios.size())
        throw ValidationError("calibrate: --targets and --portfolio must be given in pairs");
    Inputs in;
    const auto curves = io::parse_curves(in.read("curves", a.curves));
    const auto specs = io::parse_linkage(in.read("linkage", a.linkage));
    std::vector<EtlTargetSurface> surfaces;
    std::vector<Portfolio> portfolios;
    for (std::size_t i = 0; i < a.targets.size(); ++i) {
        surfaces.push_back(io::parse_targets(in.read("targets[" + std::to_string(i) + "]", a.targets[i])));
        portfolios.push_back(io::parse_portfolio(in.read("portfolio[" + std::to_string(i) + "]", a.portfolios[i])));
    }
    CalibrationConfig cfg;
    cfg.regularization = a.regularization;
    cfg.max_iterations = a.max_iterations;
    std::vector<MarginalFactorLaw> laws;
    std::vector<CalibrationReport> reports;
    bool converged = true;
    for (std::size_t i = 0; i < surfaces.size(); ++i) {
        reports.push_back(calibrate_marginals(portfolios[i], curves, specs, surfaces[i], cfg));
        laws.push_back(reports.back().law);
        converged = converged && reports.back().converged;
        out << surfaces[i].index_id << ": rms error " << io::fmt(reports.back().rms_error()) << ", "
            << reports.back().iterations << " iterations" << (reports.back().converged ? "" : " (not converged)")
            << "\n";
    }
    auto h = header("calibrate", a.common, in, 0);
    h.extra = {{"regularization", io::fmt(a.regularization)}, {"converged", converged ? "true" : "false"}};
    std::ostringstream factors;
    h.write(factors, "// ");
    factors << io::dump_factors(laws) << "\n";
    write_output(a.common, "factors.json", factors.str());
    std::ostringstream csv;
    h.write(csv);
    for (std::size_t i = 0; i < surfaces.size(); ++i)
        io::write_calibration_csv(csv, surfaces[i], reports[i], i == 0);
    write_output(a.common, "calibration.csv", csv.str());
    return converged ? kOk : kNotConverged;
}

// --- price -----------------------------------------------------------------

struct PriceArgs {
    Common common;
    ModelFiles model;
    std::string portfolio, tranches;
    std::vector<double> correlations;
    bool control_variate = false;
    std::optional<double> recovery_override;
};

int price(const PriceArgs& a, std::ostream& out) {
    Inputs in;
    const Model base = load_model(in, a.model);
    Portfolio portfolio = io::parse_portfolio(in.read("portfolio", a.portfolio));
    const auto tranches = io::parse_tranches(in.read("tranches", a.tranches));
    if (a.recovery_override)
        portfolio = portfolio.with_recovery_override(*a.recovery_override);
    CacheFile cache(a.common.cache_dir);
    SamcConfig cfg = samc_config(a.common, cache.get());
    cfg.use_control_variate = a.control_variate;

    const bool sweep = !a.correlations.empty();
    std::vector<std::optional<double>> runs;
    if (sweep)
        for (double r : a.correlations)
            runs.emplace_back(r);
    else
        runs.emplace_back(std::nullopt);

    auto h = header("price", a.common, in, cfg.n_paths);
    h.extra.emplace_back("control_variate", a.control_variate ? "true" : "false");
    if (sweep)
        h.extra.emplace_back("correlation", join(a.correlations));
    if (a.recovery_override)
        h.extra.emplace_back("recovery_override", io::fmt(*a.recovery_override));
    std::ostringstream csv;
    h.write(csv);
    if (sweep)
        csv << "correlation,";
    csv << "attach,detach,t,etl,stderr\n";
    for (const auto& rho : runs) {
        const Model model = rho ? base.with_copula(FactorCopula::uniform(base.copula.factor_ids(), *rho)) : base;
        const auto res = run_samc(portfolio, tranches, model, cfg);
        std::ostringstream rows;
        io::write_etl_csv(rows, tranches, res.curves);
        std::string line;
        std::istringstream lines(rows.str());
        std::getline(lines, line); // column names
        while (std::getline(lines, line))
            csv << (rho ? io::fmt(*rho) + "," : "") << line << "\n";
        for (std::size_t k = 0; k < tranches.size(); ++k) {
            const auto& p = res.curves[k].points.back();
            out << (rho ? "rho " + io::fmt(*rho) + " " : "") << io::fmt(tranches[k].attach) << "-"
                << io::fmt(tranches[k].detach) << " @" << io::fmt(p.t) << ": " << io::fmt(p.etl) << " +- "
                << io::fmt(p.std_error) << "\n";
        }
    }
    write_output(a.common, "etl.csv", csv.str());
    cache.save();
    return kOk;
}

// --- deltas ----------------------------------------------------------------

struct DeltasArgs {
    Common common;
    ModelFiles model;
    std::string portfolio, tranches;
    std::optional<double> date;
    std::string bump_mode = "additive";
    std::optional<double> bump_size;
};

int deltas(const DeltasArgs& a, std::ostream& out) {
    Inputs in;
    const Model model = load_model(in, a.model);
    const Portfolio portfolio = io::parse_portfolio(in.read("portfolio", a.portfolio));
    const auto tranches = io::parse_tranches(in.read("tranches", a.tranches));
    if (tranches.empty())
        throw ValidationError("deltas: no tranches");
    const double t = a.date.value_or(tranches.front().maturity);
    const BumpMode mode = a.bump_mode == "additive" ? BumpMode::Additive : BumpMode::Multiplicative;
    const double size = a.bump_size.value_or(mode == BumpMode::Additive ? 1e-4 : 0.01);
    CacheFile cache(a.common.cache_dir);
    const SamcConfig cfg = samc_config(a.common, cache.get());

    const auto reports = pathwise_single_name_deltas(portfolio, tranches, model, cfg, t);
    auto h = header("deltas", a.common, in, cfg.n_paths);
    h.extra = {{"date", io::fmt(t)}, {"bump_mode", a.bump_mode}, {"bump_size", io::fmt(size)}};
    std::ostringstream csv;
    h.write(csv);
    io::write_delta_csv(csv, reports);
    write_output(a.common, "deltas.csv", csv.str());

    std::ostringstream md;
    h.write(md);
    md << "attach,detach,t,leverage,tranche_etl_change,index_el_change\n";
    for (const auto& tr : tranches) {
        const auto d = index_model_delta(portfolio, tr, model, mode, size, t, cfg);
        md << io::fmt(tr.attach) << ',' << io::fmt(tr.detach) << ',' << io::fmt(t) << ',' << io::fmt(d.leverage)
           << ',' << io::fmt(d.tranche_etl_change) << ',' << io::fmt(d.index_el_change) << '\n';
        out << io::fmt(tr.attach) << "-" << io::fmt(tr.detach) << " model delta " << io::fmt(d.leverage) << "\n";
    }
    write_output(a.common, "model_delta.csv", md.str());
    cache.save();
    return kOk;
}

// --- quanto ----------------------------------------------------------------

struct QuantoArgs {
    Common common;
    ModelFiles model;
    std::string first, second, portfolio, tranches;
    FxSpec fx;
    std::vector<double> correlations = {0.0};
};

int quanto(const QuantoArgs& a, std::ostream& out) {
    Inputs in;
    const Model model = load_model(in, a.model);
    Portfolio first = io::parse_portfolio(in.read("first", a.first));
    Portfolio second = io::parse_portfolio(in.read("second", a.second));
    const Portfolio tranche_portfolio =
        a.portfolio.empty() ? first : io::parse_portfolio(in.read("portfolio", a.portfolio));
    const auto tranches = io::parse_tranches(in.read("tranches", a.tranches));
    CacheFile cache(a.common.cache_dir);
    const SamcConfig cfg = samc_config(a.common, cache.get());
    const auto inputs = build_dcepl_inputs(model, std::move(first), std::move(second), tranches, cfg);

    auto h = header("quanto", a.common, in, cfg.n_paths);
    h.extra = {{"fx_vol", io::fmt(a.fx.cumulative_vol)},
               {"fx_reference_horizon", io::fmt(a.fx.reference_horizon)},
               {"fx_correlation", join(a.correlations)}};
    std::ostringstream csv;
    h.write(csv);
    csv << "fx_correlation,attach,detach,t,base,quanto,adjustment,stderr\n";
    for (double rho : a.correlations) {
        FxSpec fx = a.fx;
        fx.correlation = rho;
        const auto res = quanto_etl(tranche_portfolio, tranches, model, fx, inputs, cfg);
        for (std::size_t k = 0; k < tranches.size(); ++k) {
            for (std::size_t i = 0; i < res.base[k].points.size(); ++i) {
                const auto& b = res.base[k].points[i];
                csv << io::fmt(rho) << ',' << io::fmt(tranches[k].attach) << ',' << io::fmt(tranches[k].detach) << ','
                    << io::fmt(b.t) << ',' << io::fmt(b.etl) << ',' << io::fmt(res.quanto[k].points[i].etl) << ','
                    << io::fmt(res.adjustment[k].points[i].etl) << ','
                    << io::fmt(res.adjustment[k].points[i].std_error) << '\n';
            }
            out << "rho " << io::fmt(rho) << " " << io::fmt(tranches[k].attach) << "-"
                << io::fmt(tranches[k].detach) << " adjustment " << io::fmt(res.adjustment[k].points.back().etl)
                << "\n";
        }
    }
    write_output(a.common, "quanto.csv", csv.str());
    cache.save();
    return kOk;
}

// --- oracle-check ----------------------------------------------------------

struct OracleArgs {
    Common common;
    ModelFiles model;
    std::string portfolio, tranches;
    std::size_t oracle_paths = 1000000;
    std::size_t scenarios = 0;
};

int oracle_check(const OracleArgs& a, std::ostream& out) {
    Inputs in;
    const Model model = load_model(in, a.model);
    const Portfolio portfolio = io::parse_portfolio(in.read("portfolio", a.portfolio));
    const auto tranches = io::parse_tranches(in.read("tranches", a.tranches));
    CacheFile cache(a.common.cache_dir);
    const SamcConfig cfg = samc_config(a.common, cache.get());
    const auto samc = run_samc(portfolio, tranches, model, cfg);
    const auto oracle = run_oracle(portfolio, tranches, model, a.oracle_paths, a.common.seed, a.common.threads);

    std::ostringstream rows;
    rows << "attach,detach,t,samc,samc_stderr,oracle,oracle_stderr,z\n";
    double worst = 0.0;
    for (std::size_t k = 0; k < tranches.size(); ++k) {
        for (const auto& p : samc.curves[k].points) {
            const auto& q = oracle.curves[k].at(p.t);
            // Without oracle hits the sample stderr is zero; fall back to the bound Var <= E[loss] for losses in [0,1].
            const double oracle_se =
                q.std_error > 0.0 ? q.std_error : std::sqrt(p.etl / static_cast<double>(a.oracle_paths));
            const double se = std::hypot(p.std_error, oracle_se);
            const double z = se > 0.0 ? (p.etl - q.etl) / se : 0.0;
            worst = std::max(worst, std::abs(z));
            rows << io::fmt(tranches[k].attach) << ',' << io::fmt(tranches[k].detach) << ',' << io::fmt(p.t) << ','
                 << io::fmt(p.etl) << ',' << io::fmt(p.std_error) << ',' << io::fmt(q.etl) << ','
                 << io::fmt(q.std_error) << ',' << io::fmt(z) << '\n';
        }
    }
    const bool agree = worst <= 3.0;
    auto h = header("oracle-check", a.common, in, cfg.n_paths);
    h.extra = {{"oracle_paths", std::to_string(a.oracle_paths)},
               {"max_abs_z", io::fmt(worst)},
               {"agreement", agree ? "true" : "false"}};
    std::ostringstream csv;
    h.write(csv);
    csv << rows.str();
    write_output(a.common, "oracle.csv", csv.str());

    if (a.scenarios > 0) {
        std::vector<DefaultScenario> kept;
        simulate_scenarios(portfolio, model, oracle.grid, a.scenarios, a.common.seed,
                           [&](const DefaultScenario& s) { kept.push_back(s); });
        auto sh = header("oracle-check", a.common, in, a.scenarios);
        std::ostringstream sc;
        sh.write(sc);
        io::write_scenarios_csv(sc, portfolio, kept);
        write_output(a.common, "scenarios.csv", sc.str());
    }
    out << "agreement: " << (agree ? "true" : "false") << " (max |z| " << io::fmt(worst) << ")\n";
    cache.save();
    return kOk;
}

// --- example ---------------------------------------------------------------

struct ExampleArgs {
    Common common;
    double correlation = 0.5;
    double alpha = 0.2;
    std::uint64_t market_seed = 2009;
};

int example(const ExampleArgs& a, std::ostream& out) {
    const auto desk = synthetic::desk_market(a.alpha, a.market_seed);
    const Model model = desk.model(a.correlation);
    const std::vector<double> points = {0.0, 0.03, 0.07, 0.10, 0.15, 0.30, 0.60};
    const auto tranches = synthetic::tranche_stack(points, 7.0);
    Inputs none;
    auto h = header("example", a.common, none, 0);
    h.extra = {{"correlation", io::fmt(a.correlation)}, {"alpha", io::fmt(a.alpha)}, {"market_seed", std::to_string(a.market_seed)}};
    auto json_file = [&](const std::string& name, const std::string& body) {
        std::ostringstream s;
        h.write(s, "// ");
        s << body << "\n";
        write_output(a.common, name, s.str());
        out << "wrote " << (fs::path(a.common.out_dir) / name).string() << "\n";
    };
    json_file("curves.json", io::dump_curves(desk.curves));
    json_file("linkage.json", io::dump_linkage(desk.linkage));
    json_file("factors.json", io::dump_factors(desk.laws));
    json_file("copula.json", io::dump_copula(model.copula));
    json_file("supermix.json", io::dump_portfolio(desk.supermix));
    json_file("tranches.json", io::dump_tranches(tranches));
    for (std::size_t i = 0; i < desk.indices.size(); ++i) {
        const auto& id = desk.blueprints[i].id;
        std::string lower = id;
        for (auto& ch : lower)
            ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        json_file(lower + ".json", io::dump_portfolio(desk.indices[i]));
        // index targets generated from the synthetic law
        const Model index_model = single_factor_model(desk.laws[i], desk.curves, desk.linkage);
        EtlTargetSurface targets;
        targets.index_id = id;
        targets.tenors = desk.laws[i].tenors();
        for (std::size_t k = 0; k + 1 < points.size(); ++k)
            targets.tranches.push_back({points[k], points[k + 1]});
        targets.etl.assign(targets.tranches.size(), {});
        for (double t : targets.tenors) {
            const PortfolioSlice slice(desk.indices[i], index_model, t);
            for (std::size_t k = 0; k < targets.tranches.size(); ++k)
                targets.etl[k].push_back(
                    model_etl_grid(slice, targets.tranches[k].attach, targets.tranches[k].detach));
        }
        json_file("targets_" + lower + ".json", io::dump_targets(targets));
    }
    return kOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-factor default-indicator copula pricer for bespoke CDO tranches", "dic"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    CalibrateArgs cal;
    auto* c_cal = app.add_subcommand("calibrate", "Fit factor laws to index tranche ETL targets");
    add_common(c_cal, cal.common);
    c_cal->add_option("--curves", cal.curves, "curves.json")->required();
    c_cal->add_option("--linkage", cal.linkage, "linkage.json")->required();
    c_cal->add_option("--targets", cal.targets, "targets.json (repeat, paired with --portfolio)")->required();
    c_cal->add_option("--portfolio", cal.portfolios, "index portfolio.json (repeat)")->required();
    c_cal->add_option("--regularization", cal.regularization, "Curvature penalty weight");
    c_cal->add_option("--max-iterations", cal.max_iterations, "Iterations per tenor");

    PriceArgs pr;
    auto* c_pr = app.add_subcommand("price", "Tranche ETL curves by semi-analytical Monte Carlo");
    add_common(c_pr, pr.common);
    add_model_files(c_pr, pr.model);
    c_pr->add_option("--portfolio", pr.portfolio, "portfolio.json")->required();
    c_pr->add_option("--tranches", pr.tranches, "tranches.json")->required();
    c_pr->add_option("--correlation", pr.correlations, "Uniform factor correlation(s); several values give a sweep")
        ->delimiter(',');
    c_pr->add_flag("--control-variate", pr.control_variate, "Use the comonotone control variate");
    c_pr->add_option("--recovery-override", pr.recovery_override, "Fixed payout recovery for every name")
        ->check(CLI::Range(0.0, 1.0));

    DeltasArgs de;
    auto* c_de = app.add_subcommand("deltas", "Pathwise single-name deltas and index model deltas");
    add_common(c_de, de.common);
    add_model_files(c_de, de.model);
    c_de->add_option("--portfolio", de.portfolio, "portfolio.json")->required();
    c_de->add_option("--tranches", de.tranches, "tranches.json")->required();
    c_de->add_option("--date", de.date, "Horizon (default: first tranche maturity)");
    c_de->add_option("--bump-mode", de.bump_mode, "Index hazard bump for the model delta")
        ->check(CLI::IsMember({"additive", "multiplicative"}));
    c_de->add_option("--bump-size", de.bump_size, "Bump size (default 1e-4 additive, 0.01 multiplicative)");

    QuantoArgs qu;
    auto* c_qu = app.add_subcommand("quanto", "Quanto adjustment through the DCEPL copula");
    add_common(c_qu, qu.common);
    add_model_files(c_qu, qu.model);
    c_qu->add_option("--first", qu.first, "Protection-side index portfolio")->required();
    c_qu->add_option("--second", qu.second, "Other currency zone's index portfolio")->required();
    c_qu->add_option("--portfolio", qu.portfolio, "Tranche portfolio (default: --first)");
    c_qu->add_option("--tranches", qu.tranches, "tranches.json")->required();
    c_qu->add_option("--fx-vol", qu.fx.cumulative_vol, "Lognormal FX volatility at the reference horizon");
    c_qu->add_option("--fx-horizon", qu.fx.reference_horizon, "Reference horizon of --fx-vol");
    c_qu->add_option("--correlation", qu.correlations, "FX/DCEPL correlation(s)")->delimiter(',');

    OracleArgs orc;
    auto* c_or = app.add_subcommand("oracle-check", "Compare SAMC with full default-time simulation");
    add_common(c_or, orc.common);
    add_model_files(c_or, orc.model);
    c_or->add_option("--portfolio", orc.portfolio, "portfolio.json")->required();
    c_or->add_option("--tranches", orc.tranches, "tranches.json")->required();
    c_or->add_option("--oracle-paths", orc.oracle_paths, "Default-time simulation paths");
    c_or->add_option("--scenarios", orc.scenarios, "Write the first N simulated scenarios to scenarios.csv");

    ExampleArgs ex;
    auto* c_ex = app.add_subcommand("example", "Write a synthetic three-index desk market");
    add_common(c_ex, ex.common);
    c_ex->add_option("--correlation", ex.correlation, "Uniform factor correlation of copula.json");
    c_ex->add_option("--alpha", ex.alpha, "Systemic-fraction decay alpha");
    c_ex->add_option("--market-seed", ex.market_seed, "Seed of the synthetic hazards");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*c_cal)
            return calibrate(cal, out);
        if (*c_pr)
            return price(pr, out);
        if (*c_de)
            return deltas(de, out);
        if (*c_qu)
            return quanto(qu, out);
        if (*c_or)
            return oracle_check(orc, out);
        if (*c_ex)
            return example(ex, out);
    } catch (const MissingFile& e) {
        err << "error: " << e.what() << "\n";
        return kMissingFile;
    } catch (const InfeasibleTargets& e) {
        err << "error: infeasible targets: " << e.what() << "\n";
        return kInfeasibleTargets;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInvalidInput;
    }
    return kInvalidInput;
}

} // namespace dic::app
