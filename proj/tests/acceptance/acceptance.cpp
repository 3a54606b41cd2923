// Acceptance suite: one PASS/FAIL line per criterion at pinned tolerances.
// Exits nonzero if a criterion fails that is not listed in --expected-failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <dic/dt_oracle.hpp>
#include <dic/index_calibration.hpp>
#include <dic/loss_engine.hpp>
#include <dic/quanto.hpp>
#include <dic/samc.hpp>
#include <dic/synthetic.hpp>

#include "oracles.hpp"
#include "acceptance_cli.hpp"

using namespace dic;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string num(double v, const char* f = "%.3g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

const std::vector<double> kDeskPoints = {0.0, 0.03, 0.07, 0.10, 0.15, 0.30, 0.60};

// 100 names on one factor; notionals 1..3 and recoveries 0.2/0.4/0.6 keep losses on a lattice.
struct LatticePortfolio {
    Portfolio portfolio;
    CurveSet curves;
    std::map<std::string, LinkageSpec> specs;
    double unit;
};

LatticePortfolio lattice_portfolio(std::size_t n, const std::string& factor) {
    LatticePortfolio lp;
    std::vector<Constituent> names;
    PathRng rng(77, Stream::Calibration, 0, 0);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const std::string id = "N" + std::to_string(j);
        const double notional = 1.0 + static_cast<double>(j % 3);
        const double recovery = 0.2 * static_cast<double>(1 + (j / 3) % 3);
        const double hazard = 0.005 * std::pow(8.0, rng.uniform());
        lp.curves.emplace(id, synthetic::sloped_curve(id, hazard));
        lp.specs.emplace(id, LinkageSpec(id, {{factor, 1.0}}, 0.5));
        names.push_back({id, notional, RecoverySpec::deterministic(recovery), std::nullopt});
        total += notional;
    }
    lp.portfolio = Portfolio(std::move(names));
    lp.unit = 0.2 / total;
    return lp;
}

Outcome normal_approximation_accuracy() {
    const auto t0 = Clock::now();
    auto lp = lattice_portfolio(100, "F");
    const auto law = synthetic::gamma_law("F", {5.0, 7.0}, 1.2);
    const Model model({law}, FactorCopula::independent({"F"}), lp.specs, lp.curves);
    Outcome out;
    double worst = 0.0;
    for (double t : {5.0, 7.0}) {
        const PortfolioSlice slice(lp.portfolio, model, t);
        for (std::size_t k = 0; k + 1 < kDeskPoints.size(); ++k) {
            const double a = kDeskPoints[k], d = kDeskPoints[k + 1];
            const double approx = model_etl_grid(slice, a, d);
            const double exact = testing::exact_one_factor_etl(slice, lp.unit, a, d);
            worst = std::max(worst, std::abs(approx - exact));
        }
    }
    const double elapsed = seconds_since(t0);
    out.pass = worst <= 1e-3 && elapsed < 60.0;
    out.detail = "max |normal - exact| = " + num(worst) + " (limit 0.001), " + num(elapsed, "%.1f") + " s";
    return out;
}

Outcome samc_matches_oracle() {
    const auto t0 = Clock::now();
    std::vector<Constituent> names;
    CurveSet curves;
    std::map<std::string, LinkageSpec> specs;
    for (int j = 0; j < 10; ++j) {
        const std::string id = "S" + std::to_string(j);
        curves.emplace(id, synthetic::sloped_curve(id, 0.01 + 0.006 * j));
        std::vector<std::pair<std::string, double>> betas;
        if (j < 4)
            betas = {{"A", 1.0}};
        else if (j < 8)
            betas = {{"B", 1.0}};
        else
            betas = {{"A", 0.5}, {"B", 0.5}};
        specs.emplace(id, LinkageSpec(id, betas, 0.3 + 0.05 * j));
        names.push_back({id, 1.0, RecoverySpec::deterministic(0.4), std::nullopt});
    }
    const Portfolio portfolio(std::move(names));
    const Model model({synthetic::gamma_law("A", {5.0, 7.0}, 0.8), synthetic::gamma_law("B", {5.0, 7.0}, 1.5)},
                      FactorCopula::uniform({"A", "B"}, 0.5), specs, curves);
    const auto tranches = synthetic::tranche_stack({0.0, 0.1, 0.3, 1.0}, 7.0);

    SamcConfig cfg;
    cfg.n_paths = 250000;
    cfg.evaluator = std::make_shared<testing::LatticeEvaluator>(0.06);
    const auto samc = run_samc(portfolio, tranches, model, cfg);
    const auto oracle = run_oracle(portfolio, tranches, model, 1000000, cfg.seed);

    Outcome out;
    double worst = 0.0;
    std::size_t cells = 0;
    for (std::size_t k = 0; k < tranches.size(); ++k) {
        for (const auto& p : samc.curves[k].points) {
            const auto& q = oracle.curves[k].at(p.t);
            // A rare tranche may see no oracle hits, leaving a zero sample stderr. Every positive
            // loss is at least x_min, so under agreement Var >= etl * x_min - etl^2 bounds it below.
            const auto& tr = tranches[k];
            const double x_min = (std::floor(tr.attach / 0.06 + 1e-9) + 1.0) * 0.06 - tr.attach;
            const double floor_var = std::max(0.0, p.etl * x_min / tr.width() - p.etl * p.etl) / 1e6;
            const double oracle_se = std::max(q.std_error, std::sqrt(floor_var));
            const double se = std::hypot(p.std_error, oracle_se);
            const double z = se > 0.0 ? std::abs(p.etl - q.etl) / se : (p.etl == q.etl ? 0.0 : 1e9);
            worst = std::max(worst, z);
            ++cells;
        }
    }
    out.pass = worst <= 3.0;
    out.detail = "max |samc - oracle| / combined stderr = " + num(worst) + " over " + std::to_string(cells) +
                 " tranche-dates (limit 3), " + num(seconds_since(t0), "%.1f") + " s";
    // informational: the normal approximation on the same draws
    SamcConfig normal_cfg = cfg;
    normal_cfg.evaluator = nullptr;
    const auto approx = run_samc(portfolio, tranches, model, normal_cfg);
    double dev = 0.0;
    for (std::size_t k = 0; k < tranches.size(); ++k)
        for (std::size_t i = 0; i < approx.curves[k].points.size(); ++i)
            dev = std::max(dev, std::abs(approx.curves[k].points[i].etl - samc.curves[k].points[i].etl));
    out.detail += "; normal approximation deviates by up to " + num(dev) + " on 10 names";
    return out;
}

Outcome desk_stderr() {
    const auto desk = synthetic::desk_market();
    const Model model = desk.model(0.5);
    Outcome out;
    double worst = 0.0, slowest = 0.0;
    for (double maturity : {5.0, 7.0}) {
        std::vector<TrancheSpec> tranches;
        for (std::size_t k = 0; k + 1 < kDeskPoints.size(); ++k)
            tranches.emplace_back(kDeskPoints[k], kDeskPoints[k + 1], maturity, std::vector<double>{maturity});
        SamcConfig cfg;
        const auto t0 = Clock::now();
        const auto res = run_samc(desk.supermix, tranches, model, cfg);
        slowest = std::max(slowest, seconds_since(t0));
        for (const auto& c : res.curves)
            worst = std::max(worst, c.points.back().std_error);
    }
    out.pass = worst <= 1e-3 && slowest <= 5.0;
    out.detail = "max stderr = " + num(worst) + " (limit 0.001), slowest horizon " + num(slowest, "%.2f") + " s";
    return out;
}

Outcome control_variate_reduction() {
    const auto desk = synthetic::desk_market();
    const Model model = desk.model(0.9);
    const auto tranches = synthetic::tranche_stack(kDeskPoints, 5.0);
    SamcConfig cfg;
    cfg.use_control_variate = true;
    const auto res = run_samc(desk.supermix, tranches, model, cfg);
    Outcome out;
    double least = 1e300;
    std::string each;
    for (std::size_t k = 0; k < tranches.size(); ++k) {
        const auto& p = res.curves[k].points.back();
        const double plain = res.plain_std_error[k].back();
        const double factor = p.std_error > 0.0 ? (plain / p.std_error) * (plain / p.std_error) : 1e300;
        least = std::min(least, factor);
        each += (k ? " " : "") + num(factor, "%.2f");
    }
    out.pass = least >= 2.5;
    out.detail = "variance reduction at 5y per tranche [" + each + "], min " + num(least, "%.2f") +
                 " (accept >= 2.5)";
    return out;
}

Outcome correlation_monotonicity() {
    const auto desk = synthetic::desk_market();
    const std::vector<TrancheSpec> tranches = {TrancheSpec(0.0, 0.03, 5.0, {5.0}), TrancheSpec(0.30, 0.60, 5.0, {5.0})};
    std::vector<EtlPoint> equity, senior;
    for (int i = 0; i <= 5; ++i) {
        const auto res = run_samc(desk.supermix, tranches, desk.model(0.2 * i), SamcConfig{});
        equity.push_back(res.curves[0].points.back());
        senior.push_back(res.curves[1].points.back());
    }
    Outcome out;
    double min_eq = 1e300, min_sr = 1e300;
    for (std::size_t i = 1; i < equity.size(); ++i) {
        const double se_e = std::hypot(equity[i].std_error, equity[i - 1].std_error);
        const double se_s = std::hypot(senior[i].std_error, senior[i - 1].std_error);
        min_eq = std::min(min_eq, (equity[i - 1].etl - equity[i].etl) / se_e);
        min_sr = std::min(min_sr, (senior[i].etl - senior[i - 1].etl) / se_s);
    }
    out.pass = min_eq > 3.0 && min_sr > 3.0;
    out.detail = "equity " + num(100 * equity.front().etl, "%.2f") + "% -> " + num(100 * equity.back().etl, "%.2f") +
                 "%, smallest step " + num(min_eq, "%.1f") + " stderr; senior " +
                 num(100 * senior.front().etl, "%.3f") + "% -> " + num(100 * senior.back().etl, "%.3f") +
                 "%, smallest step " + num(min_sr, "%.1f") + " stderr (need > 3)";
    return out;
}

Outcome comonotone_limit() {
    const auto desk = synthetic::desk_market();
    const Model model = desk.model(1.0);
    const auto tranches = synthetic::tranche_stack(kDeskPoints, 7.0);
    const auto res = run_samc(desk.supermix, tranches, model, SamcConfig{});
    double worst = 0.0;
    for (double t : {5.0, 7.0}) {
        const PortfolioSlice slice(desk.supermix, model, t);
        const auto exact = comonotone_etl(slice, tranches);
        for (std::size_t k = 0; k < tranches.size(); ++k) {
            const auto& p = res.curves[k].at(t);
            const double dev = std::abs(p.etl - exact[k]);
            worst = std::max(worst, p.std_error > 0.0 ? dev / p.std_error : (dev < 1e-12 ? 0.0 : 1e9));
        }
    }
    Outcome out;
    out.pass = worst <= 3.0;
    out.detail = "max |samc - exact grid| / stderr = " + num(worst) + " at 5y and 7y (limit 3)";
    return out;
}

// CRN finite difference of the conditional ETL per path with one name's p bumped.
std::pair<double, double> crn_finite_difference(const Portfolio& portfolio, const Model& model,
                                                const TrancheSpec& tranche, double t, std::size_t name,
                                                std::size_t n_paths, std::uint64_t seed, double bump) {
    const auto& id = portfolio.constituents()[name].issuer_id;
    const auto& curve = model.curve(id);
    std::vector<CurvePillar> up, down;
    for (const auto& p : curve.pillars()) {
        up.push_back({p.tenor, p.default_probability});
        down.push_back({p.tenor, p.default_probability});
    }
    // shift p(t) by +-bump through a proportional hazard scaling at date t
    const double p0 = curve.default_probability(t);
    auto scaled = [&](double target) {
        const double s = std::log1p(-target) / std::log1p(-p0);
        return curve.bumped(0.0, s - 1.0);
    };
    const Model m_up = model.with_curve(scaled(p0 + bump));
    const Model m_dn = model.with_curve(scaled(p0 - bump));
    const PortfolioSlice s_up(portfolio, m_up, t), s_dn(portfolio, m_dn, t);
    const FactorSampler sampler(model.copula, model.slices(t));
    MomentAccumulator acc;
    FactorDraw draw;
    for (std::size_t path = 0; path < n_paths; ++path) {
        PathRng rng(seed, Stream::Pricing, horizon_key(t), path);
        sampler.draw(rng, draw);
        const double e_up = normal_etl(conditional_moments(s_up, draw), tranche.attach, tranche.detach);
        const double e_dn = normal_etl(conditional_moments(s_dn, draw), tranche.attach, tranche.detach);
        acc.add((e_up - e_dn) / (2.0 * bump));
    }
    const double lgd = 1.0 - portfolio.constituents()[name].recovery.rate();
    const double scale = portfolio.weight(name) * lgd;
    return {acc.mean / scale, acc.stderr_of_mean() / scale};
}

Outcome delta_positivity() {
    const auto desk = synthetic::desk_market();
    const Model model = desk.model(0.5);
    const auto tranches = synthetic::tranche_stack(kDeskPoints, 5.0);
    SamcConfig cfg;
    cfg.n_paths = 100000;
    const auto reports = pathwise_single_name_deltas(desk.supermix, tranches, model, cfg, 5.0);
    double worst = 1e300;
    for (const auto& r : reports)
        for (const auto& n : r.names)
            worst = std::min(worst, n.std_error > 0.0 ? n.hedge_ratio / n.std_error : (n.hedge_ratio >= 0 ? 1e300 : -1e300));

    // five-name portfolio: pathwise vs CRN finite differences on the same draws
    std::vector<Constituent> names;
    CurveSet curves;
    std::map<std::string, LinkageSpec> specs;
    for (int j = 0; j < 5; ++j) {
        const std::string id = "D" + std::to_string(j);
        curves.emplace(id, synthetic::sloped_curve(id, 0.01 * (j + 1)));
        specs.emplace(id, LinkageSpec(id, {{j % 2 ? "A" : "B", 1.0}}, 0.5));
        names.push_back({id, 1.0 + j, RecoverySpec::deterministic(0.4), std::nullopt});
    }
    const Portfolio small(std::move(names));
    const Model small_model({synthetic::gamma_law("A", {5.0, 7.0}, 1.0), synthetic::gamma_law("B", {5.0, 7.0}, 2.0)},
                            FactorCopula::uniform({"A", "B"}, 0.4), specs, curves);
    const auto small_tranches = synthetic::tranche_stack({0.0, 0.1, 0.25, 1.0}, 5.0);
    SamcConfig small_cfg;
    small_cfg.n_paths = 100000;
    const auto pw = pathwise_single_name_deltas(small, small_tranches, small_model, small_cfg, 5.0);
    double worst_fd = 0.0;
    for (std::size_t k = 0; k < small_tranches.size(); ++k) {
        for (std::size_t j = 0; j < small.size(); ++j) {
            const auto [fd, fd_se] = crn_finite_difference(small, small_model, small_tranches[k], 5.0, j,
                                                           small_cfg.n_paths, small_cfg.seed, 1e-4);
            const auto& n = pw[k].names[j];
            const double se = std::hypot(n.std_error, fd_se);
            worst_fd = std::max(worst_fd, std::abs(n.hedge_ratio - fd) / std::max(se, 1e-12));
        }
    }
    Outcome out;
    out.pass = worst >= -3.0 && worst_fd <= 3.0;
    out.detail = "min hedge ratio / stderr = " + num(worst) + " (need >= -3); max |pathwise - CRN FD| / stderr = " +
                 num(worst_fd) + " (limit 3)";
    return out;
}

Outcome calibration_round_trip() {
    const auto desk = synthetic::desk_market();
    const auto& index = desk.indices[0];
    const auto truth = synthetic::gamma_law("CDX", {5.0, 7.0}, 1.2);
    const Model truth_model = single_factor_model(truth, desk.curves, desk.linkage);
    EtlTargetSurface targets;
    targets.index_id = "CDX";
    targets.tenors = {5.0, 7.0};
    for (std::size_t k = 0; k + 1 < kDeskPoints.size(); ++k)
        targets.tranches.push_back({kDeskPoints[k], kDeskPoints[k + 1]});
    targets.etl.assign(targets.tranches.size(), {});
    for (double t : targets.tenors) {
        const PortfolioSlice slice(index, truth_model, t);
        for (std::size_t k = 0; k < targets.tranches.size(); ++k)
            targets.etl[k].push_back(model_etl_grid(slice, targets.tranches[k].attach, targets.tranches[k].detach));
    }
    CalibrationConfig cfg;
    std::size_t iterates = 0;
    std::string violation;
    cfg.observer = [&](const CalibrationIterate& it) {
        ++iterates;
        std::vector<std::vector<double>> probs;
        for (std::size_t k = 0; k < it.law->tenors().size(); ++k)
            probs.push_back(it.law->probs(k));
        if (violation.empty())
            violation = law_violation(it.law->support(), probs);
    };
    const auto t0 = Clock::now();
    const auto report = calibrate_marginals(index, desk.curves, desk.linkage, targets, cfg);
    Outcome out;
    out.pass = report.max_abs_error() < 5e-4 && violation.empty() && iterates > 0;
    out.detail = "max |fit - target| = " + num(report.max_abs_error()) + " (limit 5e-4), " + std::to_string(iterates) +
                 " iterates checked" + (violation.empty() ? "" : ", violation: " + violation) + ", " +
                 num(seconds_since(t0), "%.1f") + " s";
    return out;
}

Outcome linkage_exactness() {
    const auto desk = synthetic::desk_market();
    const Model model = desk.model(0.5);
    const auto grid = quarterly_grid(7.0);
    double worst_residual = 0.0, worst_tower = 0.0;
    for (const auto& [id, spec] : desk.linkage) {
        const auto cal = calibrate_b(spec, model.curve(id), model.laws, model.copula, grid);
        const auto loadings = resolve_loadings(spec, model.copula);
        for (const auto& p : cal.points()) {
            worst_residual = std::max(worst_residual, std::abs(p.residual));
            const auto s = issuer_systemic_distribution(loadings, model.slices(p.t), model.copula);
            double survival = 0.0;
            for (std::size_t i = 0; i < s.values.size(); ++i)
                survival += s.weights[i] * (1.0 - p.conditional_pd(s.values[i]));
            worst_tower = std::max(worst_tower, std::abs(survival - (1.0 - p.p)));
        }
    }
    Outcome out;
    out.pass = worst_residual < 1e-10 && worst_tower < 1e-8;
    out.detail = "max residual " + num(worst_residual) + " (limit 1e-10), max tower error " + num(worst_tower) +
                 " (limit 1e-8), " + std::to_string(desk.linkage.size()) + " issuers x " +
                 std::to_string(grid.size()) + " dates";
    return out;
}

bool bit_equal(const EtlCurve& a, const EtlCurve& b) {
    if (a.points.size() != b.points.size())
        return false;
    for (std::size_t i = 0; i < a.points.size(); ++i)
        if (std::memcmp(&a.points[i].etl, &b.points[i].etl, sizeof(double)) != 0 ||
            std::memcmp(&a.points[i].std_error, &b.points[i].std_error, sizeof(double)) != 0)
            return false;
    return true;
}

Outcome fixed_recovery() {
    const auto desk = synthetic::desk_market();
    // CDX and ITX share the 40% market recovery
    const Portfolio portfolio = Portfolio::merge({desk.indices[0], desk.indices[1]}, {0.5, 0.5});
    const Model model = desk.model(0.5);
    const auto tranches = synthetic::tranche_stack(kDeskPoints, 5.0);
    SamcConfig cfg;
    cfg.n_paths = 50000;
    bool monotone = true, exact = true;
    for (const auto& tr : tranches) {
        const auto base = price_etl_curve(portfolio, tr, model, cfg);
        exact = exact && bit_equal(base, price_fixed_recovery(portfolio, 0.4, tr, model, cfg));
        EtlCurve prev = price_fixed_recovery(portfolio, 0.0, tr, model, cfg);
        for (double r : {0.2, 0.4, 0.6, 0.8}) {
            const auto cur = price_fixed_recovery(portfolio, r, tr, model, cfg);
            for (std::size_t i = 0; i < cur.points.size(); ++i)
                monotone = monotone && cur.points[i].etl <= prev.points[i].etl;
            prev = cur;
        }
    }
    Outcome out;
    out.pass = monotone && exact;
    out.detail = std::string("override sweep 0..0.8 ") + (monotone ? "pointwise non-increasing" : "NOT monotone") +
                 "; override = market recovery " + (exact ? "bit-identical" : "differs");
    return out;
}

Outcome quanto_adjustment() {
    const auto desk = synthetic::desk_market();
    const Model model = desk.model(0.5);
    // tranches on the protection-side index itself, with its standard attachment points
    const auto tranches = synthetic::tranche_stack({0.0, 0.024, 0.065, 0.096, 0.148, 0.303, 0.612}, 5.0);
    SamcConfig cfg;
    cfg.n_paths = 100000;
    const auto inputs = build_dcepl_inputs(model, desk.indices[0], desk.indices[1], tranches, cfg);
    std::vector<QuantoResult> sweep;
    for (double rho : {0.0, 0.2, 0.4, 0.6, 0.8}) {
        FxSpec fx;
        fx.correlation = rho;
        sweep.push_back(quanto_etl(desk.indices[0], tranches, model, fx, inputs, cfg));
    }
    double zero_z = 0.0;
    bool monotone = true;
    for (std::size_t k = 0; k < tranches.size(); ++k) {
        const auto& adj0 = sweep[0].adjustment[k].points.back();
        zero_z = std::max(zero_z, adj0.std_error > 0 ? std::abs(adj0.etl) / adj0.std_error : 0.0);
        for (std::size_t r = 1; r < sweep.size(); ++r)
            for (std::size_t i = 0; i < sweep[r].adjustment[k].points.size(); ++i)
                monotone = monotone && sweep[r].adjustment[k].points[i].etl >= sweep[r - 1].adjustment[k].points[i].etl;
    }
    const auto rel = [&](std::size_t k) {
        return sweep.back().adjustment[k].points.back().etl / sweep.back().base[k].points.back().etl;
    };
    const double rel_eq = rel(0), rel_sr = rel(tranches.size() - 1);
    Outcome out;
    out.pass = zero_z <= 3.0 && monotone && rel_sr > rel_eq;
    out.detail = "rho=0 max |adj|/stderr " + num(zero_z) + " (limit 3); " +
                 (monotone ? "non-decreasing in rho" : "NOT monotone in rho") + "; relative adj at 0.8: equity " +
                 num(rel_eq) + ", senior " + num(rel_sr);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    // dic_acceptance [--dic PATH] [--only N] [--expected-failures N,M,...]
    std::string dic_binary;
    int only = 0;
    std::vector<int> expected_failures;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i], value = argv[i + 1];
        if (flag == "--dic") {
            dic_binary = value;
        } else if (flag == "--only") {
            only = std::stoi(value);
        } else if (flag == "--expected-failures") {
            std::istringstream ids(value);
            for (std::string id; std::getline(ids, id, ',');)
                expected_failures.push_back(std::stoi(id));
        } else {
            std::fprintf(stderr, "unknown argument %s\n", flag.c_str());
            return 2;
        }
    }
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "normal approximation vs exact convolution", normal_approximation_accuracy},
        {2, "semi-analytical MC vs default-time simulation", samc_matches_oracle},
        {3, "MC error at 250K paths on the desk portfolio", desk_stderr},
        {4, "control variate variance reduction at 90% correlation", control_variate_reduction},
        {5, "factor correlation monotonicity", correlation_monotonicity},
        {6, "comonotone limit vs exact grid", comonotone_limit},
        {7, "single-name delta positivity and finite differences", delta_positivity},
        {8, "factor law calibration round trip", calibration_round_trip},
        {9, "linkage exactness and tower property", linkage_exactness},
        {10, "fixed recovery monotonicity and identity", fixed_recovery},
        {11, "quanto adjustment", quanto_adjustment},
        {12, "byte-identical reruns including 8 threads", [&] {
             auto [pass, detail] = acceptance::determinism(dic_binary);
             return Outcome{pass, detail};
         }},
    };
    int unexpected = 0, known = 0;
    for (const auto& c : criteria) {
        if (only && c.id != only)
            continue;
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
        if (!o.pass) {
            const bool expected =
                std::find(expected_failures.begin(), expected_failures.end(), c.id) != expected_failures.end();
            (expected ? known : unexpected) += 1;
        }
    }
    std::printf("%d unexpected failure(s), %d expected failure(s)\n", unexpected, known);
    return unexpected ? 1 : 0;
}
