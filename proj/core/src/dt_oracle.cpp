#include <dic/dt_oracle.hpp>

#include <algorithm>
#include <cmath>
#include <optional>

#include <dic/errors.hpp>
#include <dic/normal.hpp>
#include <dic/parallel.hpp>

namespace dic {

namespace {

constexpr double kProfileTol = 1e-12;

std::vector<double> union_grid(std::span<const TrancheSpec> tranches) {
    std::vector<double> g;
    for (const auto& tr : tranches)
        g.insert(g.end(), tr.payment_grid.begin(), tr.payment_grid.end());
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

} // namespace

DefaultTimeSimulator::DefaultTimeSimulator(const Portfolio& portfolio, const Model& model,
                                           std::vector<double> horizon_grid, LinkageCache* cache)
    : portfolio_(&portfolio), grid_(std::move(horizon_grid)), copula_(model.copula), n_names_(portfolio.size()) {
    DIC_REQUIRE(!grid_.empty(), "oracle: empty horizon grid");
    for (std::size_t k = 0; k < grid_.size(); ++k)
        DIC_REQUIRE(grid_[k] > (k == 0 ? 0.0 : grid_[k - 1]), "oracle: horizon grid must be positive and increasing");
    LinkageCache local;
    slices_.reserve(grid_.size());
    for (double t : grid_)
        slices_.emplace_back(portfolio, model, t, cache ? cache : &local);
}

void DefaultTimeSimulator::simulate(std::uint64_t seed, std::size_t path, DefaultScenario& out) const {
    PathRng rng(seed, Stream::Oracle, 0, path);
    const std::size_t nf = copula_.size();
    std::vector<double> eps(nf), z(nf), u(nf);
    for (auto& e : eps)
        e = rng.normal();
    copula_.correlate(eps, z);
    for (std::size_t i = 0; i < nf; ++i)
        u[i] = std::clamp(normal_cdf(z[i]), kUniformClamp, 1.0 - kUniformClamp);
    std::vector<double> v(n_names_);
    for (auto& x : v)
        x = rng.uniform();

    out.path = path;
    out.default_times.assign(n_names_, kNoDefault);
    out.recoveries.assign(n_names_, 0.0);
    std::vector<double> previous(n_names_, 0.0), last_x(nf, 0.0);
    FactorDraw draw;
    draw.values.resize(nf);
    draw.atoms.resize(nf);
    draw.uniforms = u;
    for (std::size_t k = 0; k < grid_.size(); ++k) {
        const auto& slice = slices_[k];
        draw.t = grid_[k];
        for (std::size_t i = 0; i < nf; ++i) {
            const std::size_t a = slice.laws()[i].inverse_cdf_index(u[i]);
            draw.atoms[i] = static_cast<std::uint32_t>(a);
            draw.values[i] = slice.laws()[i].support[a];
            if (draw.values[i] < last_x[i])
                DIC_THROW(ValidationError, "oracle path " << path << ": factor " << copula_.factor_ids()[i]
                                                          << " decreases at t = " << grid_[k]);
            last_x[i] = draw.values[i];
        }
        for (std::size_t j = 0; j < n_names_; ++j) {
            const auto& name = slice.names()[j];
            const double p = name.conditional_pd(draw);
            if (p < previous[j] - kProfileTol)
                DIC_THROW(ValidationError, "oracle path " << path << ": conditional default profile of "
                                                          << portfolio_->constituents()[j].issuer_id
                                                          << " decreases from " << previous[j] << " to " << p
                                                          << " at t = " << grid_[k] << " (b = " << name.link.b
                                                          << ", systemic value " << name.systemic_value(draw) << ")");
            previous[j] = std::max(previous[j], p);
            if (out.default_times[j] == kNoDefault && v[j] <= previous[j]) {
                out.default_times[j] = grid_[k];
                out.recoveries[j] = 1.0 - name.payout_lgd(draw);
            }
        }
    }
}

void simulate_scenarios(const Portfolio& portfolio, const Model& model, const std::vector<double>& horizon_grid,
                        std::size_t n_paths, std::uint64_t seed,
                        const std::function<void(const DefaultScenario&)>& sink) {
    const DefaultTimeSimulator sim(portfolio, model, horizon_grid);
    DefaultScenario s;
    for (std::size_t p = 0; p < n_paths; ++p) {
        sim.simulate(seed, p, s);
        sink(s);
    }
}

OracleAccumulator::OracleAccumulator(const Portfolio& portfolio, std::span<const TrancheSpec> tranches,
                                     std::vector<double> grid)
    : portfolio_(&portfolio), tranches_(tranches.begin(), tranches.end()), grid_(std::move(grid)) {
    tranche_loss_.assign(tranches_.size(), std::vector<MomentAccumulator>(grid_.size()));
    default_counts_.assign(portfolio.size(), std::vector<double>(grid_.size(), 0.0));
    losses_.resize(grid_.size());
}

void OracleAccumulator::add(const DefaultScenario& s) {
    std::fill(losses_.begin(), losses_.end(), 0.0);
    for (std::size_t j = 0; j < portfolio_->size(); ++j) {
        if (s.default_times[j] == kNoDefault)
            continue;
        const double loss = portfolio_->weight(j) * (1.0 - s.recoveries[j]);
        for (std::size_t k = 0; k < grid_.size(); ++k)
            if (s.default_times[j] <= grid_[k]) {
                losses_[k] += loss;
                default_counts_[j][k] += 1.0;
            }
    }
    for (std::size_t i = 0; i < tranches_.size(); ++i) {
        const double a = tranches_[i].attach, d = tranches_[i].detach;
        for (std::size_t k = 0; k < grid_.size(); ++k)
            tranche_loss_[i][k].add(std::clamp(losses_[k] - a, 0.0, d - a) / (d - a));
    }
    paths_ += 1.0;
}

void OracleAccumulator::merge(const OracleAccumulator& o) {
    for (std::size_t i = 0; i < tranche_loss_.size(); ++i)
        for (std::size_t k = 0; k < grid_.size(); ++k)
            tranche_loss_[i][k].merge(o.tranche_loss_[i][k]);
    for (std::size_t j = 0; j < default_counts_.size(); ++j)
        for (std::size_t k = 0; k < grid_.size(); ++k)
            default_counts_[j][k] += o.default_counts_[j][k];
    paths_ += o.paths_;
}

std::vector<EtlCurve> OracleAccumulator::curves() const {
    std::vector<EtlCurve> out(tranches_.size());
    for (std::size_t i = 0; i < tranches_.size(); ++i)
        for (std::size_t k = 0; k < grid_.size(); ++k)
            if (std::binary_search(tranches_[i].payment_grid.begin(), tranches_[i].payment_grid.end(), grid_[k]))
                out[i].points.push_back({grid_[k], tranche_loss_[i][k].mean, tranche_loss_[i][k].stderr_of_mean()});
    return out;
}

double OracleAccumulator::default_frequency(std::size_t name, std::size_t date) const {
    return paths_ > 0.0 ? default_counts_.at(name).at(date) / paths_ : 0.0;
}

OracleResult run_oracle(const Portfolio& portfolio, std::span<const TrancheSpec> tranches, const Model& model,
                        std::size_t n_paths, std::uint64_t seed, unsigned threads) {
    DIC_REQUIRE(!tranches.empty() && n_paths > 0, "oracle: need tranches and paths");
    const auto grid = union_grid(tranches);
    const DefaultTimeSimulator sim(portfolio, model, grid);
    auto blocks = run_blocks(n_paths, threads, [&](std::size_t begin, std::size_t end) {
        OracleAccumulator acc(portfolio, tranches, grid);
        DefaultScenario s;
        for (std::size_t p = begin; p < end; ++p) {
            sim.simulate(seed, p, s);
            acc.add(s);
        }
        return std::optional<OracleAccumulator>(std::move(acc));
    });
    OracleAccumulator total(portfolio, tranches, grid);
    for (const auto& b : blocks)
        total.merge(*b);
    OracleResult r{total.curves(), grid, {}};
    r.default_frequency.assign(portfolio.size(), std::vector<double>(grid.size()));
    for (std::size_t j = 0; j < portfolio.size(); ++j)
        for (std::size_t k = 0; k < grid.size(); ++k)
            r.default_frequency[j][k] = total.default_frequency(j, k);
    return r;
}

std::vector<EtlCurve> oracle_etl(const std::vector<DefaultScenario>& scenarios, const Portfolio& portfolio,
                                 std::span<const TrancheSpec> tranches, const std::vector<double>& grid) {
    OracleAccumulator acc(portfolio, tranches, grid);
    for (const auto& s : scenarios) {
        DIC_REQUIRE(s.default_times.size() == portfolio.size(), "scenario does not match the portfolio");
        acc.add(s);
    }
    return acc.curves();
}

} // namespace dic
