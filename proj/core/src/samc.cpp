#include <dic/samc.hpp>

#include <algorithm>
#include <cmath>
#include <optional>

#include <dic/errors.hpp>
#include <dic/normal.hpp>
#include <dic/parallel.hpp>

namespace dic {

void SamcConfig::validate() const {
    DIC_REQUIRE(n_paths >= 1000, "n_paths must be at least 1000 (got " << n_paths << ")");
    DIC_REQUIRE(threads >= 1, "threads must be at least 1");
}

namespace {

using Bounds = std::vector<std::pair<double, double>>;

struct Scratch {
    std::vector<double> pd;
    std::vector<double> lgd;
};

// Conditional ETL of one slice given a draw: cached moments, direct moments, or an injected evaluator.
class ConditionalPricer {
public:
    ConditionalPricer(const PortfolioSlice& slice, const ConditionalTrancheEvaluator* evaluator, bool many_to_one)
        : slice_(slice), evaluator_(evaluator) {
        if (!evaluator_ && many_to_one && slice.many_to_one())
            caches_ = build_caches(slice);
    }

    void etl(const FactorDraw& draw, const Bounds& bounds, std::span<double> out, Scratch& scratch) const {
        if (evaluator_) {
            const auto& names = slice_.names();
            scratch.pd.resize(names.size());
            scratch.lgd.resize(names.size());
            for (std::size_t j = 0; j < names.size(); ++j) {
                scratch.pd[j] = names[j].conditional_pd(draw);
                scratch.lgd[j] = names[j].weight * names[j].payout_lgd(draw);
            }
            for (std::size_t i = 0; i < bounds.size(); ++i)
                out[i] = evaluator_->etl(scratch.pd, scratch.lgd, bounds[i].first, bounds[i].second);
            return;
        }
        const ConditionalMoments m = caches_ ? caches_->at(draw) : conditional_moments(slice_, draw);
        for (std::size_t i = 0; i < bounds.size(); ++i)
            out[i] = normal_etl(m, bounds[i].first, bounds[i].second);
    }

    std::vector<double> comonotone(const Bounds& bounds) const {
        std::vector<double> total(bounds.size(), 0.0), e(bounds.size());
        Scratch scratch;
        FactorDraw draw;
        for (const auto& cell : comonotone_partition(slice_.laws())) {
            draw.t = slice_.t();
            draw.atoms = cell.atoms;
            draw.values.resize(cell.atoms.size());
            for (std::size_t i = 0; i < cell.atoms.size(); ++i)
                draw.values[i] = slice_.laws()[i].support[cell.atoms[i]];
            etl(draw, bounds, e, scratch);
            for (std::size_t i = 0; i < bounds.size(); ++i)
                total[i] += cell.weight * e[i];
        }
        return total;
    }

private:
    const PortfolioSlice& slice_;
    const ConditionalTrancheEvaluator* evaluator_;
    std::optional<MomentCaches> caches_;
};

std::vector<double> union_dates(std::span<const TrancheSpec> tranches) {
    std::vector<double> dates;
    for (const auto& tr : tranches)
        dates.insert(dates.end(), tr.payment_grid.begin(), tr.payment_grid.end());
    std::sort(dates.begin(), dates.end());
    dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
    return dates;
}

bool on_grid(const TrancheSpec& tr, double t) {
    return std::binary_search(tr.payment_grid.begin(), tr.payment_grid.end(), t);
}

} // namespace

SamcResult run_samc(const Portfolio& portfolio, std::span<const TrancheSpec> tranches, const Model& model,
                    const SamcConfig& config) {
    config.validate();
    DIC_REQUIRE(!tranches.empty(), "run_samc: no tranches");
    DIC_REQUIRE(!portfolio.empty(), "run_samc: empty portfolio");
    LinkageCache local_cache;
    LinkageCache* cache = config.cache ? config.cache : &local_cache;

    SamcResult result;
    result.curves.resize(tranches.size());
    result.plain_std_error.resize(tranches.size());
    for (double t : union_dates(tranches)) {
        std::vector<std::size_t> active;
        Bounds bounds;
        for (std::size_t i = 0; i < tranches.size(); ++i)
            if (on_grid(tranches[i], t)) {
                active.push_back(i);
                bounds.emplace_back(tranches[i].attach, tranches[i].detach);
            }
        const std::size_t m = active.size();
        const PortfolioSlice slice(portfolio, model, t, cache);
        const ConditionalPricer pricer(slice, config.evaluator.get(), config.use_many_to_one);
        const FactorSampler sampler(slice.copula(), slice.laws());
        const std::size_t nf = sampler.size();
        std::vector<double> exact;
        if (config.use_control_variate) {
            DIC_REQUIRE(slice.copula().sum_stdev() > 0.0, "control variate needs a copula with var(1'z) > 0");
            exact = pricer.comonotone(bounds);
        }
        const double sum_sd = slice.copula().sum_stdev();

        auto blocks = run_blocks(config.n_paths, config.threads, [&](std::size_t begin, std::size_t end) {
            std::vector<MomentAccumulator> acc(2 * m);
            Scratch scratch;
            FactorDraw draw, proxy;
            std::vector<double> z(nf), u_proxy(nf), e(m), e_proxy(m);
            for (std::size_t path = begin; path < end; ++path) {
                PathRng rng(config.seed, Stream::Pricing, horizon_key(t), path);
                sampler.draw(rng, draw, z);
                pricer.etl(draw, bounds, e, scratch);
                if (config.use_control_variate) {
                    double s = 0.0;
                    for (double zi : z)
                        s += zi;
                    std::fill(u_proxy.begin(), u_proxy.end(), normal_cdf(s / sum_sd));
                    sampler.from_uniforms(u_proxy, proxy);
                    pricer.etl(proxy, bounds, e_proxy, scratch);
                    for (std::size_t i = 0; i < m; ++i)
                        acc[i].add(e[i] - e_proxy[i] + exact[i]);
                } else {
                    for (std::size_t i = 0; i < m; ++i)
                        acc[i].add(e[i]);
                }
                for (std::size_t i = 0; i < m; ++i)
                    acc[m + i].add(e[i]);
            }
            return acc;
        });
        std::vector<MomentAccumulator> total(2 * m);
        for (const auto& b : blocks)
            for (std::size_t i = 0; i < 2 * m; ++i)
                total[i].merge(b[i]);
        for (std::size_t i = 0; i < m; ++i) {
            result.curves[active[i]].points.push_back(
                {t, std::clamp(total[i].mean, 0.0, 1.0), total[i].stderr_of_mean()});
            result.plain_std_error[active[i]].push_back(total[m + i].stderr_of_mean());
        }
    }
    return result;
}

EtlCurve price_etl_curve(const Portfolio& portfolio, const TrancheSpec& tranche, const Model& model,
                         const SamcConfig& config) {
    return run_samc(portfolio, {&tranche, 1}, model, config).curves.front();
}

EtlCurve price_with_control_variate(const Portfolio& portfolio, const TrancheSpec& tranche, const Model& model,
                                    SamcConfig config) {
    config.use_control_variate = true;
    return price_etl_curve(portfolio, tranche, model, config);
}

EtlCurve price_fixed_recovery(const Portfolio& portfolio, double override_rate, const TrancheSpec& tranche,
                              const Model& model, const SamcConfig& config) {
    return price_etl_curve(portfolio.with_recovery_override(override_rate), tranche, model, config);
}

std::vector<double> comonotone_etl(const PortfolioSlice& slice, std::span<const TrancheSpec> tranches) {
    Bounds bounds;
    for (const auto& tr : tranches)
        bounds.emplace_back(tr.attach, tr.detach);
    return ConditionalPricer(slice, nullptr, true).comonotone(bounds);
}

double comonotone_etl(const PortfolioSlice& slice, double attach, double detach) {
    DIC_REQUIRE(attach >= 0.0 && attach < detach && detach <= 1.0, "bad tranche bounds");
    return ConditionalPricer(slice, nullptr, true).comonotone({{attach, detach}}).front();
}

std::vector<DeltaReport> pathwise_single_name_deltas(const Portfolio& portfolio,
                                                     std::span<const TrancheSpec> tranches, const Model& model,
                                                     const SamcConfig& config, double t) {
    config.validate();
    DIC_REQUIRE(!tranches.empty() && !portfolio.empty(), "deltas: need tranches and a non-empty portfolio");
    LinkageCache local_cache;
    const PortfolioSlice slice(portfolio, model, t, config.cache ? config.cache : &local_cache);
    const FactorSampler sampler(slice.copula(), slice.laws());
    const auto& names = slice.names();
    const std::size_t n = names.size(), m = tranches.size();

    struct Partial {
        std::vector<MomentAccumulator> grad; // [tranche * n + name]
        std::vector<MomentAccumulator> el;   // d(name EL)/dp per path
    };
    auto blocks = run_blocks(config.n_paths, config.threads, [&](std::size_t begin, std::size_t end) {
        Partial part{std::vector<MomentAccumulator>(m * n), std::vector<MomentAccumulator>(n)};
        FactorDraw draw;
        std::vector<double> dmu(n), dvar(n);
        for (std::size_t path = begin; path < end; ++path) {
            PathRng rng(config.seed, Stream::Pricing, horizon_key(t), path);
            sampler.draw(rng, draw);
            ConditionalMoments mo;
            for (std::size_t j = 0; j < n; ++j) {
                const double s = names[j].systemic_value(draw);
                const double p = names[j].link.conditional_pd(s);
                const double dp = names[j].link.conditional_pd_sensitivity(s);
                const double loss = names[j].weight * names[j].payout_lgd(draw);
                mo.mean += loss * p;
                mo.variance += loss * loss * p * (1.0 - p);
                dmu[j] = loss * dp;
                dvar[j] = loss * loss * (1.0 - 2.0 * p) * dp;
                part.el[j].add(names[j].weight * names[j].market_lgd(draw) * dp);
            }
            for (std::size_t i = 0; i < m; ++i) {
                const auto sens = normal_etl_sensitivity(mo, tranches[i].attach, tranches[i].detach);
                for (std::size_t j = 0; j < n; ++j)
                    part.grad[i * n + j].add(sens.d_mean * dmu[j] + sens.d_variance * dvar[j]);
            }
        }
        return part;
    });
    Partial total{std::vector<MomentAccumulator>(m * n), std::vector<MomentAccumulator>(n)};
    for (const auto& b : blocks) {
        for (std::size_t k = 0; k < m * n; ++k)
            total.grad[k].merge(b.grad[k]);
        for (std::size_t j = 0; j < n; ++j)
            total.el[j].merge(b.el[j]);
    }
    std::vector<DeltaReport> out;
    for (std::size_t i = 0; i < m; ++i) {
        DeltaReport r{t, tranches[i].attach, tranches[i].detach, {}};
        for (std::size_t j = 0; j < n; ++j) {
            // deterministic recoveries: d(w (1-R) p)/dp is known exactly
            const double denom =
                names[j].deterministic ? names[j].weight * names[j].lgd_market : total.el[j].mean;
            const auto& g = total.grad[i * n + j];
            const double ratio = denom > 0.0 ? g.mean / denom : 0.0;
            const double se = denom > 0.0 ? g.stderr_of_mean() / denom : 0.0;
            r.names.push_back({portfolio.constituents()[j].issuer_id, ratio, se});
        }
        out.push_back(std::move(r));
    }
    return out;
}

Model bump_model(const Model& model, const Portfolio& portfolio, BumpMode mode, double bump_size) {
    Model bumped = model;
    for (const auto& c : portfolio.constituents()) {
        const auto& curve = model.curve(c.issuer_id);
        bumped.curves.insert_or_assign(c.issuer_id, mode == BumpMode::Additive ? curve.bumped(bump_size, 0.0)
                                                                               : curve.bumped(0.0, bump_size));
    }
    return bumped;
}

ModelDelta index_model_delta(const Portfolio& index_portfolio, const TrancheSpec& tranche, const Model& model,
                             BumpMode mode, double bump_size, double t, const SamcConfig& config) {
    const Model bumped = bump_model(model, index_portfolio, mode, bump_size);
    LinkageCache local_cache;
    LinkageCache* cache = config.cache ? config.cache : &local_cache;
    const PortfolioSlice base_slice(index_portfolio, model, t, cache);
    std::vector<bool> used(model.copula.size(), false);
    for (const auto& n : base_slice.names())
        for (const auto& l : n.loadings)
            used[l.factor] = true;
    const bool single_factor = std::count(used.begin(), used.end(), true) <= 1 && base_slice.many_to_one();

    double etl_change;
    if (single_factor) {
        const PortfolioSlice bumped_slice(index_portfolio, bumped, t, cache);
        etl_change = comonotone_etl(bumped_slice, tranche.attach, tranche.detach) -
                     comonotone_etl(base_slice, tranche.attach, tranche.detach);
    } else {
        const TrancheSpec at_t(tranche.attach, tranche.detach, t, {t});
        SamcConfig c = config;
        c.cache = cache;
        etl_change = price_etl_curve(index_portfolio, at_t, bumped, c).points.back().etl -
                     price_etl_curve(index_portfolio, at_t, model, c).points.back().etl;
    }
    const double el_change = expected_loss(index_portfolio, bumped, t, cache) - expected_loss(index_portfolio, model, t, cache);
    DIC_REQUIRE(el_change != 0.0, "index model delta: bump leaves the index expected loss unchanged");
    return {etl_change / el_change, etl_change, el_change};
}

} // namespace dic
