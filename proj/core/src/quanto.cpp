#include <dic/quanto.hpp>

#include <algorithm>
#include <cmath>
#include <optional>

#include <dic/errors.hpp>
#include <dic/normal.hpp>
#include <dic/parallel.hpp>

namespace dic {

void FxSpec::validate() const {
    DIC_REQUIRE(cumulative_vol >= 0.0 && std::isfinite(cumulative_vol), "FX volatility must be nonnegative");
    DIC_REQUIRE(reference_horizon > 0.0, "FX reference horizon must be positive");
    DIC_REQUIRE(correlation >= -1.0 && correlation <= 1.0, "FX/DCEPL correlation outside [-1,1]");
}

double FxSpec::vol_at(double t) const { return cumulative_vol * std::sqrt(t / reference_horizon); }

namespace {

// Conditional mean loss of a unit-notional portfolio, through its caches when possible.
class MeanLoss {
public:
    explicit MeanLoss(const PortfolioSlice& slice) : slice_(slice) {
        if (slice.many_to_one())
            caches_ = build_caches(slice);
    }
    double operator()(const FactorDraw& draw) const {
        if (slice_.names().empty())
            return 0.0;
        return caches_ ? caches_->at(draw).mean : conditional_moments(slice_, draw).mean;
    }

private:
    const PortfolioSlice& slice_;
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

} // namespace

double dcepl(const PortfolioSlice& first, const PortfolioSlice& second, const FactorDraw& draw) {
    return MeanLoss(first)(draw) - MeanLoss(second)(draw);
}

DceplLaw::DceplLaw(double t, std::vector<double> samples) : t_(t), sorted_(std::move(samples)) {
    DIC_REQUIRE(!sorted_.empty(), "DCEPL law needs samples");
    std::sort(sorted_.begin(), sorted_.end());
}

double DceplLaw::cdf(double value) const {
    const auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), value);
    const auto hi = std::upper_bound(lo, sorted_.end(), value);
    const double n = static_cast<double>(sorted_.size());
    const double rank = static_cast<double>(lo - sorted_.begin()) + 0.5 * static_cast<double>(hi - lo);
    return std::clamp(rank / n, 0.5 / n, 1.0 - 0.5 / n);
}

const DceplLaw& DceplInputs::law_at(double t) const {
    for (const auto& l : laws)
        if (l.t() == t)
            return l;
    DIC_THROW(NotCalibrated, "no DCEPL law at horizon " << t);
}

DceplLaw build_dcepl_law(const Model& model, const Portfolio& first, const Portfolio& second, double t,
                         std::size_t n_paths, std::uint64_t seed, unsigned threads, LinkageCache* cache) {
    DIC_REQUIRE(n_paths > 0, "DCEPL law needs paths");
    LinkageCache local;
    LinkageCache* c = cache ? cache : &local;
    const PortfolioSlice s1(first, model, t, c), s2(second, model, t, c);
    const MeanLoss l1(s1), l2(s2);
    const FactorSampler sampler(model.copula, s1.laws());
    auto blocks = run_blocks(n_paths, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> v;
        v.reserve(end - begin);
        FactorDraw draw;
        for (std::size_t p = begin; p < end; ++p) {
            PathRng rng(seed, Stream::QuantoPass1, horizon_key(t), p);
            sampler.draw(rng, draw);
            v.push_back(l1(draw) - l2(draw));
        }
        return v;
    });
    std::vector<double> all;
    all.reserve(n_paths);
    for (const auto& b : blocks)
        all.insert(all.end(), b.begin(), b.end());
    return DceplLaw(t, std::move(all));
}

DceplInputs build_dcepl_inputs(const Model& model, Portfolio first, Portfolio second,
                               std::span<const TrancheSpec> tranches, const SamcConfig& config) {
    config.validate();
    DceplInputs in{std::move(first), std::move(second), {}};
    for (double t : union_dates(tranches))
        in.laws.push_back(
            build_dcepl_law(model, in.first, in.second, t, config.n_paths, config.seed, config.threads, config.cache));
    return in;
}

QuantoResult quanto_etl(const Portfolio& tranche_portfolio, std::span<const TrancheSpec> tranches,
                        const Model& model, const FxSpec& fx, const DceplInputs& inputs, const SamcConfig& config) {
    fx.validate();
    config.validate();
    DIC_REQUIRE(!tranches.empty() && !tranche_portfolio.empty(), "quanto: need tranches and a portfolio");
    LinkageCache local;
    LinkageCache* cache = config.cache ? config.cache : &local;
    QuantoResult r;
    r.base.resize(tranches.size());
    r.quanto.resize(tranches.size());
    r.adjustment.resize(tranches.size());
    const double rho = fx.correlation, rho_c = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    for (double t : union_dates(tranches)) {
        const DceplLaw& law = inputs.law_at(t);
        std::vector<std::size_t> active;
        for (std::size_t i = 0; i < tranches.size(); ++i)
            if (std::binary_search(tranches[i].payment_grid.begin(), tranches[i].payment_grid.end(), t))
                active.push_back(i);
        const std::size_t m = active.size();
        const PortfolioSlice tr(tranche_portfolio, model, t, cache);
        const PortfolioSlice s1(inputs.first, model, t, cache), s2(inputs.second, model, t, cache);
        const MeanLoss l1(s1), l2(s2);
        std::optional<MomentCaches> caches;
        if (config.use_many_to_one && tr.many_to_one())
            caches = build_caches(tr);
        const FactorSampler sampler(model.copula, tr.laws());
        const double v = fx.vol_at(t);

        auto blocks = run_blocks(config.n_paths, config.threads, [&](std::size_t begin, std::size_t end) {
            std::vector<MomentAccumulator> acc(3 * m);
            FactorDraw draw;
            for (std::size_t p = begin; p < end; ++p) {
                PathRng rng(config.seed, Stream::QuantoPass2, horizon_key(t), p);
                sampler.draw(rng, draw);
                const double eps = rng.normal(); // drawn regardless of rho: common numbers across the sweep
                const double u = law.cdf(l1(draw) - l2(draw));
                const double zfx = rho * normal_inverse_cdf(u) + rho_c * eps;
                const double fx_rate = v > 0.0 ? std::exp(v * zfx - 0.5 * v * v) : 1.0;
                const ConditionalMoments mo = caches ? caches->at(draw) : conditional_moments(tr, draw);
                for (std::size_t i = 0; i < m; ++i) {
                    const auto& spec = tranches[active[i]];
                    const double e = normal_etl(mo, spec.attach, spec.detach);
                    acc[3 * i].add(e);
                    acc[3 * i + 1].add(fx_rate * e);
                    acc[3 * i + 2].add((fx_rate - 1.0) * e);
                }
            }
            return acc;
        });
        std::vector<MomentAccumulator> total(3 * m);
        for (const auto& b : blocks)
            for (std::size_t k = 0; k < 3 * m; ++k)
                total[k].merge(b[k]);
        for (std::size_t i = 0; i < m; ++i) {
            r.base[active[i]].points.push_back({t, total[3 * i].mean, total[3 * i].stderr_of_mean()});
            r.quanto[active[i]].points.push_back({t, total[3 * i + 1].mean, total[3 * i + 1].stderr_of_mean()});
            r.adjustment[active[i]].points.push_back({t, total[3 * i + 2].mean, total[3 * i + 2].stderr_of_mean()});
        }
    }
    return r;
}

} // namespace dic
