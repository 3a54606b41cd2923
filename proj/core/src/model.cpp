#include <dic/model.hpp>

#include <algorithm>
#include <filesystem>
#include <numeric>

#include <dic/errors.hpp>
#include <dic/io.hpp>

#include "hash.hpp"

namespace dic {

Model::Model(std::vector<MarginalFactorLaw> laws_, FactorCopula copula_, std::map<std::string, LinkageSpec> linkage_,
             CurveSet curves_)
    : laws(std::move(laws_)), copula(std::move(copula_)), linkage(std::move(linkage_)), curves(std::move(curves_)) {
    DIC_REQUIRE(laws.size() == copula.size(), "model: " << laws.size() << " factor laws for " << copula.size()
                                                        << " copula factors");
    for (std::size_t i = 0; i < laws.size(); ++i)
        DIC_REQUIRE(laws[i].factor_id() == copula.factor_ids()[i],
                    "model: law " << laws[i].factor_id() << " out of copula order (expected "
                                  << copula.factor_ids()[i] << ")");
    for (const auto& [id, spec] : linkage)
        resolve_loadings(spec, copula); // rejects unknown factors early
}

std::vector<LawSlice> Model::slices(double t) const {
    std::vector<LawSlice> out;
    out.reserve(laws.size());
    for (const auto& law : laws)
        out.push_back(law.at(t, extrapolate_laws));
    return out;
}

const LinkageSpec& Model::spec(const std::string& issuer_id) const {
    const auto it = linkage.find(issuer_id);
    if (it == linkage.end())
        DIC_THROW(NotCalibrated, "no linkage spec for issuer " << issuer_id);
    return it->second;
}

std::uint64_t Model::factor_hash() const {
    detail::Fnv1a h;
    h.u64(extrapolate_laws ? 1 : 0);
    for (const auto& law : laws) {
        h.bytes(law.factor_id());
        for (double t : law.tenors())
            h.f64(t);
        for (double x : law.support())
            h.f64(x);
        for (const auto& q : law.all_probs())
            for (double v : q)
                h.f64(v);
    }
    for (const auto& row : copula.correlation())
        for (double c : row)
            h.f64(c);
    return h.value();
}

Model Model::with_copula(FactorCopula c) const {
    Model m(laws, std::move(c), linkage, curves);
    m.extrapolate_laws = extrapolate_laws;
    return m;
}

Model Model::with_curve(const CreditCurve& curve) const {
    Model m = *this;
    m.curves.insert_or_assign(curve.issuer_id(), curve);
    return m;
}

namespace {

LinkagePoint calibrate_point(const Model& model, const std::string& issuer_id, double t,
                             const std::vector<LawSlice>& slices) {
    const auto& spec = model.spec(issuer_id);
    const auto loadings = resolve_loadings(spec, model.copula);
    const double h = model.curve(issuer_id).cumulative_hazard(t);
    const double gamma = spec.idiosyncratic_only() ? 0.0 : systemic_fraction(spec.alpha(), h);
    return link_point(t, h, gamma, spec.alpha(), issuer_systemic_distribution(loadings, slices, model.copula),
                      issuer_id);
}

} // namespace

std::string LinkageCache::key(const Model& model, const std::string& issuer_id, double t) {
    detail::Fnv1a h;
    h.u64(model.factor_hash());
    const auto& spec = model.spec(issuer_id);
    h.bytes(issuer_id);
    h.f64(spec.alpha());
    for (const auto& [f, beta] : spec.betas()) {
        h.bytes(f);
        h.f64(beta);
    }
    for (const auto& p : model.curve(issuer_id).pillars()) {
        h.f64(p.tenor);
        h.f64(p.default_probability);
    }
    h.f64(t);
    return issuer_id + "@" + io::hex64(h.value());
}

LinkagePoint LinkageCache::get_or_calibrate(const Model& model, const std::string& issuer_id, double t,
                                            const std::vector<LawSlice>& slices) {
    const std::string k = key(model, issuer_id, t);
    {
        std::lock_guard lock(mutex_);
        if (const auto it = entries_.find(k); it != entries_.end())
            return it->second;
    }
    LinkagePoint p = calibrate_point(model, issuer_id, t, slices);
    std::lock_guard lock(mutex_);
    ++misses_;
    entries_.emplace(k, p);
    return p;
}

std::size_t LinkageCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

void LinkageCache::save(const std::string& path) const {
    std::lock_guard lock(mutex_);
    io::write_file(path, io::dump_linkage_points(entries_));
}

void LinkageCache::load(const std::string& path) {
    if (!std::filesystem::exists(path))
        return;
    auto loaded = io::parse_linkage_points(io::read_file(path));
    std::lock_guard lock(mutex_);
    for (auto& [k, v] : loaded)
        entries_.insert_or_assign(k, v);
}

double NameSlice::systemic_value(const FactorDraw& draw) const {
    double s = 0.0;
    for (const auto& l : loadings)
        s += l.beta * draw.values[l.factor];
    return s;
}

double NameSlice::payout_lgd(const FactorDraw& draw) const {
    if (payout_fixed)
        return lgd_payout;
    return 1.0 - recovery->at(draw.values);
}

double NameSlice::market_lgd(const FactorDraw& draw) const {
    return deterministic ? lgd_market : 1.0 - recovery->at(draw.values);
}

PortfolioSlice::PortfolioSlice(const Portfolio& portfolio, const Model& model, double t, LinkageCache* cache)
    : portfolio_(&portfolio), t_(t), laws_(model.slices(t)), copula_(model.copula) {
    names_.reserve(portfolio.size());
    for (std::size_t j = 0; j < portfolio.size(); ++j) {
        const auto& c = portfolio.constituents()[j];
        NameSlice n;
        n.index = j;
        n.weight = portfolio.weight(j);
        n.recovery = &c.recovery;
        n.deterministic = c.recovery.is_deterministic();
        n.lgd_market = n.deterministic ? 1.0 - c.recovery.rate() : 0.0;
        n.lgd_payout = c.recovery_override ? 1.0 - *c.recovery_override : n.lgd_market;
        n.payout_fixed = n.deterministic || c.recovery_override.has_value();
        n.loadings = resolve_loadings(model.spec(c.issuer_id), copula_);
        n.link = cache ? cache->get_or_calibrate(model, c.issuer_id, t, laws_)
                       : calibrate_point(model, c.issuer_id, t, laws_);
        if (n.loadings.size() > 1 || !n.payout_fixed)
            many_to_one_ = false;
        names_.push_back(std::move(n));
    }
}

double expected_loss(const Portfolio& portfolio, const Model& model, double t, LinkageCache* cache) {
    if (!portfolio.has_conditional_recovery())
        return portfolio_expected_loss(portfolio, model.curves, t);
    const PortfolioSlice slice(portfolio, model, t, cache);
    std::vector<std::size_t> all(model.copula.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const FactorQuadrature q = build_quadrature(model.copula, slice.laws(), all);
    FactorDraw draw;
    return expectation(q, [&](std::span<const double> x) {
        draw.values.assign(x.begin(), x.end());
        double el = 0.0;
        for (const auto& n : slice.names())
            el += n.weight * n.market_lgd(draw) * n.conditional_pd(draw);
        return el;
    });
}

} // namespace dic
