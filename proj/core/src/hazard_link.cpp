#include <dic/hazard_link.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <dic/errors.hpp>

namespace dic {

double systemic_fraction(double alpha, double h) {
    DIC_REQUIRE(alpha > 0.0, "alpha must be positive");
    DIC_REQUIRE(h >= 0.0, "cumulative hazard must be nonnegative");
    const double x = alpha * h;
    if (x < 1e-8)
        return 1.0 - x / 2.0 + x * x / 6.0;
    return -std::expm1(-x) / x;
}

double idiosyncratic_factor(double gamma, double p) {
    DIC_REQUIRE(gamma >= 0.0 && gamma <= 1.0, "gamma " << gamma << " outside [0,1]");
    DIC_REQUIRE(p >= 0.0 && p < 1.0, "probability " << p << " outside [0,1)");
    return std::exp((1.0 - gamma) * std::log1p(-p));
}

LinkageSpec::LinkageSpec(std::string issuer_id, std::vector<std::pair<std::string, double>> betas, double alpha)
    : issuer_id_(std::move(issuer_id)), alpha_(alpha) {
    DIC_REQUIRE(alpha > 0.0 && std::isfinite(alpha), "issuer " << issuer_id_ << ": alpha must be positive");
    std::set<std::string> seen;
    double total = 0.0;
    for (auto& [factor, beta] : betas) {
        DIC_REQUIRE(seen.insert(factor).second, "issuer " << issuer_id_ << ": factor " << factor << " listed twice");
        DIC_REQUIRE(beta >= 0.0 && std::isfinite(beta), "issuer " << issuer_id_ << ": negative loading on " << factor);
        if (beta > 0.0) {
            betas_.emplace_back(factor, beta);
            total += beta;
        }
    }
    for (auto& b : betas_)
        b.second /= total;
}

std::vector<Loading> resolve_loadings(const LinkageSpec& spec, const FactorCopula& copula) {
    std::vector<Loading> out;
    for (const auto& [factor, beta] : spec.betas())
        out.push_back({static_cast<std::uint32_t>(copula.index_of(factor)), beta});
    std::sort(out.begin(), out.end(), [](const Loading& a, const Loading& b) { return a.factor < b.factor; });
    return out;
}

double LinkagePoint::c() const { return std::exp(log_c()); }

double LinkagePoint::conditional_pd(double s) const { return -std::expm1(log_c() - b * s); }

double LinkagePoint::conditional_pd_sensitivity(double s) const {
    const double survival_ratio = std::exp(log_c() - b * s) / (1.0 - p);
    if (gamma == 0.0)
        return survival_ratio;
    // d log(1 - p_cond) / dh = -(1 - e^{-alpha h}) - s db/dh, with db/dh = e^{-alpha h} / tilted_mean
    const double decay = std::exp(-alpha * h);
    const double systemic = tilted_mean > 0.0 ? s * decay / tilted_mean : 0.0;
    return survival_ratio * ((1.0 - decay) + systemic);
}

SystemicDistribution systemic_distribution(const FactorQuadrature& quadrature, const std::vector<Loading>& loadings,
                                           const std::vector<std::size_t>& quadrature_factors) {
    std::vector<std::size_t> pos;
    for (const auto& l : loadings) {
        const auto it = std::find(quadrature_factors.begin(), quadrature_factors.end(), l.factor);
        DIC_REQUIRE(it != quadrature_factors.end(), "loading on a factor outside the quadrature");
        pos.push_back(static_cast<std::size_t>(it - quadrature_factors.begin()));
    }
    std::vector<std::pair<double, double>> vw;
    vw.reserve(quadrature.size());
    for (std::size_t k = 0; k < quadrature.size(); ++k) {
        const auto x = quadrature.point(k);
        double s = 0.0;
        for (std::size_t i = 0; i < loadings.size(); ++i)
            s += loadings[i].beta * x[pos[i]];
        vw.emplace_back(s, quadrature.weights[k]);
    }
    std::sort(vw.begin(), vw.end());
    SystemicDistribution out;
    for (const auto& [s, w] : vw) {
        if (!out.values.empty() && out.values.back() == s)
            out.weights.back() += w;
        else {
            out.values.push_back(s);
            out.weights.push_back(w);
        }
    }
    return out;
}

namespace {

struct LogMgf {
    double value;       // log E[e^{-bS}]
    double tilted_mean; // E[S e^{-bS}] / E[e^{-bS}]
};

// Values are sorted ascending, so the first one is the minimum used for log-sum-exp.
LogMgf log_mgf(const SystemicDistribution& s, double total_weight, double b) {
    const double s0 = s.values.front();
    double z = 0.0, zs = 0.0;
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        const double e = s.weights[k] * std::exp(-b * (s.values[k] - s0));
        z += e;
        zs += e * s.values[k];
    }
    return {-b * s0 + std::log(z / total_weight), zs / z};
}

} // namespace

double solve_systemic_scale(const SystemicDistribution& s, double budget, double* tilted_mean, double* residual) {
    DIC_REQUIRE(!s.values.empty() && s.values.size() == s.weights.size(), "empty systemic distribution");
    DIC_REQUIRE(budget >= 0.0 && std::isfinite(budget), "systemic budget must be nonnegative");
    const double total = std::accumulate(s.weights.begin(), s.weights.end(), 0.0);
    const auto report = [&](double b) {
        const LogMgf f = log_mgf(s, total, b);
        if (tilted_mean)
            *tilted_mean = f.tilted_mean;
        if (residual)
            *residual = f.value + budget;
        return b;
    };
    if (budget == 0.0)
        return report(0.0);
    double mass_at_zero = 0.0;
    for (std::size_t k = 0; k < s.values.size() && s.values[k] <= 0.0; ++k)
        mass_at_zero += s.weights[k];
    mass_at_zero /= total;
    if (mass_at_zero > 0.0 && budget >= -std::log(mass_at_zero))
        DIC_THROW(RootNotBracketed, "systemic budget " << budget << " unattainable: the factor law puts mass "
                                                       << mass_at_zero << " at zero, so -log E[e^{-bS}] < "
                                                       << -std::log(mass_at_zero) << " for every b");
    // f(b) = log E[e^{-bS}] + budget is convex and decreasing, f(0) > 0: Newton from
    // the left never overshoots. Bisection guards against stalls near the asymptote.
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double b = 0.0;
    for (int it = 0; it < 200; ++it) {
        const LogMgf f = log_mgf(s, total, b);
        const double r = f.value + budget;
        if (std::abs(r) < 1e-15)
            break;
        if (r > 0.0)
            lo = b;
        else
            hi = b;
        double next = f.tilted_mean > 0.0 ? b + r / f.tilted_mean : std::numeric_limits<double>::infinity();
        if (!(next > lo && next < hi))
            next = std::isfinite(hi) ? 0.5 * (lo + hi) : std::max(2.0 * lo, 1.0);
        if (std::abs(next - b) <= 1e-15 * b)
            break;
        b = next;
    }
    const double r = log_mgf(s, total, b).value + budget;
    if (!(std::abs(r) < 1e-10))
        DIC_THROW(RootNotBracketed, "systemic scale did not converge (residual " << r << ")");
    return report(b);
}

LinkagePoint link_point(double t, double h, double gamma, double alpha, const SystemicDistribution& s,
                        const std::string& issuer_id) {
    LinkagePoint pt;
    pt.t = t;
    pt.h = h;
    pt.p = -std::expm1(-h);
    pt.alpha = alpha;
    pt.gamma = gamma;
    try {
        pt.b = solve_systemic_scale(s, gamma * h, &pt.tilted_mean, &pt.residual);
    } catch (const RootNotBracketed& e) {
        DIC_THROW(RootNotBracketed, "issuer " << issuer_id << " at t = " << t << ": " << e.what());
    }
    return pt;
}

LinkageCalibration::LinkageCalibration(std::string issuer_id, std::vector<LinkagePoint> points)
    : issuer_id_(std::move(issuer_id)), points_(std::move(points)) {
    DIC_REQUIRE(!points_.empty(), "linkage calibration of " << issuer_id_ << " has no points");
    std::sort(points_.begin(), points_.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
}

const LinkagePoint* LinkageCalibration::find(double t) const {
    for (const auto& p : points_)
        if (p.t == t)
            return &p;
    return nullptr;
}

LinkagePoint LinkageCalibration::at(double t, const SystemicDistribution& s) const {
    if (const auto* p = find(t))
        return *p;
    const auto hi = std::upper_bound(points_.begin(), points_.end(), t,
                                     [](double x, const LinkagePoint& p) { return x < p.t; });
    // neighbours: (0, 0) before the first point, last segment reused beyond the last
    const LinkagePoint zero{};
    const LinkagePoint* a;
    const LinkagePoint* b;
    if (hi == points_.end()) {
        b = &points_.back();
        a = points_.size() > 1 ? &points_[points_.size() - 2] : &zero;
    } else {
        b = &*hi;
        a = hi == points_.begin() ? &zero : &*(hi - 1);
    }
    const double w = (t - a->t) / (b->t - a->t);
    const double sys = std::max(0.0, a->systemic_budget() + w * (b->systemic_budget() - a->systemic_budget()));
    const double idio =
        std::max(0.0, a->idiosyncratic_budget() + w * (b->idiosyncratic_budget() - a->idiosyncratic_budget()));
    const double h = sys + idio;
    const double gamma = h > 0.0 ? sys / h : points_.front().gamma;
    return link_point(t, h, gamma, points_.front().alpha, s, issuer_id_);
}

SystemicDistribution issuer_systemic_distribution(const std::vector<Loading>& loadings,
                                                  const std::vector<LawSlice>& slices, const FactorCopula& copula) {
    std::vector<std::size_t> factors;
    for (const auto& l : loadings)
        factors.push_back(l.factor);
    const FactorQuadrature q = build_quadrature(copula, slices, factors);
    return systemic_distribution(q, loadings, factors);
}

LinkageCalibration calibrate_b(const LinkageSpec& spec, const CreditCurve& curve,
                               const std::vector<MarginalFactorLaw>& laws, const FactorCopula& copula,
                               const std::vector<double>& tenor_grid) {
    DIC_REQUIRE(laws.size() == copula.size(), "calibrate_b: one law per copula factor");
    const auto loadings = resolve_loadings(spec, copula);
    std::vector<LinkagePoint> points;
    for (double t : tenor_grid) {
        std::vector<LawSlice> slices;
        for (const auto& law : laws)
            slices.push_back(law.at(t));
        const double h = curve.cumulative_hazard(t);
        const double gamma = spec.idiosyncratic_only() ? 0.0 : systemic_fraction(spec.alpha(), h);
        points.push_back(link_point(t, h, gamma, spec.alpha(), issuer_systemic_distribution(loadings, slices, copula),
                                    spec.issuer_id()));
    }
    return LinkageCalibration(spec.issuer_id(), std::move(points));
}

double conditional_default_probability(const LinkagePoint& point, const std::vector<Loading>& loadings,
                                       const FactorDraw& draw) {
    double s = 0.0;
    for (const auto& l : loadings)
        s += l.beta * draw.values[l.factor];
    return point.conditional_pd(s);
}

} // namespace dic
