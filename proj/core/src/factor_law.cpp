#include <dic/factor_law.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/random/sobol.hpp>

#include <dic/errors.hpp>
#include <dic/normal.hpp>

namespace dic {

namespace {

constexpr double kSimplexTol = 1e-9;
constexpr double kCdfOrderTol = 1e-12;

std::vector<double> cumulative(const std::vector<double>& probs) {
    std::vector<double> cdf(probs.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k)
        cdf[k] = (acc += probs[k]);
    if (!cdf.empty())
        cdf.back() = 1.0;
    return cdf;
}

double clamp_uniform(double u) { return std::clamp(u, kUniformClamp, 1.0 - kUniformClamp); }

} // namespace

std::size_t LawSlice::inverse_cdf_index(double u) const {
    u = clamp_uniform(u);
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    return it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
}

double LawSlice::mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k)
        m += support[k] * probs[k];
    return m;
}

std::string law_violation(const std::vector<double>& support, const std::vector<std::vector<double>>& probs) {
    std::ostringstream why;
    if (support.empty())
        return "empty support";
    for (std::size_t k = 0; k < support.size(); ++k) {
        if (!std::isfinite(support[k]) || support[k] < 0.0)
            return "support must be finite and nonnegative";
        if (k > 0 && support[k] <= support[k - 1])
            return "support must be strictly ascending";
    }
    std::vector<double> previous;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const auto& q = probs[i];
        if (q.size() != support.size()) {
            why << "tenor " << i << ": " << q.size() << " probabilities for " << support.size() << " atoms";
            return why.str();
        }
        double sum = 0.0;
        for (double x : q) {
            if (!(x >= 0.0)) {
                why << "tenor " << i << ": negative probability " << x;
                return why.str();
            }
            sum += x;
        }
        if (std::abs(sum - 1.0) > kSimplexTol) {
            why << "tenor " << i << ": probabilities sum to " << sum;
            return why.str();
        }
        auto cdf = cumulative(q);
        if (!previous.empty()) {
            for (std::size_t k = 0; k < cdf.size(); ++k)
                if (cdf[k] > previous[k] + kCdfOrderTol) {
                    why << "tenor " << i << ": CDF at atom " << k << " (" << cdf[k] << ") exceeds the previous tenor's ("
                        << previous[k] << "); the factor must be increasing";
                    return why.str();
                }
        }
        previous = std::move(cdf);
    }
    return {};
}

MarginalFactorLaw::MarginalFactorLaw(std::string factor_id, std::vector<double> tenors, std::vector<double> support,
                                     std::vector<std::vector<double>> probs)
    : factor_id_(std::move(factor_id)), tenors_(std::move(tenors)), support_(std::move(support)),
      probs_(std::move(probs)) {
    DIC_REQUIRE(!tenors_.empty() && tenors_.size() == probs_.size(),
                "factor " << factor_id_ << ": need one probability vector per tenor");
    for (std::size_t i = 0; i < tenors_.size(); ++i)
        DIC_REQUIRE(tenors_[i] > (i == 0 ? 0.0 : tenors_[i - 1]),
                    "factor " << factor_id_ << ": tenors must be positive and increasing");
    const std::string why = law_violation(support_, probs_);
    DIC_REQUIRE(why.empty(), "factor " << factor_id_ << ": " << why);
}

std::vector<double> MarginalFactorLaw::cdf(std::size_t i) const { return cumulative(probs_.at(i)); }

double MarginalFactorLaw::mean(std::size_t i) const {
    const auto& q = probs_.at(i);
    return std::inner_product(support_.begin(), support_.end(), q.begin(), 0.0);
}

LawSlice MarginalFactorLaw::at(double t, bool extrapolate_flat) const {
    DIC_REQUIRE(t >= 0.0, "factor " << factor_id_ << ": negative date " << t);
    LawSlice s;
    s.t = t;
    s.support = support_;
    if (t > tenors_.back() && !extrapolate_flat)
        DIC_THROW(NotCalibrated, "factor " << factor_id_ << " has no law beyond tenor " << tenors_.back()
                                           << " (requested " << t << ")");
    const auto hi = static_cast<std::size_t>(std::lower_bound(tenors_.begin(), tenors_.end(), t) - tenors_.begin());
    if (hi == 0 || hi == tenors_.size() || tenors_[hi] == t) {
        const std::size_t k = std::min(hi, tenors_.size() - 1);
        s.probs = probs_[k];
        s.cdf = cumulative(s.probs);
        return s;
    }
    const double w = (t - tenors_[hi - 1]) / (tenors_[hi] - tenors_[hi - 1]);
    const auto lo_cdf = cumulative(probs_[hi - 1]);
    const auto hi_cdf = cumulative(probs_[hi]);
    s.cdf.resize(support_.size());
    s.probs.resize(support_.size());
    double prev = 0.0;
    for (std::size_t k = 0; k < support_.size(); ++k) {
        // the ordering of the endpoints makes the blend monotone; max() absorbs rounding
        s.cdf[k] = std::max(prev, (1.0 - w) * lo_cdf[k] + w * hi_cdf[k]);
        s.probs[k] = s.cdf[k] - prev;
        prev = s.cdf[k];
    }
    s.cdf.back() = 1.0;
    s.probs.back() = 1.0 - (support_.size() > 1 ? s.cdf[support_.size() - 2] : 0.0);
    return s;
}

MarginalFactorLaw MarginalFactorLaw::scaled(double factor) const {
    DIC_REQUIRE(factor > 0.0 && std::isfinite(factor), "scale factor must be positive");
    auto support = support_;
    for (double& x : support)
        x *= factor;
    return MarginalFactorLaw(factor_id_, tenors_, std::move(support), probs_);
}

MarginalFactorLaw MarginalFactorLaw::normalized() const {
    const double m = mean(tenors_.size() - 1);
    DIC_REQUIRE(m > 0.0, "factor " << factor_id_ << ": cannot normalize a law with zero mean");
    return scaled(1.0 / m);
}

std::vector<double> MarginalFactorLaw::default_support(std::size_t n_atoms, double first_positive, double last) {
    DIC_REQUIRE(n_atoms >= 2 && first_positive > 0.0 && last > first_positive, "bad default support parameters");
    std::vector<double> s(n_atoms, 0.0);
    const double ratio = std::pow(last / first_positive, 1.0 / static_cast<double>(n_atoms - 2));
    for (std::size_t k = 1; k < n_atoms; ++k)
        s[k] = first_positive * std::pow(ratio, static_cast<double>(k - 1));
    s.back() = last;
    return s;
}

FactorCopula::FactorCopula(std::vector<std::string> factor_ids, std::vector<std::vector<double>> correlation)
    : factor_ids_(std::move(factor_ids)), correlation_(std::move(correlation)) {
    const std::size_t n = factor_ids_.size();
    DIC_REQUIRE(n > 0, "copula needs at least one factor");
    DIC_REQUIRE(correlation_.size() == n, "correlation matrix must be " << n << " x " << n);
    for (std::size_t i = 0; i < n; ++i) {
        DIC_REQUIRE(correlation_[i].size() == n, "correlation matrix must be " << n << " x " << n);
        DIC_REQUIRE(correlation_[i][i] == 1.0, "correlation diagonal must be one");
        for (std::size_t j = 0; j < n; ++j) {
            DIC_REQUIRE(correlation_[i][j] >= -1.0 && correlation_[i][j] <= 1.0, "correlation outside [-1,1]");
            DIC_REQUIRE(std::abs(correlation_[i][j] - correlation_[j][i]) <= 1e-12, "correlation matrix not symmetric");
        }
        for (std::size_t j = 0; j < i; ++j)
            DIC_REQUIRE(factor_ids_[i] != factor_ids_[j], "duplicate factor id " << factor_ids_[i]);
    }
    // Semidefinite Cholesky: a vanishing pivot yields a zero column, so exactly
    // collinear factors share the same combination of normals.
    cholesky_.assign(n * n, 0.0);
    auto L = [&](std::size_t i, std::size_t j) -> double& { return cholesky_[i * n + j]; };
    for (std::size_t j = 0; j < n; ++j) {
        double d = correlation_[j][j];
        for (std::size_t k = 0; k < j; ++k)
            d -= L(j, k) * L(j, k);
        if (d < -1e-10)
            DIC_THROW(ValidationError, "correlation matrix is not positive semidefinite (pivot " << d << ")");
        const bool zero_pivot = d <= 1e-12;
        L(j, j) = zero_pivot ? 0.0 : std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = correlation_[i][j];
            for (std::size_t k = 0; k < j; ++k)
                v -= L(i, k) * L(j, k);
            if (zero_pivot) {
                if (std::abs(v) > 1e-8)
                    DIC_THROW(ValidationError, "correlation matrix is not positive semidefinite");
            } else {
                L(i, j) = v / L(j, j);
            }
        }
    }
    double total = 0.0;
    for (const auto& row : correlation_)
        total += std::accumulate(row.begin(), row.end(), 0.0);
    sum_stdev_ = std::sqrt(std::max(total, 0.0));
}

FactorCopula FactorCopula::uniform(std::vector<std::string> factor_ids, double rho) {
    const std::size_t n = factor_ids.size();
    std::vector<std::vector<double>> c(n, std::vector<double>(n, rho));
    for (std::size_t i = 0; i < n; ++i)
        c[i][i] = 1.0;
    return FactorCopula(std::move(factor_ids), std::move(c));
}

std::size_t FactorCopula::index_of(const std::string& factor_id) const {
    const auto it = std::find(factor_ids_.begin(), factor_ids_.end(), factor_id);
    if (it == factor_ids_.end())
        DIC_THROW(NotCalibrated, "unknown factor " << factor_id);
    return static_cast<std::size_t>(it - factor_ids_.begin());
}

bool FactorCopula::is_comonotone() const {
    for (std::size_t i = 0; i < size(); ++i)
        for (std::size_t j = 0; j < size(); ++j)
            if (correlation_[i][j] != 1.0)
                return false;
    return true;
}

void FactorCopula::correlate(std::span<const double> eps, std::span<double> z) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k <= i; ++k)
            acc += cholesky_[i * n + k] * eps[k];
        z[i] = acc;
    }
}

FactorCopula FactorCopula::subset(const std::vector<std::size_t>& indices) const {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> c;
    for (std::size_t i : indices) {
        ids.push_back(factor_ids_.at(i));
        std::vector<double> row;
        for (std::size_t j : indices)
            row.push_back(correlation_[i][j]);
        c.push_back(std::move(row));
    }
    return FactorCopula(std::move(ids), std::move(c));
}

FactorSampler::FactorSampler(const FactorCopula& copula, std::vector<LawSlice> slices)
    : copula_(copula), slices_(std::move(slices)) {
    DIC_REQUIRE(slices_.size() == copula_.size(), "sampler: one law slice per copula factor");
}

void FactorSampler::from_uniforms(std::span<const double> u, FactorDraw& out) const {
    const std::size_t n = size();
    out.values.resize(n);
    out.uniforms.resize(n);
    out.atoms.resize(n);
    if (!slices_.empty())
        out.t = slices_.front().t;
    for (std::size_t i = 0; i < n; ++i) {
        out.uniforms[i] = clamp_uniform(u[i]);
        const std::size_t k = slices_[i].inverse_cdf_index(out.uniforms[i]);
        out.atoms[i] = static_cast<std::uint32_t>(k);
        out.values[i] = slices_[i].support[k];
    }
}

void FactorSampler::draw(PathRng& rng, FactorDraw& out, std::span<double> normals) const {
    const std::size_t n = size();
    double eps[64];
    DIC_REQUIRE(n <= 64, "at most 64 factors");
    for (std::size_t i = 0; i < n; ++i)
        eps[i] = rng.normal();
    copula_.correlate({eps, n}, normals);
    double u[64];
    for (std::size_t i = 0; i < n; ++i)
        u[i] = normal_cdf(normals[i]);
    from_uniforms({u, n}, out);
}

void FactorSampler::draw(PathRng& rng, FactorDraw& out) const {
    double z[64];
    draw(rng, out, {z, size()});
}

FactorDraw sample_joint(const FactorCopula& copula, const std::vector<MarginalFactorLaw>& laws, double t,
                        PathRng& rng) {
    DIC_REQUIRE(laws.size() == copula.size(), "sample_joint: one law per copula factor");
    std::vector<LawSlice> slices;
    for (const auto& law : laws)
        slices.push_back(law.at(t));
    FactorDraw out;
    FactorSampler(copula, std::move(slices)).draw(rng, out);
    return out;
}

std::vector<double> comonotone_path(const MarginalFactorLaw& law, double u, const std::vector<double>& dates) {
    DIC_REQUIRE(u > 0.0 && u < 1.0, "comonotone_path: u must lie in (0,1)");
    std::vector<double> path;
    path.reserve(dates.size());
    for (double t : dates) {
        const double x = law.at(t).inverse_cdf(u);
        if (!path.empty() && x < path.back())
            DIC_THROW(ValidationError, "factor " << law.factor_id() << ": path decreases at t = " << t
                                                 << " (cross-tenor monotonicity violated)");
        path.push_back(x);
    }
    return path;
}

namespace {

// Atoms carrying mass, with the CDF breakpoints bracketing each one.
struct Cells {
    std::vector<std::uint32_t> atom;
    std::vector<double> lower; // CDF just below the atom
    std::vector<double> upper; // CDF at the atom
};

Cells positive_cells(const LawSlice& s) {
    Cells c;
    double prev = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.cdf[k] > prev) {
            c.atom.push_back(static_cast<std::uint32_t>(k));
            c.lower.push_back(prev);
            c.upper.push_back(s.cdf[k]);
        }
        prev = s.cdf[k];
    }
    return c;
}

double probit_or_inf(double u) {
    if (u <= 0.0)
        return -std::numeric_limits<double>::infinity();
    if (u >= 1.0)
        return std::numeric_limits<double>::infinity();
    return normal_inverse_cdf(u);
}

} // namespace

FactorQuadrature build_quadrature(const FactorCopula& copula, const std::vector<LawSlice>& slices,
                                  const std::vector<std::size_t>& factors) {
    FactorQuadrature q;
    q.dimension = factors.size();
    if (factors.empty()) {
        q.weights = {1.0};
        return q;
    }
    if (factors.size() == 1) {
        const auto& s = slices.at(factors[0]);
        for (std::size_t k = 0; k < s.size(); ++k)
            if (s.probs[k] > 0.0) {
                q.weights.push_back(s.probs[k]);
                q.points.push_back(s.support[k]);
            }
        return q;
    }
    if (factors.size() == 2) {
        const auto& s1 = slices.at(factors[0]);
        const auto& s2 = slices.at(factors[1]);
        const double rho = copula.correlation(factors[0], factors[1]);
        const Cells c1 = positive_cells(s1), c2 = positive_cells(s2);
        // Gaussian copula C(u, v) on the breakpoint lattice, then rectangle differences.
        std::vector<double> z1(c1.atom.size() + 1), z2(c2.atom.size() + 1);
        z1[0] = z2[0] = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < c1.atom.size(); ++a)
            z1[a + 1] = probit_or_inf(c1.upper[a]);
        for (std::size_t b = 0; b < c2.atom.size(); ++b)
            z2[b + 1] = probit_or_inf(c2.upper[b]);
        const std::size_t m2 = z2.size();
        std::vector<double> C(z1.size() * m2);
        for (std::size_t a = 0; a < z1.size(); ++a)
            for (std::size_t b = 0; b < m2; ++b)
                C[a * m2 + b] = bivariate_normal_cdf(z1[a], z2[b], rho);
        double total = 0.0;
        for (std::size_t a = 1; a < z1.size(); ++a)
            for (std::size_t b = 1; b < m2; ++b) {
                const double w = C[a * m2 + b] - C[(a - 1) * m2 + b] - C[a * m2 + b - 1] + C[(a - 1) * m2 + b - 1];
                if (w > 0.0) {
                    q.weights.push_back(w);
                    q.points.push_back(s1.support[c1.atom[a - 1]]);
                    q.points.push_back(s2.support[c2.atom[b - 1]]);
                    total += w;
                }
            }
        for (double& w : q.weights)
            w /= total;
        return q;
    }
    const std::size_t d = factors.size();
    const FactorCopula sub = copula.subset(factors);
    boost::random::sobol_engine<std::uint32_t, 32> engine(static_cast<unsigned>(d));
    std::vector<double> eps(d), z(d);
    q.weights.assign(kSobolPoints, 1.0 / static_cast<double>(kSobolPoints));
    q.points.resize(kSobolPoints * d);
    for (std::size_t n = 0; n < kSobolPoints; ++n) {
        for (std::size_t i = 0; i < d; ++i)
            eps[i] = normal_inverse_cdf((static_cast<double>(engine()) + 0.5) * 0x1.0p-32);
        sub.correlate(eps, z);
        for (std::size_t i = 0; i < d; ++i)
            q.points[n * d + i] = slices.at(factors[i]).inverse_cdf(normal_cdf(z[i]));
    }
    return q;
}

double expectation(const FactorQuadrature& quadrature, const std::function<double(std::span<const double>)>& f) {
    double acc = 0.0;
    for (std::size_t k = 0; k < quadrature.size(); ++k)
        acc += quadrature.weights[k] * f(quadrature.point(k));
    return acc;
}

double expectation(const std::vector<MarginalFactorLaw>& laws, const FactorCopula& copula, double t,
                   const std::function<double(std::span<const double>)>& f) {
    DIC_REQUIRE(laws.size() == copula.size(), "expectation: one law per copula factor");
    std::vector<LawSlice> slices;
    for (const auto& law : laws)
        slices.push_back(law.at(t));
    std::vector<std::size_t> all(laws.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return expectation(build_quadrature(copula, slices, all), f);
}

std::vector<ComonotoneCell> comonotone_partition(const std::vector<LawSlice>& slices) {
    std::vector<double> breaks{1.0};
    for (const auto& s : slices)
        for (double c : s.cdf)
            if (c > 0.0 && c < 1.0)
                breaks.push_back(c);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    std::vector<ComonotoneCell> cells;
    double prev = 0.0;
    for (double b : breaks) {
        ComonotoneCell cell{b - prev, {}};
        for (const auto& s : slices) {
            // on (prev, b] every inverse CDF is constant; b itself is a representative
            const auto it = std::lower_bound(s.cdf.begin(), s.cdf.end(), b);
            cell.atoms.push_back(static_cast<std::uint32_t>(
                it == s.cdf.end() ? s.cdf.size() - 1 : static_cast<std::size_t>(it - s.cdf.begin())));
        }
        cells.push_back(std::move(cell));
        prev = b;
    }
    return cells;
}

std::vector<double> ComonotoneReduction::values(double u, double t) const {
    std::vector<double> v;
    for (const auto& law : laws_)
        v.push_back(law.at(t).inverse_cdf(u));
    return v;
}

std::vector<ComonotoneCell> ComonotoneReduction::cells(double t) const {
    std::vector<LawSlice> slices;
    for (const auto& law : laws_)
        slices.push_back(law.at(t));
    return comonotone_partition(slices);
}

std::optional<ComonotoneReduction> reduce_if_comonotone(const FactorCopula& copula,
                                                        const std::vector<MarginalFactorLaw>& laws) {
    DIC_REQUIRE(laws.size() == copula.size(), "reduce_if_comonotone: one law per copula factor");
    if (!copula.is_comonotone())
        return std::nullopt;
    return ComonotoneReduction(laws);
}

} // namespace dic
