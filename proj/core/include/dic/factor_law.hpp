#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <dic/rng.hpp>

namespace dic {

//! Clamp applied to copula uniforms before inversion.
inline constexpr double kUniformClamp = 1e-12;

//! Marginal law of one factor at a single date on its support grid.
struct LawSlice {
    double t = 0.0;
    std::vector<double> support;
    std::vector<double> probs;
    std::vector<double> cdf;

    std::size_t size() const { return support.size(); }
    //! Generalized inverse: index of the smallest atom whose CDF reaches u.
    std::size_t inverse_cdf_index(double u) const;
    double inverse_cdf(double u) const { return support[inverse_cdf_index(u)]; }
    double mean() const;
};

/*! Discrete law of an increasing factor process X_t, stored per tenor on a
    support grid shared by all tenors.

    Invariants (checked on construction): probabilities form a simplex per
    tenor, the support is ascending and nonnegative, and the CDFs are
    ordered across tenors, CDF_{t1}(x) >= CDF_{t2}(x) for t1 < t2.
*/
class MarginalFactorLaw {
public:
    MarginalFactorLaw(std::string factor_id, std::vector<double> tenors, std::vector<double> support,
                      std::vector<std::vector<double>> probs);

    const std::string& factor_id() const { return factor_id_; }
    const std::vector<double>& tenors() const { return tenors_; }
    const std::vector<double>& support() const { return support_; }
    const std::vector<double>& probs(std::size_t tenor_index) const { return probs_[tenor_index]; }
    const std::vector<std::vector<double>>& all_probs() const { return probs_; }
    std::vector<double> cdf(std::size_t tenor_index) const;
    double mean(std::size_t tenor_index) const;

    /*! Law at date t. Between tenors the CDF is interpolated linearly in t;
        before the first tenor the first law is used. Dates after the last
        tenor are rejected unless `extrapolate_flat` is set.
    */
    LawSlice at(double t, bool extrapolate_flat = false) const;

    //! Support multiplied by `factor` (the model is invariant under b -> b / factor).
    MarginalFactorLaw scaled(double factor) const;
    //! Rescaled so that E[X] at the last tenor equals one.
    MarginalFactorLaw normalized() const;

    //! Default support: an atom at 0 followed by geometrically spaced atoms.
    static std::vector<double> default_support(std::size_t n_atoms = 64, double first_positive = 0.01,
                                               double last = 40.0);

private:
    std::string factor_id_;
    std::vector<double> tenors_;
    std::vector<double> support_;
    std::vector<std::vector<double>> probs_;
};

//! Checks the simplex and cross-tenor CDF ordering; returns an empty string when valid.
std::string law_violation(const std::vector<double>& support, const std::vector<std::vector<double>>& probs);

/*! Gaussian copula coupling of the factor uniforms.

    The correlation matrix must be symmetric PSD with unit diagonal; a
    semidefinite Cholesky factor is kept so perfectly correlated factors
    receive bit-identical normals.
*/
class FactorCopula {
public:
    FactorCopula(std::vector<std::string> factor_ids, std::vector<std::vector<double>> correlation);

    static FactorCopula uniform(std::vector<std::string> factor_ids, double rho);
    static FactorCopula independent(std::vector<std::string> factor_ids) { return uniform(std::move(factor_ids), 0.0); }

    std::size_t size() const { return factor_ids_.size(); }
    const std::vector<std::string>& factor_ids() const { return factor_ids_; }
    const std::vector<std::vector<double>>& correlation() const { return correlation_; }
    double correlation(std::size_t i, std::size_t j) const { return correlation_[i][j]; }
    std::size_t index_of(const std::string& factor_id) const;
    bool is_comonotone() const;

    //! z = L eps for independent standard normals eps.
    void correlate(std::span<const double> eps, std::span<double> z) const;
    //! Standard deviation of sum_i z_i, used to build the comonotone proxy 1'z / sd.
    double sum_stdev() const { return sum_stdev_; }

    FactorCopula subset(const std::vector<std::size_t>& indices) const;

private:
    std::vector<std::string> factor_ids_;
    std::vector<std::vector<double>> correlation_;
    std::vector<double> cholesky_; // lower triangular, row-major n x n
    double sum_stdev_ = 0.0;
};

struct FactorDraw {
    double t = 0.0;
    std::vector<double> values;
    std::vector<double> uniforms;
    std::vector<std::uint32_t> atoms;
};

/*! Draws joint factor values at one date: correlated uniforms from the
    copula, each inverted through its factor's marginal at that date.
*/
class FactorSampler {
public:
    FactorSampler(const FactorCopula& copula, std::vector<LawSlice> slices);

    std::size_t size() const { return slices_.size(); }
    const std::vector<LawSlice>& slices() const { return slices_; }
    const FactorCopula& copula() const { return copula_; }

    //! Consumes exactly size() normals from rng.
    void draw(PathRng& rng, FactorDraw& out) const;
    //! Same as draw() but also returns the correlated normals used.
    void draw(PathRng& rng, FactorDraw& out, std::span<double> normals) const;
    //! Fills `out` from uniforms given directly.
    void from_uniforms(std::span<const double> u, FactorDraw& out) const;

private:
    FactorCopula copula_;
    std::vector<LawSlice> slices_;
};

FactorDraw sample_joint(const FactorCopula& copula, const std::vector<MarginalFactorLaw>& laws, double t,
                        PathRng& rng);

/*! X_t = inverse-CDF_t(u) over `dates` for a fixed uniform. Non-decreasing
    by the cross-tenor invariant; a decreasing step throws.
*/
std::vector<double> comonotone_path(const MarginalFactorLaw& law, double u, const std::vector<double>& dates);

//! Weighted point set representing the joint factor law at a date.
struct FactorQuadrature {
    std::size_t dimension = 0;
    std::vector<double> weights;
    std::vector<double> points; // weights.size() x dimension, row-major

    std::size_t size() const { return weights.size(); }
    std::span<const double> point(std::size_t k) const { return {points.data() + k * dimension, dimension}; }
};

//! Number of quasi-random points used above two factors.
inline constexpr std::size_t kSobolPoints = std::size_t{1} << 16;

/*! Quadrature over the factors in `factors` (indices into copula/slices).
    Exact tensor summation for one or two factors; Sobol points otherwise.
*/
FactorQuadrature build_quadrature(const FactorCopula& copula, const std::vector<LawSlice>& slices,
                                  const std::vector<std::size_t>& factors);

double expectation(const FactorQuadrature& quadrature, const std::function<double(std::span<const double>)>& f);
double expectation(const std::vector<MarginalFactorLaw>& laws, const FactorCopula& copula, double t,
                   const std::function<double(std::span<const double>)>& f);

//! Cell of the comonotone partition of (0,1): every factor sits on a fixed atom.
struct ComonotoneCell {
    double weight;
    std::vector<std::uint32_t> atoms;
};

/*! Partition of u in (0,1) into the intervals on which every factor's
    inverse CDF is constant, i.e. the exact law of the 100%-correlated model.
*/
std::vector<ComonotoneCell> comonotone_partition(const std::vector<LawSlice>& slices);

//! Single-uniform representation of a perfectly correlated factor set.
class ComonotoneReduction {
public:
    explicit ComonotoneReduction(std::vector<MarginalFactorLaw> laws) : laws_(std::move(laws)) {}

    const std::vector<MarginalFactorLaw>& laws() const { return laws_; }
    std::vector<double> values(double u, double t) const;
    std::vector<ComonotoneCell> cells(double t) const;

private:
    std::vector<MarginalFactorLaw> laws_;
};

//! Present iff every off-diagonal correlation equals one (or there is a single factor).
std::optional<ComonotoneReduction> reduce_if_comonotone(const FactorCopula& copula,
                                                        const std::vector<MarginalFactorLaw>& laws);

} // namespace dic
