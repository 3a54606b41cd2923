#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <dic/factor_law.hpp>
#include <dic/model.hpp>
#include <dic/samc.hpp>

// Independent reference computations used only by tests.
namespace dic::testing {

//! Distribution of sum_j units_j * 1{default_j} for independent defaults (recursion over names).
std::vector<double> lattice_loss_distribution(std::span<const double> pd, std::span<const std::uint32_t> units);

//! E[min(max(L - A, 0), D - A)] / (D - A) for loss L = unit * k with probabilities dist[k].
double lattice_etl(const std::vector<double>& dist, double unit, double attach, double detach);

//! Exact conditional ETL by enumerating all 2^n default patterns (n <= 20).
double enumerated_etl(std::span<const double> pd, std::span<const double> loss, double attach, double detach);
//! Mean and variance by enumeration of the 2^n patterns.
std::pair<double, double> enumerated_moments(std::span<const double> pd, std::span<const double> loss);

/*! Exact conditional tranche loss on a loss lattice: every payout loss must
    be an integer multiple of `unit` (checked).
*/
class LatticeEvaluator : public ConditionalTrancheEvaluator {
public:
    explicit LatticeEvaluator(double unit) : unit_(unit) {}
    double etl(std::span<const double> pd, std::span<const double> loss_given_default, double attach,
               double detach) const override;

private:
    double unit_;
};

/*! Exact unconditional ETL of a one-factor portfolio on a lattice: sum over
    the factor atoms of the lattice ETL given the atom.
*/
double exact_one_factor_etl(const PortfolioSlice& slice, double unit, double attach, double detach);

//! Composite Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n = 2000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i)
        s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

//! Brute-force expectation over the full tensor grid of two factor laws under a Gaussian copula,
//! with each cell's probability from a fine 2-D Simpson integration of the normal density.
double brute_force_two_factor_expectation(const LawSlice& a, const LawSlice& b, double rho,
                                          const std::function<double(double, double)>& f);

} // namespace dic::testing
