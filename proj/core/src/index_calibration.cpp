#include <dic/index_calibration.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include <dic/errors.hpp>
#include <dic/loss_engine.hpp>

namespace dic {

std::string etl_surface_violation(const std::vector<TrancheBounds>& tranches,
                                  const std::vector<std::vector<double>>& etl, double tol) {
    std::ostringstream why;
    for (std::size_t i = 0; i < etl.size(); ++i)
        for (std::size_t k = 0; k < etl[i].size(); ++k) {
            const double v = etl[i][k];
            if (!(v >= -tol && v <= 1.0 + tol)) {
                why << "ETL " << v << " of tranche " << i << " at tenor " << k << " outside [0,1]";
                return why.str();
            }
            if (k > 0 && v < etl[i][k - 1] - tol) {
                why << "tranche " << i << " (" << tranches[i].attach << "-" << tranches[i].detach
                    << "): ETL decreases from tenor " << k - 1 << " to tenor " << k;
                return why.str();
            }
            if (i > 0 && tranches[i].attach >= tranches[i - 1].detach && v > etl[i - 1][k] + tol) {
                why << "tenor " << k << ": tranche " << i << " has higher ETL than the more junior tranche " << i - 1;
                return why.str();
            }
        }
    return {};
}

void validate_targets(const EtlTargetSurface& t) {
    DIC_REQUIRE(!t.tranches.empty() && !t.tenors.empty(), "targets: need tranches and tenors");
    DIC_REQUIRE(t.etl.size() == t.tranches.size(), "targets: etl must have one row per tranche");
    for (std::size_t i = 0; i < t.tranches.size(); ++i) {
        const auto& tr = t.tranches[i];
        DIC_REQUIRE(tr.attach >= 0.0 && tr.attach < tr.detach && tr.detach <= 1.0, "targets: bad tranche bounds");
        DIC_REQUIRE(i == 0 || tr.attach >= t.tranches[i - 1].attach, "targets: tranches must run from equity upwards");
        DIC_REQUIRE(t.etl[i].size() == t.tenors.size(), "targets: etl row " << i << " has wrong length");
    }
    for (std::size_t k = 0; k < t.tenors.size(); ++k)
        DIC_REQUIRE(t.tenors[k] > (k == 0 ? 0.0 : t.tenors[k - 1]), "targets: tenors must be positive and increasing");
    if (!t.weights.empty()) {
        DIC_REQUIRE(t.weights.size() == t.tranches.size(), "targets: weights must match etl");
        for (const auto& row : t.weights) {
            DIC_REQUIRE(row.size() == t.tenors.size(), "targets: weights must match etl");
            for (double w : row)
                DIC_REQUIRE(w >= 0.0 && std::isfinite(w), "targets: weights must be nonnegative");
        }
    }
    const std::string why = etl_surface_violation(t.tranches, t.etl);
    if (!why.empty())
        DIC_THROW(InfeasibleTargets, "index " << t.index_id << ": " << why);
}

double CalibrationReport::rms_error() const {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& row : error)
        for (double e : row) {
            s += e * e;
            ++n;
        }
    return n ? std::sqrt(s / static_cast<double>(n)) : 0.0;
}

double CalibrationReport::max_abs_error() const {
    double m = 0.0;
    for (const auto& row : error)
        for (double e : row)
            m = std::max(m, std::abs(e));
    return m;
}

namespace {

struct IndexName {
    double loss;   // weight * (1 - R)
    double log_c;  // -(1 - gamma) h
    double budget; // gamma h
};

// One tenor of the fit: names resolved at the tenor date, objective and Jacobian in the CDF values.
class TenorProblem {
public:
    TenorProblem(std::vector<double> support, std::vector<IndexName> names, ConditionalMoments base,
                 std::vector<TrancheBounds> tranches, std::vector<double> targets, std::vector<double> weights,
                 double lambda)
        : x_(std::move(support)), names_(std::move(names)), base_(base), tranches_(std::move(tranches)),
          targets_(std::move(targets)), sqrt_w_(std::move(weights)), lambda_(lambda) {
        for (double& w : sqrt_w_)
            w = std::sqrt(w);
    }

    std::size_t n_vars() const { return x_.size() - 1; }
    std::size_t n_residuals() const { return tranches_.size() + penalty_rows(); }
    std::size_t penalty_rows() const { return x_.size() >= 3 ? x_.size() - 2 : 0; }

    static std::vector<double> probs(const Eigen::VectorXd& F) {
        std::vector<double> q(F.size() + 1);
        double prev = 0.0;
        for (Eigen::Index a = 0; a < F.size(); ++a) {
            q[a] = std::max(0.0, F[a] - prev);
            prev = std::max(prev, F[a]);
        }
        q.back() = std::max(0.0, 1.0 - prev);
        return q;
    }

    //! Model ETL per tranche; fills residuals and Jacobian when requested. Throws RootNotBracketed.
    std::vector<double> evaluate(const Eigen::VectorXd& F, Eigen::VectorXd* r, Eigen::MatrixXd* J) const {
        const std::size_t n = x_.size(), m = tranches_.size(), nn = names_.size();
        const auto q = probs(F);
        const SystemicDistribution s{q, x_};
        std::vector<double> b(nn), tilted_num(nn);
        for (std::size_t j = 0; j < nn; ++j) {
            double tm = 0.0;
            b[j] = solve_systemic_scale(s, names_[j].budget, &tm);
            // E[X e^{-bX}] = tilted mean * E[e^{-bX}], and E[e^{-bX}] = e^{-budget}
            tilted_num[j] = tm * std::exp(-names_[j].budget);
        }
        std::vector<double> p(nn * n);
        std::vector<ConditionalMoments> mo(n, base_);
        for (std::size_t j = 0; j < nn; ++j)
            for (std::size_t a = 0; a < n; ++a) {
                const double pj = -std::expm1(names_[j].log_c - b[j] * x_[a]);
                p[j * n + a] = pj;
                mo[a].mean += names_[j].loss * pj;
                mo[a].variance += names_[j].loss * names_[j].loss * pj * (1.0 - pj);
            }
        std::vector<double> etl(m, 0.0);
        std::vector<double> dq(n), db(nn);
        for (std::size_t i = 0; i < m; ++i) {
            std::fill(db.begin(), db.end(), 0.0);
            for (std::size_t a = 0; a < n; ++a) {
                const auto sens = normal_etl_sensitivity(mo[a], tranches_[i].attach, tranches_[i].detach);
                etl[i] += q[a] * sens.etl;
                dq[a] = sens.etl;
                if (J && q[a] > 0.0 && (sens.d_mean != 0.0 || sens.d_variance != 0.0))
                    for (std::size_t j = 0; j < nn; ++j) {
                        const double pj = p[j * n + a], l = names_[j].loss;
                        const double dp_db = (1.0 - pj) * x_[a];
                        db[j] += q[a] * (sens.d_mean * l + sens.d_variance * l * l * (1.0 - 2.0 * pj)) * dp_db;
                    }
            }
            if (r)
                (*r)[i] = sqrt_w_[i] * (etl[i] - targets_[i]);
            if (J) {
                for (std::size_t j = 0; j < nn; ++j) {
                    if (db[j] == 0.0 || !(tilted_num[j] > 0.0))
                        continue;
                    for (std::size_t a = 0; a < n; ++a)
                        dq[a] += db[j] * std::exp(-b[j] * x_[a]) / tilted_num[j];
                }
                for (std::size_t a = 0; a + 1 < n; ++a)
                    (*J)(i, a) = sqrt_w_[i] * (dq[a] - dq[a + 1]);
            }
        }
        if (r || J) {
            const double sl = std::sqrt(lambda_);
            const auto full = [&](std::size_t a) { return a + 1 < n ? F[a] : 1.0; };
            for (std::size_t k = 0; k < penalty_rows(); ++k) {
                if (r)
                    (*r)[m + k] = sl * (full(k + 2) - 2.0 * full(k + 1) + full(k));
                if (J) {
                    J->row(m + k).setZero();
                    if (k + 2 < n - 1)
                        (*J)(m + k, k + 2) = sl;
                    (*J)(m + k, k + 1) = -2.0 * sl;
                    (*J)(m + k, k) = sl;
                }
            }
        }
        return etl;
    }

    double fit_part(const Eigen::VectorXd& r) const { return r.head(tranches_.size()).squaredNorm(); }

private:
    std::vector<double> x_;
    std::vector<IndexName> names_;
    ConditionalMoments base_;
    std::vector<TrancheBounds> tranches_;
    std::vector<double> targets_;
    std::vector<double> sqrt_w_;
    double lambda_;
};

// Euclidean projection onto {nondecreasing, 0 <= F <= upper} for nondecreasing upper:
// isotonic regression (pool adjacent violators) followed by clipping.
void project(Eigen::VectorXd& F, const Eigen::VectorXd& upper) {
    const Eigen::Index n = F.size();
    std::vector<double> level;
    std::vector<Eigen::Index> count;
    for (Eigen::Index i = 0; i < n; ++i) {
        level.push_back(F[i]);
        count.push_back(1);
        while (level.size() > 1 && level[level.size() - 2] > level.back()) {
            const double c1 = static_cast<double>(count[count.size() - 2]), c2 = static_cast<double>(count.back());
            level[level.size() - 2] = (c1 * level[level.size() - 2] + c2 * level.back()) / (c1 + c2);
            count[count.size() - 2] += count.back();
            level.pop_back();
            count.pop_back();
        }
    }
    Eigen::Index i = 0;
    for (std::size_t blk = 0; blk < level.size(); ++blk)
        for (Eigen::Index c = 0; c < count[blk]; ++c, ++i)
            F[i] = std::clamp(level[blk], 0.0, upper[i]);
}

std::string index_factor(const Portfolio& index, const std::map<std::string, LinkageSpec>& specs,
                         const std::string& fallback) {
    std::string factor;
    for (const auto& c : index.constituents()) {
        const auto it = specs.find(c.issuer_id);
        if (it == specs.end())
            DIC_THROW(NotCalibrated, "no linkage spec for index constituent " << c.issuer_id);
        const auto& betas = it->second.betas();
        if (betas.empty())
            continue;
        DIC_REQUIRE(betas.size() == 1, "index constituent " << c.issuer_id << " loads on several factors");
        DIC_REQUIRE(factor.empty() || factor == betas.front().first,
                    "index constituents load on different factors (" << factor << ", " << betas.front().first << ")");
        factor = betas.front().first;
    }
    return factor.empty() ? fallback : factor;
}

} // namespace

CalibrationReport calibrate_marginals(const Portfolio& index_portfolio, const CurveSet& curves,
                                      const std::map<std::string, LinkageSpec>& specs,
                                      const EtlTargetSurface& targets, const CalibrationConfig& config) {
    validate_targets(targets);
    DIC_REQUIRE(!index_portfolio.empty(), "calibration: empty index portfolio");
    DIC_REQUIRE(!index_portfolio.has_conditional_recovery(), "calibration: index recoveries must be deterministic");
    const std::string factor = index_factor(index_portfolio, specs, targets.index_id);
    const auto& x = config.support;
    DIC_REQUIRE(x.size() >= 2 && x.front() == 0.0, "calibration support must start with an atom at zero");
    const std::size_t n = x.size(), nv = n - 1, n_tenors = targets.tenors.size(), m = targets.tranches.size();

    // Initial guess: exponential laws whose mean grows with the tenor.
    std::vector<Eigen::VectorXd> F(n_tenors, Eigen::VectorXd(nv));
    for (std::size_t k = 0; k < n_tenors; ++k) {
        const double mean = targets.tenors[k] / targets.tenors.back();
        for (std::size_t a = 0; a < nv; ++a)
            F[k][a] = -std::expm1(-x[a] / mean);
    }
    const auto make_law = [&](std::size_t fitted_upto) {
        std::vector<std::vector<double>> probs;
        for (std::size_t k = 0; k < n_tenors; ++k)
            probs.push_back(TenorProblem::probs(F[std::min(k, fitted_upto)]));
        return MarginalFactorLaw(factor, targets.tenors, x, std::move(probs));
    };

    CalibrationReport report{make_law(0), {}, {}, 0.0, 0.0, 0, true};
    Eigen::VectorXd upper = Eigen::VectorXd::Ones(nv);
    for (std::size_t k = 0; k < n_tenors; ++k) {
        const double t = targets.tenors[k];
        std::vector<IndexName> names;
        ConditionalMoments base;
        double max_budget = 0.0;
        for (std::size_t j = 0; j < index_portfolio.size(); ++j) {
            const auto& c = index_portfolio.constituents()[j];
            const auto& spec = specs.at(c.issuer_id);
            const double h = find_curve(curves, c.issuer_id).cumulative_hazard(t);
            const double loss = index_portfolio.weight(j) * (1.0 - c.recovery_override.value_or(c.recovery.rate()));
            if (spec.idiosyncratic_only()) {
                const double p = -std::expm1(-h);
                base.mean += loss * p;
                base.variance += loss * loss * p * (1.0 - p);
                continue;
            }
            const double gamma = systemic_fraction(spec.alpha(), h);
            names.push_back({loss, -(1.0 - gamma) * h, gamma * h});
            max_budget = std::max(max_budget, gamma * h);
        }
        // Mass at zero must leave every name's systemic budget attainable.
        upper[0] = std::min(upper[0], (1.0 - 1e-9) * std::exp(-max_budget));
        std::vector<double> tgt(m), w(m);
        for (std::size_t i = 0; i < m; ++i) {
            tgt[i] = targets.etl[i][k];
            w[i] = targets.weight(i, k);
        }
        const TenorProblem problem(x, names, base, targets.tranches, tgt, w, config.regularization);

        Eigen::VectorXd Fk = F[k];
        project(Fk, upper);
        Eigen::VectorXd r(problem.n_residuals()), r_try(problem.n_residuals());
        Eigen::MatrixXd J(problem.n_residuals(), nv);
        problem.evaluate(Fk, &r, &J);
        double obj = r.squaredNorm();
        F[k] = Fk;
        const auto notify = [&](std::size_t iteration) {
            if (!config.observer)
                return;
            const MarginalFactorLaw law = make_law(k);
            config.observer({k, iteration, obj, &law});
        };
        notify(0);
        double mu = 1e-3 * std::max(1e-12, (J.transpose() * J).diagonal().maxCoeff());
        bool converged = false;
        std::size_t it = 0;
        while (it < config.max_iterations) {
            ++it;
            const Eigen::MatrixXd A =
                J.transpose() * J + mu * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(nv));
            const Eigen::VectorXd step = A.ldlt().solve(-(J.transpose() * r));
            Eigen::VectorXd F_try = Fk + step;
            project(F_try, upper);
            double obj_try = std::numeric_limits<double>::infinity();
            try {
                problem.evaluate(F_try, &r_try, nullptr);
                obj_try = r_try.squaredNorm();
            } catch (const RootNotBracketed&) {
            }
            if (obj_try < obj) {
                const double decrease = obj - obj_try;
                Fk = F_try;
                problem.evaluate(Fk, &r, &J);
                obj = r.squaredNorm();
                F[k] = Fk;
                mu = std::max(mu / 3.0, 1e-15);
                notify(it);
                if (decrease < config.tolerance) {
                    converged = true;
                    break;
                }
            } else {
                mu *= 4.0;
                if (mu > 1e20) { // no descent left from this point
                    converged = true;
                    break;
                }
            }
        }
        report.iterations += it;
        report.converged = report.converged && converged;
        upper = Fk.cwiseMin(upper);
    }

    MarginalFactorLaw law = make_law(n_tenors - 1);
    if (config.normalize_scale)
        law = law.normalized();
    report.law = law;
    report.model_etl.assign(m, std::vector<double>(n_tenors));
    report.error.assign(m, std::vector<double>(n_tenors));
    report.objective = report.fit_objective = 0.0;
    const Model model = single_factor_model(law, curves, specs);
    for (std::size_t k = 0; k < n_tenors; ++k) {
        const PortfolioSlice slice(index_portfolio, model, targets.tenors[k]);
        for (std::size_t i = 0; i < m; ++i) {
            const double v = model_etl_grid(slice, targets.tranches[i].attach, targets.tranches[i].detach);
            report.model_etl[i][k] = v;
            report.error[i][k] = v - targets.etl[i][k];
            report.fit_objective += targets.weight(i, k) * report.error[i][k] * report.error[i][k];
        }
        const auto cdf = law.cdf(k);
        for (std::size_t a = 0; a + 2 < n; ++a) {
            const double c = cdf[a + 2] - 2.0 * cdf[a + 1] + cdf[a];
            report.objective += config.regularization * c * c;
        }
    }
    report.objective += report.fit_objective;
    return report;
}

double model_etl_grid(const PortfolioSlice& slice, double attach, double detach) {
    DIC_REQUIRE(attach >= 0.0 && attach < detach && detach <= 1.0, "bad tranche bounds");
    const MomentCaches mc = build_caches(slice);
    DIC_REQUIRE(mc.caches.size() <= 1, "model_etl_grid: portfolio loads on more than one factor");
    if (mc.caches.empty())
        return normal_etl(mc.base, attach, detach);
    const auto& cache = mc.caches.front();
    const auto& law = slice.laws()[cache.factor];
    double etl = 0.0;
    for (std::size_t k = 0; k < law.size(); ++k)
        if (law.probs[k] > 0.0)
            etl += law.probs[k] * normal_etl({mc.base.mean + cache.mu[k], mc.base.variance + cache.var[k]}, attach, detach);
    return etl;
}

Model single_factor_model(const MarginalFactorLaw& law, const CurveSet& curves,
                          const std::map<std::string, LinkageSpec>& specs) {
    std::map<std::string, LinkageSpec> own;
    for (const auto& [id, spec] : specs) {
        const bool ours = std::all_of(spec.betas().begin(), spec.betas().end(),
                                      [&](const auto& b) { return b.first == law.factor_id(); });
        if (ours)
            own.emplace(id, spec);
    }
    return Model({law}, FactorCopula({law.factor_id()}, {{1.0}}), std::move(own), curves);
}

} // namespace dic
