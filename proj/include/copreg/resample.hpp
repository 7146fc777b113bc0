#pragma once
#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>
#include <Eigen/Dense>
#include <copreg/errors.hpp>
#include <copreg/parallel.hpp>
#include <copreg/solver.hpp>
#include <copreg/tuning.hpp>

namespace copreg {

struct ResampleConfig
{
    Eigen::Index m = 0;            // subsample size
    int replications = 1;          // M
    std::uint64_t seed = 0;
    bool with_replacement = true;
    int max_retries = 5;           // fresh draws allowed per replication after a degenerate one

    void validate(Eigen::Index n) const
    {
        if (m < 1 || m > n) throw invalid_parameter("subsample size m must satisfy 1 <= m <= n");
        if (replications < 1) throw invalid_parameter("replication count M must be at least 1");
        if (max_retries < 0) throw invalid_parameter("max_retries must be non-negative");
    }
};

struct ResampleResult
{
    FitResult fit;                 // omega_hat is the coordinate-wise median
    Eigen::MatrixXd solutions;     // M x p, full-problem standardized scale
    Eigen::VectorXd intercepts;    // M, logistic only
    std::vector<int> retries;      // degenerate draws discarded per replication
    double lambda = 0.0;
};

/// Median of a sample; an even count averages the two middle order statistics.
inline double median(std::vector<double> v)
{
    if (v.empty()) throw invalid_parameter("median of an empty sample");
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    const double upper = *mid;
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

/// Column-wise median of an M x p matrix.
inline Eigen::VectorXd coordinate_median(const Eigen::MatrixXd& solutions)
{
    Eigen::VectorXd out(solutions.cols());
    for (Eigen::Index j = 0; j < solutions.cols(); ++j) {
        out(j) = median(std::vector<double>(solutions.col(j).data(),
                                            solutions.col(j).data() + solutions.rows()));
    }
    return out;
}

/// Sorted row indices of draw `attempt` for replication r.
inline std::vector<Eigen::Index> draw_subsample(Eigen::Index n, const ResampleConfig& cfg, int r,
                                                int attempt)
{
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(attempt)};
    std::mt19937_64 rng(seq);
    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(cfg.m));
    if (cfg.with_replacement) {
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        for (Eigen::Index i = 0; i < cfg.m; ++i) idx.push_back(pick(rng));
    } else {
        std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
        // Partial Fisher-Yates.
        for (Eigen::Index i = 0; i < cfg.m; ++i) {
            std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
            std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
        }
        idx.assign(all.begin(), all.begin() + cfg.m);
    }
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Supplies the row indices of (replication, attempt).
using DrawFn = std::function<std::vector<Eigen::Index>(int, int)>;

namespace detail {

// Restricts a standardized problem to the given rows, re-standardizes and
// re-estimates sigma. The returned record maps subsample coefficients back to
// the parent's standardized scale.
inline Problem subproblem(const Problem& parent, const std::vector<Eigen::Index>& idx,
                          const ProblemOptions& popt)
{
    Dataset sub;
    sub.x.resize(static_cast<Eigen::Index>(idx.size()), parent.p());
    sub.y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        sub.x.row(static_cast<Eigen::Index>(i)) = parent.x.row(idx[i]);
        sub.y(static_cast<Eigen::Index>(i)) = parent.y(idx[i]);
    }
    sub.task = parent.loss == Loss::SquaredError ? Task::Regression : Task::Classification;
    PriorSpec prior = parent.prior;
    prior.sigma.reset();
    return make_problem(sub, prior, popt);
}

inline bool is_identity_draw(const std::vector<Eigen::Index>& idx, Eigen::Index n)
{
    if (static_cast<Eigen::Index>(idx.size()) != n) return false;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] != static_cast<Eigen::Index>(i)) return false;
    }
    return true;
}

} // namespace detail

/**
 * Median-of-subsample-fits with caller-supplied draws. Each replication is
 * solved on its own re-standardized subsample with a freshly estimated sigma;
 * a draw that makes a feature constant or sigma singular is replaced by the
 * next attempt, up to cfg.max_retries times. A draw covering every row once
 * reuses the parent problem unchanged.
 */
inline ResampleResult resample_fit(const Problem& prob, const ResampleConfig& cfg, const DrawFn& draw,
                                   const SolverOptions& sopt = {}, const ProblemOptions& popt = {})
{
    cfg.validate(prob.n());
    prob.prior.validate(prob.p());
    const auto p = prob.p();
    const int reps = cfg.replications;
    ResampleResult out;
    out.lambda = prob.prior.lambda;
    out.solutions.resize(reps, p);
    out.intercepts = Eigen::VectorXd::Zero(reps);
    out.retries.assign(static_cast<std::size_t>(reps), 0);
    std::vector<FitResult> fits(static_cast<std::size_t>(reps));
    std::vector<char> identity(static_cast<std::size_t>(reps), 0);

    parallel_for(static_cast<std::size_t>(reps), [&](std::size_t ri) {
        const int r = static_cast<int>(ri);
        SolverOptions o = sopt;
        o.seed = sopt.seed + static_cast<std::uint64_t>(r);
        for (int attempt = 0;; ++attempt) {
            const auto idx = draw(r, attempt);
            if (detail::is_identity_draw(idx, prob.n())) {
                fits[ri] = solve(prob, o);
                identity[ri] = 1;
                out.solutions.row(r) = fits[ri].omega_hat.transpose();
                out.intercepts(r) = fits[ri].intercept_std;
                break;
            }
            Problem sub;
            try {
                sub = detail::subproblem(prob, idx, popt);
            } catch (const degenerate_feature&) {
                if (attempt >= cfg.max_retries) throw;
                ++out.retries[ri];
                continue;
            } catch (const linalg_error&) {
                if (attempt >= cfg.max_retries) throw;
                ++out.retries[ri];
                continue;
            }
            fits[ri] = solve(sub, o);
            const auto [beta, b0] = sub.standardization.to_original(fits[ri].omega_hat,
                                                                    fits[ri].intercept_std);
            out.solutions.row(r) = beta.transpose();
            out.intercepts(r) = prob.loss == Loss::Logistic ? b0 : 0.0;
            break;
        }
    });

    FitResult& fit = out.fit;
    fit.omega_hat = coordinate_median(out.solutions);
    fit.intercept_std = prob.loss == Loss::Logistic
        ? median(std::vector<double>(out.intercepts.data(), out.intercepts.data() + reps)) : 0.0;
    if (reps == 1 && identity[0]) {
        fit = fits.front();  // the plain full-data fit, unchanged
        return out;
    }
    fit.omega_plus = fit.omega_hat.cwiseMax(0.0);
    fit.omega_minus = (-fit.omega_hat).cwiseMax(0.0);
    fit.lambda = prob.prior.lambda;
    fit.constraint_residual = 0.0;
    fit.converged = std::all_of(fits.begin(), fits.end(), [](const FitResult& f) { return f.converged; });
    fit.restarts_used = fits.front().restarts_used;
    for (const auto& f : fits) {
        fit.iterations += f.iterations;
        fit.outer_iterations += f.outer_iterations;
    }
    fit.objective = objective(SplitState::from_omega(fit.omega_hat, fit.intercept_std), prob);
    if (prob.standardization.means.size() == p) {
        auto [beta, b0] = prob.standardization.to_original(fit.omega_hat, fit.intercept_std);
        fit.coef_original = std::move(beta);
        fit.intercept_original = b0;
    }
    return out;
}

/// Seeded draws from draw_subsample().
inline ResampleResult resample_fit(const Problem& prob, const ResampleConfig& cfg,
                                   const SolverOptions& sopt = {}, const ProblemOptions& popt = {})
{
    const auto n = prob.n();
    return resample_fit(prob, cfg, [n, cfg](int r, int a) { return draw_subsample(n, cfg, r, a); },
                        sopt, popt);
}

/**
 * Lambda for the resampling fitter, chosen once by k-fold cross-validation on
 * a single seeded subsample and then reused for all M fits.
 */
inline double tune_resample_lambda(const Problem& prob, const ResampleConfig& cfg, CVOptions cv = {},
                                   int grid_count = 50, double grid_ratio = 1e-3)
{
    cfg.validate(prob.n());
    ResampleConfig tcfg = cfg;
    tcfg.seed = detail::splitmix64(cfg.seed ^ 0x7475'6E65ULL);
    const auto idx = draw_subsample(prob.n(), tcfg, 0, 0);
    Dataset sub;
    sub.x.resize(static_cast<Eigen::Index>(idx.size()), prob.p());
    sub.y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        sub.x.row(static_cast<Eigen::Index>(i)) = prob.x.row(idx[i]);
        sub.y(static_cast<Eigen::Index>(i)) = prob.y(idx[i]);
    }
    sub.task = prob.loss == Loss::SquaredError ? Task::Regression : Task::Classification;
    const Problem sp = make_problem(sub, prob.prior.with_lambda(prob.prior.lambda), cv.problem);
    const auto grid = make_lambda_grid(sp, grid_count, grid_ratio);
    PriorSpec prior = prob.prior;
    prior.sigma.reset();
    cv.seed = tcfg.seed;
    return cross_validate(sub, prior, grid, cv).lambda_min;
}

} // namespace copreg
