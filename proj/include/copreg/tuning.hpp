#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <string>
#include <vector>
#include <Eigen/Dense>
#include <copreg/copula.hpp>
#include <copreg/data.hpp>
#include <copreg/errors.hpp>
#include <copreg/parallel.hpp>
#include <copreg/solver.hpp>

namespace copreg {

/// Smallest lambda at which the lasso solution (sigma = I) is exactly zero.
inline double lambda_max(const Problem& prob)
{
    if (prob.loss == Loss::SquaredError) {
        return 2.0 * (prob.x.transpose() * prob.y).lpNorm<Eigen::Infinity>();
    }
    // Intercept-only logistic fit has residual y - mean(y).
    const Eigen::VectorXd r = prob.y.array() - prob.y.mean();
    return (prob.x.transpose() * r).lpNorm<Eigen::Infinity>();
}

/// count log-spaced values from lambda_max down to ratio * lambda_max.
inline std::vector<double> make_lambda_grid(const Problem& prob, int count = 50, double ratio = 1e-3)
{
    if (count < 2) throw invalid_parameter("lambda grid needs at least 2 points");
    if (!(ratio > 0.0 && ratio < 1.0)) throw invalid_parameter("lambda grid ratio must lie in (0, 1)");
    const double top = lambda_max(prob);
    const double scale = prob.x.norm() * prob.y.norm();
    if (!(top > 1e-14 * scale) || !std::isfinite(top)) {
        throw invalid_parameter("degenerate lambda grid: X^T y is zero, so lambda_max = 0");
    }
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double log_top = std::log(top);
    const double log_ratio = std::log(ratio);
    for (int k = 0; k < count; ++k) {
        grid[static_cast<std::size_t>(k)] = std::exp(log_top + log_ratio * k / (count - 1));
    }
    grid.front() = top;
    return grid;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// FNV-1a over the bytes of one row (features then response).
inline std::uint64_t row_hash(const Dataset& d, Eigen::Index i)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto feed = [&](double v) {
        if (v == 0.0) v = 0.0;  // fold -0 into +0
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001B3ULL;
        }
    };
    for (Eigen::Index j = 0; j < d.p(); ++j) feed(d.x(i, j));
    feed(d.y(i));
    return h;
}

} // namespace detail

/**
 * Fold index per row. Folds are keyed on row content mixed with the seed, so
 * identical rows always land in the same fold and the assignment does not
 * depend on row order. Distinct row contents are ranked by their keyed hash
 * and dealt round-robin, which balances fold sizes.
 */
inline std::vector<int> assign_folds(const Dataset& d, int k, std::uint64_t seed)
{
    if (k < 2) throw invalid_parameter("cross-validation needs k >= 2 folds");
    const auto n = d.n();
    std::vector<std::uint64_t> key(static_cast<std::size_t>(n));
    const std::uint64_t salt = detail::splitmix64(seed);
    for (Eigen::Index i = 0; i < n; ++i) {
        key[static_cast<std::size_t>(i)] = detail::splitmix64(detail::row_hash(d, i) ^ salt);
    }
    std::vector<std::uint64_t> distinct = key;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (static_cast<int>(distinct.size()) < k) {
        throw data_error("only " + std::to_string(distinct.size()) + " distinct rows for " +
                         std::to_string(k) + " folds; use a smaller k");
    }
    std::vector<int> folds(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < key.size(); ++i) {
        const auto rank = std::lower_bound(distinct.begin(), distinct.end(), key[i]) - distinct.begin();
        folds[i] = static_cast<int>(rank % k);
    }
    return folds;
}

struct CVReport
{
    std::vector<double> lambda_grid;
    Eigen::MatrixXd fold_losses;     // grid x k
    Eigen::VectorXd mean_loss;
    Eigen::VectorXd se_loss;
    double lambda_min = 0.0;
    double lambda_1se = 0.0;
    std::size_t index_min = 0;
    std::size_t index_1se = 0;
    std::vector<int> folds;          // fold index per row
};

struct CVOptions
{
    int folds = 10;
    std::uint64_t seed = 0;
    SolverOptions solver;                // same options as a final fit, restarts included
    ProblemOptions problem;
};

namespace detail {

// Validation loss of every path point, predicting on the original scale.
inline std::vector<double> path_losses(const SolutionPath& path, const Dataset& valid)
{
    const Loss loss = loss_for(valid.task);
    std::vector<double> out;
    out.reserve(path.fits.size());
    for (const auto& fit : path.fits) {
        out.push_back(prediction_loss(predict_original(valid.x, fit, loss), valid.y, loss));
    }
    return out;
}

// First index (largest lambda) attaining the minimum.
inline std::size_t argmin_prefer_first(const std::vector<double>& v)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] < v[best]) best = i;
    }
    return best;
}

inline void check_grid(const std::vector<double>& grid)
{
    if (grid.empty()) throw invalid_parameter("empty lambda grid");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] > 0.0)) throw invalid_parameter("lambda grid values must be positive");
        if (k > 0 && !(grid[k] < grid[k - 1])) {
            throw invalid_parameter("lambda grid must be strictly decreasing");
        }
    }
}

} // namespace detail

/**
 * k-fold cross-validation of lambda on a raw (unstandardized) dataset.
 * Standardization and sigma are recomputed from each training split.
 */
inline CVReport cross_validate(const Dataset& raw, const PriorSpec& prior,
                               const std::vector<double>& grid, const CVOptions& opt = {})
{
    detail::check_grid(grid);
    const int k = opt.folds;
    CVReport rep;
    rep.lambda_grid = grid;
    rep.folds = assign_folds(raw, k, opt.seed);

    std::vector<std::vector<Eigen::Index>> train_idx(static_cast<std::size_t>(k));
    std::vector<std::vector<Eigen::Index>> valid_idx(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < raw.n(); ++i) {
        const int f = rep.folds[static_cast<std::size_t>(i)];
        for (int g = 0; g < k; ++g) {
            (g == f ? valid_idx : train_idx)[static_cast<std::size_t>(g)].push_back(i);
        }
    }

    const auto m = grid.size();
    rep.fold_losses.resize(static_cast<Eigen::Index>(m), k);
    parallel_for(static_cast<std::size_t>(k), [&](std::size_t f) {
        const auto& tr = train_idx[f];
        if (tr.size() < 2) {
            throw data_error("fold " + std::to_string(f) + " leaves fewer than 2 training rows; use a smaller k");
        }
        const Dataset train = raw.rows(tr);
        const Dataset valid = raw.rows(valid_idx[f]);
        Problem prob;
        try {
            prob = make_problem(train, prior.with_lambda(grid.front()), opt.problem);
        } catch (const degenerate_feature& e) {
            throw data_error("fold " + std::to_string(f) + " is too small: " + e.what() +
                             " in its training split; use a smaller k");
        } catch (const linalg_error& e) {
            throw data_error("fold " + std::to_string(f) + " is too small for sigma estimation (" +
                             e.what() + "); use a smaller k");
        }
        const auto path = solution_path(prob, grid, opt.solver);
        const auto losses = detail::path_losses(path, valid);
        for (std::size_t g = 0; g < m; ++g) {
            rep.fold_losses(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(f)) = losses[g];
        }
    });

    rep.mean_loss = rep.fold_losses.rowwise().mean();
    rep.se_loss.resize(static_cast<Eigen::Index>(m));
    for (Eigen::Index g = 0; g < static_cast<Eigen::Index>(m); ++g) {
        const double var = (rep.fold_losses.row(g).array() - rep.mean_loss(g)).square().sum() / (k - 1);
        rep.se_loss(g) = std::sqrt(var / k);
    }
    std::vector<double> mean(rep.mean_loss.data(), rep.mean_loss.data() + m);
    rep.index_min = detail::argmin_prefer_first(mean);
    rep.lambda_min = grid[rep.index_min];
    const double cutoff = mean[rep.index_min] + rep.se_loss(static_cast<Eigen::Index>(rep.index_min));
    rep.index_1se = rep.index_min;
    for (std::size_t g = 0; g < rep.index_min; ++g) {
        if (mean[g] <= cutoff) {
            rep.index_1se = g;
            break;
        }
    }
    rep.lambda_1se = grid[rep.index_1se];
    return rep;
}

struct TuneOptions
{
    std::vector<double> grid;            // empty: default grid from the training problem
    int grid_count = 50;
    double grid_ratio = 1e-3;
    bool tune_alpha = false;             // elastic net only
    bool tune_nu = false;                // t-copula only
    std::vector<double> alpha_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<double> nu_grid{5.0, 10.0, 30.0};
    SolverOptions solver;
    ProblemOptions problem;
};

struct TuneResult
{
    double lambda = 0.0;
    double alpha = 1.0;
    double nu = 10.0;
    double validation_loss = std::numeric_limits<double>::infinity();
    std::vector<double> grid;
    std::vector<double> losses;          // validation loss along the grid at the chosen alpha/nu
    FitResult fit;                       // training fit at the selection
};

/**
 * Held-out validation tuning: the prior is fitted on the raw training data
 * and scored on the raw validation data through the training standardization.
 * Ties go to the larger lambda.
 */
inline TuneResult validation_tune(const Dataset& train, const Dataset& valid, const PriorSpec& prior,
                                  const TuneOptions& opt = {})
{
    std::vector<double> alphas{prior.alpha};
    std::vector<double> nus{prior.nu};
    if (opt.tune_alpha && prior.family == Family::ElasticNet) alphas = opt.alpha_grid;
    if (opt.tune_nu && prior.family == Family::TCopula) nus = opt.nu_grid;

    Problem base = make_problem(train, prior, opt.problem);
    std::vector<double> grid = opt.grid.empty() ? make_lambda_grid(base, opt.grid_count, opt.grid_ratio)
                                                : opt.grid;
    detail::check_grid(grid);

    TuneResult best;
    best.grid = grid;
    for (double nu : nus) {
        for (double alpha : alphas) {
            Problem prob = base;
            prob.prior.alpha = alpha;
            prob.prior.nu = nu;
            const auto path = solution_path(prob, grid, opt.solver);
            const auto losses = detail::path_losses(path, valid);
            const std::size_t i = detail::argmin_prefer_first(losses);
            if (losses[i] < best.validation_loss) {
                best.lambda = grid[i];
                best.alpha = alpha;
                best.nu = nu;
                best.validation_loss = losses[i];
                best.losses = losses;
                best.fit = path.fits[i];
            }
        }
    }
    if (best.losses.empty()) throw diverged("validation loss is not finite at any grid point", "");
    return best;
}

} // namespace copreg
