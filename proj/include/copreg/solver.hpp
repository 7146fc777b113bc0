#pragma once
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>
#include <Eigen/Dense>
#include <copreg/copula.hpp>
#include <copreg/data.hpp>
#include <copreg/errors.hpp>
#include <copreg/lbfgsb.hpp>
#include <copreg/sigma.hpp>

namespace copreg {

enum class Loss { SquaredError, Logistic };

inline Loss loss_for(Task t) { return t == Task::Regression ? Loss::SquaredError : Loss::Logistic; }

/// A standardized estimation problem: loss(w) + penalty(w).
struct Problem
{
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    Loss loss = Loss::SquaredError;
    PriorSpec prior;
    StandardizationRecord standardization;  // maps back to the original scale

    Eigen::Index n() const { return x.rows(); }
    Eigen::Index p() const { return x.cols(); }

    void validate() const
    {
        if (x.rows() != y.size()) throw invalid_parameter("X and y row counts differ");
        if (x.rows() < 1 || x.cols() < 1) throw invalid_parameter("empty problem");
        if (!x.allFinite() || !y.allFinite()) throw invalid_parameter("non-finite data in problem");
        prior.validate(p());
        if (loss == Loss::SquaredError) {
            const double scale = std::max(1.0, y.lpNorm<Eigen::Infinity>());
            if (std::abs(y.mean()) > 1e-10 * scale) {
                throw invalid_parameter("regression response must be centered");
            }
        } else {
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                if (y(i) != 0.0 && y(i) != 1.0) {
                    throw invalid_parameter("classification response must be 0 or 1");
                }
            }
        }
        for (Eigen::Index j = 0; j < p(); ++j) {
            const double mean = x.col(j).mean();
            const double var = (x.col(j).array() - mean).square().mean();
            if (std::abs(mean) > 1e-8 || std::abs(var - 1.0) > 1e-6) {
                throw invalid_parameter("column " + std::to_string(j) + " is not standardized");
            }
        }
        if (standardization.means.size() != p()) {
            throw invalid_parameter("standardization record does not match p");
        }
    }
};

enum class SigmaMode { Estimate, Identity };

struct ProblemOptions
{
    double sigma_blend = kDefaultSigmaBlend;
    SigmaMode sigma_mode = SigmaMode::Estimate;
};

/// Standardizes a raw dataset and, for copula priors, estimates sigma from it.
inline Problem make_problem(const Dataset& raw, PriorSpec prior, const ProblemOptions& opt = {})
{
    auto [std_data, rec] = standardize(raw);
    Problem prob;
    prob.x = std::move(std_data.x);
    prob.y = std::move(std_data.y);
    prob.loss = loss_for(raw.task);
    prob.standardization = std::move(rec);
    if (prior.is_copula()) {
        prior.sigma = std::make_shared<const CorrelationMatrix>(
            opt.sigma_mode == SigmaMode::Identity ? CorrelationMatrix::identity(prob.p())
                                                  : estimate_sigma(prob.x, opt.sigma_blend));
    }
    prob.prior = std::move(prior);
    return prob;
}

/// Split variables w = w+ - w- (plus the unpenalized logistic intercept).
struct SplitState
{
    Eigen::VectorXd omega_plus;
    Eigen::VectorXd omega_minus;
    double intercept = 0.0;
    double multiplier = 0.0;
    double penalty = 10.0;

    Eigen::VectorXd omega() const { return omega_plus - omega_minus; }
    double complementarity() const { return omega_plus.dot(omega_minus); }

    static SplitState from_omega(const Eigen::VectorXd& w, double intercept = 0.0)
    {
        SplitState s;
        s.omega_plus = w.cwiseMax(0.0);
        s.omega_minus = (-w).cwiseMax(0.0);
        s.intercept = intercept;
        return s;
    }
};

struct FitResult
{
    Eigen::VectorXd omega_hat;       // standardized scale
    Eigen::VectorXd omega_plus;
    Eigen::VectorXd omega_minus;
    double intercept_std = 0.0;      // logistic only
    Eigen::VectorXd coef_original;
    double intercept_original = 0.0;
    double lambda = 0.0;
    double objective = std::numeric_limits<double>::quiet_NaN();
    double constraint_residual = std::numeric_limits<double>::quiet_NaN();
    double gradient_norm = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    int outer_iterations = 0;
    bool converged = false;
    int restarts_used = 0;
};

/// One line of the optional diagnostics stream.
struct TraceEvent
{
    int start = 0;
    int outer = 0;
    int inner_iterations = 0;
    double objective = 0.0;
    double constraint = 0.0;
    double multiplier = 0.0;
    double penalty = 0.0;
    double gradient_norm = 0.0;
};

struct SolverOptions
{
    double grad_tol = 1e-6;          // relative: ||pg|| <= tol (1 + |f|)
    double constraint_tol = 1e-6;
    int max_outer = 200;
    int max_inner = 500;
    int restarts = 3;                // extra random starts; copula priors only
    std::uint64_t seed = 0;
    int memory = 10;
    double penalty_init = 10.0;
    double penalty_growth = 10.0;
    double penalty_max = 1e8;
    double required_shrink = 0.25;
    double init_value = 1e-3;
    std::optional<Eigen::VectorXd> warm_start;
    double warm_intercept = 0.0;
    std::function<void(const TraceEvent&)> trace;
};

/// Called after every solve() when set; lets test harnesses audit all fits.
inline std::function<void(const FitResult&)>& fit_observer()
{
    static std::function<void(const FitResult&)> hook;
    return hook;
}

namespace detail {

inline double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

inline double sigmoid(double t)
{
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// Loss evaluation with cached sufficient statistics for squared error.
class LossEvaluator
{
public:
    explicit LossEvaluator(const Problem& prob) : prob_(prob)
    {
        if (prob.loss == Loss::SquaredError && prob.n() > prob.p()) {
            gram_ = prob.x.transpose() * prob.x;
            xty_ = prob.x.transpose() * prob.y;
            yty_ = prob.y.squaredNorm();
            use_gram_ = true;
        }
    }

    // Value; writes d loss / d omega and d loss / d intercept.
    double operator()(const Eigen::VectorXd& omega, double intercept, Eigen::VectorXd& grad,
                      double& grad_intercept) const
    {
        grad_intercept = 0.0;
        if (prob_.loss == Loss::SquaredError) {
            if (use_gram_) {
                const Eigen::VectorXd g_omega = gram_ * omega;
                grad = 2.0 * (g_omega - xty_);
                return std::max(yty_ - 2.0 * xty_.dot(omega) + omega.dot(g_omega), 0.0);
            }
            const Eigen::VectorXd r = prob_.y - prob_.x * omega;
            grad = -2.0 * (prob_.x.transpose() * r);
            return r.squaredNorm();
        }
        const Eigen::VectorXd eta = (prob_.x * omega).array() + intercept;
        Eigen::VectorXd resid(eta.size());
        double value = 0.0;
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            value += softplus(eta(i)) - prob_.y(i) * eta(i);
            resid(i) = sigmoid(eta(i)) - prob_.y(i);
        }
        grad = prob_.x.transpose() * resid;
        grad_intercept = resid.sum();
        return value;
    }

private:
    const Problem& prob_;
    Eigen::MatrixXd gram_;
    Eigen::VectorXd xty_;
    double yty_ = 0.0;
    bool use_gram_ = false;
};

// Packs (w+, w-[, b]) into one bounded vector.
struct Layout
{
    Eigen::Index p;
    bool intercept;
    Eigen::Index size() const { return 2 * p + (intercept ? 1 : 0); }

    Eigen::VectorXd lower() const
    {
        Eigen::VectorXd lo = Eigen::VectorXd::Zero(size());
        if (intercept) lo(2 * p) = -std::numeric_limits<double>::infinity();
        return lo;
    }

    Eigen::VectorXd pack(const SplitState& s) const
    {
        Eigen::VectorXd v(size());
        v << s.omega_plus, s.omega_minus;
        if (intercept) v(2 * p) = s.intercept;
        return v;
    }

    void unpack(const Eigen::VectorXd& v, SplitState& s) const
    {
        s.omega_plus = v.head(p);
        s.omega_minus = v.segment(p, p);
        s.intercept = intercept ? v(2 * p) : 0.0;
    }
};

// Objective pieces at a split state; gradients w.r.t. w+ and w- exclude
// augmented-Lagrangian terms.
struct Evaluation
{
    double value;
    Eigen::VectorXd grad_plus;
    Eigen::VectorXd grad_minus;
    double grad_intercept;
};

inline Evaluation evaluate(const SplitState& s, const Problem& prob, const LossEvaluator& loss)
{
    const Eigen::VectorXd omega = s.omega();
    Eigen::VectorXd g_loss;
    double g_b = 0.0;
    const double l = loss(omega, s.intercept, g_loss, g_b);
    const SmoothPenalty sp = smooth_penalty(omega, prob.prior, true);
    const double l1 = prob.prior.l1_weight();
    Evaluation ev;
    ev.value = l + sp.value + l1 * (s.omega_plus.sum() + s.omega_minus.sum());
    const Eigen::VectorXd g_omega = g_loss + sp.gradient;
    ev.grad_plus = g_omega.array() + l1;
    ev.grad_minus = (-g_omega).array() + l1;
    ev.grad_intercept = g_b;
    return ev;
}

inline void check_state(const SplitState& s, const Problem& prob)
{
    if (s.omega_plus.size() != prob.p() || s.omega_minus.size() != prob.p()) {
        throw invalid_parameter("split state dimension does not match problem");
    }
}

} // namespace detail

/// loss(w+ - w-) + smooth penalty + l1 * sum(w+ + w-).
inline double objective(const SplitState& state, const Problem& prob)
{
    detail::check_state(state, prob);
    const detail::LossEvaluator loss(prob);
    return detail::evaluate(state, prob, loss).value;
}

/// Gradients of objective() with respect to w+ and w-.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> gradient(const SplitState& state,
                                                            const Problem& prob)
{
    detail::check_state(state, prob);
    const detail::LossEvaluator loss(prob);
    auto ev = detail::evaluate(state, prob, loss);
    return {std::move(ev.grad_plus), std::move(ev.grad_minus)};
}

namespace detail {

struct StartOutcome
{
    SplitState state;
    double objective;
    double constraint;
    double gradient_norm;
    int iterations;
    int outer;
    bool converged;
};

inline constexpr double kInnerTighten = 1e-3;

inline StartOutcome run_augmented_lagrangian(const Problem& prob, const LossEvaluator& loss,
                                             SplitState state, const SolverOptions& opt,
                                             int start_index, std::vector<TraceEvent>& history)
{
    const Layout layout{prob.p(), prob.loss == Loss::Logistic};
    const Eigen::VectorXd lower = layout.lower();
    state.multiplier = 0.0;
    state.penalty = opt.penalty_init;

    optim::BoundedLbfgsOptions inner;
    inner.max_iterations = opt.max_inner;
    inner.memory = opt.memory;
    // The inner solve aims well below the acceptance tolerance: a relative
    // test on |f| alone leaves coefficients loose when f is dominated by y'y.
    // A stalled inner solve is still accepted if it meets grad_tol.
    inner.abs_tolerance = opt.grad_tol * kInnerTighten;
    inner.rel_tolerance = opt.grad_tol * kInnerTighten;

    StartOutcome out{state, 0.0, 0.0, 0.0, 0, 0, false};
    Eigen::VectorXd x = layout.pack(state);
    double prev_violation = std::numeric_limits<double>::infinity();
    SplitState work = state;

    for (int outer = 1; outer <= opt.max_outer; ++outer) {
        const double mu = state.multiplier;
        const double rho = state.penalty;
        auto lagrangian = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
            layout.unpack(v, work);
            const Evaluation ev = evaluate(work, prob, loss);
            const double c = work.complementarity();
            const double weight = mu + rho * c;
            grad.resize(v.size());
            grad.head(prob.p()) = ev.grad_plus + weight * work.omega_minus;
            grad.segment(prob.p(), prob.p()) = ev.grad_minus + weight * work.omega_plus;
            if (layout.intercept) grad(2 * prob.p()) = ev.grad_intercept;
            return ev.value + mu * c + 0.5 * rho * c * c;
        };
        const auto res = optim::minimize_bounded(lagrangian, x, lower, inner);
        out.iterations += res.iterations;
        out.outer = outer;
        if (res.nonfinite) {
            std::ostringstream trace;
            for (const auto& e : history) {
                trace << "start=" << e.start << " outer=" << e.outer << " f=" << e.objective
                      << " c=" << e.constraint << '\n';
            }
            throw diverged("non-finite objective encountered in augmented-Lagrangian solve",
                           trace.str());
        }
        x = res.x;
        layout.unpack(x, state);
        const double violation = state.complementarity();
        const double f = evaluate(state, prob, loss).value;

        TraceEvent ev{start_index, outer, res.iterations, f, violation, mu, rho, res.pg_norm};
        history.push_back(ev);
        if (opt.trace) opt.trace(ev);

        out.state = state;
        out.objective = f;
        out.constraint = violation;
        out.gradient_norm = res.pg_norm;
        const bool stationary = res.converged || res.pg_norm <= opt.grad_tol * (1.0 + std::abs(res.f));
        if (violation <= opt.constraint_tol && stationary) {
            out.converged = true;
            return out;
        }
        // Feasible but stalled: further outer iterations would not change the iterate.
        if (violation <= opt.constraint_tol && res.iterations == 0) return out;
        if (violation > opt.constraint_tol) {
            state.multiplier = mu + rho * violation;
            if (violation > opt.required_shrink * prev_violation) {
                state.penalty = std::min(rho * opt.penalty_growth, opt.penalty_max);
            }
            prev_violation = violation;
        }
    }
    return out;
}

} // namespace detail

/**
 * Posterior-mode fit by the augmented Lagrangian method on the split
 * problem
 *
 *     min  loss(w+ - w-) + penalty   s.t.  sum_j w+_j w-_j = 0,  w+, w- >= 0,
 *
 * with a bound-constrained quasi-Newton inner solver. Copula priors are
 * non-convex, so `restarts` extra seeded random starts are run for them and
 * the best converged objective is kept.
 */
inline FitResult solve(const Problem& prob, const SolverOptions& opt = {})
{
    prob.prior.validate(prob.p());
    if (prob.x.rows() != prob.y.size()) throw invalid_parameter("X and y row counts differ");
    const auto p = prob.p();
    const auto n = prob.n();
    const detail::LossEvaluator loss(prob);

    // Scale for random starts: the largest marginal coefficient magnitude.
    Eigen::VectorXd g0;
    double gb0 = 0.0;
    loss(Eigen::VectorXd::Zero(p), 0.0, g0, gb0);
    const double scale = std::max(1e-3, g0.lpNorm<Eigen::Infinity>() /
                                            (prob.loss == Loss::SquaredError ? 2.0 * n : 0.25 * n));

    // Random starts are oriented by the sign of the strongest marginal
    // gradient, so negating y negates every start and hence the fit.
    Eigen::Index strongest = 0;
    g0.cwiseAbs().maxCoeff(&strongest);
    const double orientation = g0(strongest) > 0.0 ? -1.0 : 1.0;

    const int extra = prob.prior.is_copula() ? std::max(0, opt.restarts) : 0;
    std::vector<TraceEvent> history;
    detail::StartOutcome best{};
    bool have_best = false;
    for (int start = 0; start <= extra; ++start) {
        SplitState init;
        if (start == 0 && opt.warm_start) {
            if (opt.warm_start->size() != p) throw invalid_parameter("warm start has wrong size");
            init = SplitState::from_omega(*opt.warm_start, opt.warm_intercept);
        } else if (start == 0) {
            init.omega_plus = Eigen::VectorXd::Constant(p, opt.init_value);
            init.omega_minus = Eigen::VectorXd::Constant(p, opt.init_value);
        } else {
            std::mt19937_64 rng(opt.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(start));
            std::normal_distribution<double> normal(0.0, scale);
            Eigen::VectorXd w(p);
            for (Eigen::Index j = 0; j < p; ++j) w(j) = normal(rng);
            init = SplitState::from_omega(orientation * w);
            init.omega_plus.array() += opt.init_value;
            init.omega_minus.array() += opt.init_value;
        }
        auto outcome = detail::run_augmented_lagrangian(prob, loss, init, opt, start, history);
        const bool better = !have_best || (outcome.converged && !best.converged) ||
                            (outcome.converged == best.converged && outcome.objective < best.objective);
        if (better) {
            best = std::move(outcome);
            have_best = true;
        }
    }

    FitResult fit;
    fit.omega_plus = best.state.omega_plus;
    fit.omega_minus = best.state.omega_minus;
    fit.omega_hat = best.state.omega();
    fit.intercept_std = best.state.intercept;
    fit.lambda = prob.prior.lambda;
    fit.objective = best.objective;
    fit.constraint_residual = best.constraint;
    fit.gradient_norm = best.gradient_norm;
    fit.iterations = best.iterations;
    fit.outer_iterations = best.outer;
    fit.converged = best.converged;
    fit.restarts_used = extra;
    if (prob.standardization.means.size() == p) {
        auto [beta, b0] = prob.standardization.to_original(fit.omega_hat, fit.intercept_std);
        fit.coef_original = std::move(beta);
        fit.intercept_original = b0;
    } else {
        fit.coef_original = fit.omega_hat;
        fit.intercept_original = fit.intercept_std;
    }
    if (auto& hook = fit_observer()) hook(fit);
    return fit;
}

/// Warm-started fits along a strictly decreasing lambda grid.
struct SolutionPath
{
    std::vector<double> lambdas;
    std::vector<FitResult> fits;
    double continuity = 0.0;   // max ||w_k - w_{k-1}||_inf / |lambda_k - lambda_{k-1}|
};

inline SolutionPath solution_path(const Problem& prob, const std::vector<double>& grid,
                                  const SolverOptions& opt = {})
{
    if (grid.empty()) throw invalid_parameter("empty lambda grid");
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (!(grid[k] < grid[k - 1])) {
            throw invalid_parameter("lambda grid must be strictly decreasing");
        }
    }
    SolutionPath path;
    path.lambdas = grid;
    Problem local = prob;
    SolverOptions o = opt;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        local.prior.lambda = grid[k];
        path.fits.push_back(solve(local, o));
        const auto& fit = path.fits.back();
        o.warm_start = fit.omega_hat;
        o.warm_intercept = fit.intercept_std;
        if (k > 0) {
            const double diff = (fit.omega_hat - path.fits[k - 1].omega_hat).lpNorm<Eigen::Infinity>();
            path.continuity = std::max(path.continuity, diff / (grid[k - 1] - grid[k]));
        }
    }
    return path;
}

/// Standardized-scale linear predictor (regression) or probability (logistic).
inline Eigen::VectorXd predict(const Eigen::MatrixXd& x_std, const FitResult& fit, Loss loss)
{
    Eigen::VectorXd eta = x_std * fit.omega_hat;
    if (loss == Loss::SquaredError) return eta;
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = detail::sigmoid(eta(i) + fit.intercept_std);
    return eta;
}

/// Predictions on the original scale from raw features.
inline Eigen::VectorXd predict_original(const Eigen::MatrixXd& x_raw, const FitResult& fit, Loss loss)
{
    Eigen::VectorXd eta = (x_raw * fit.coef_original).array() + fit.intercept_original;
    if (loss == Loss::SquaredError) return eta;
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = detail::sigmoid(eta(i));
    return eta;
}

/// Mean squared error (regression) or misclassification rate (classification).
inline double prediction_loss(const Eigen::VectorXd& predicted, const Eigen::VectorXd& y, Loss loss)
{
    if (loss == Loss::SquaredError) return (predicted - y).squaredNorm() / static_cast<double>(y.size());
    double wrong = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double label = predicted(i) >= 0.5 ? 1.0 : 0.0;
        if (label != y(i)) wrong += 1.0;
    }
    return wrong / static_cast<double>(y.size());
}

} // namespace copreg
