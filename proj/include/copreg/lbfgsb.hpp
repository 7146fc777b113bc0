#pragma once
#include <cmath>
#include <deque>
#include <limits>
#include <vector>
#include <Eigen/Dense>

namespace copreg {
namespace optim {

struct BoundedLbfgsOptions
{
    int max_iterations = 500;
    int memory = 10;
    // Stop when ||projected gradient||_inf <= abs_tolerance + rel_tolerance * |f|.
    double abs_tolerance = 1e-6;
    double rel_tolerance = 1e-6;
    double armijo = 1e-4;
    int max_backtracks = 50;
};

struct BoundedLbfgsResult
{
    Eigen::VectorXd x;
    Eigen::VectorXd gradient;
    double f = std::numeric_limits<double>::quiet_NaN();
    double pg_norm = std::numeric_limits<double>::infinity();
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    bool nonfinite = false;
};

/// ||P(x - g) - x||_inf restricted to the lower bounds (components may be -inf).
inline double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                      const Eigen::VectorXd& lower)
{
    double out = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double step = std::max(x(i) - g(i), lower(i)) - x(i);
        out = std::max(out, std::abs(step));
    }
    return out;
}

/**
 * Minimizes a smooth function subject to x >= lower with a two-metric
 * projected limited-memory BFGS: variables in the epsilon-active set take a
 * scaled gradient step, the remaining ones a quasi-Newton step built from
 * curvature pairs restricted to them, and the combined step is projected onto
 * the bounds with an Armijo backtracking search along the projection arc.
 *
 * `fn(x, grad)` returns f(x) and writes the gradient.
 */
template <class Fn>
BoundedLbfgsResult minimize_bounded(Fn&& fn, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                                    const BoundedLbfgsOptions& opt = {})
{
    const auto n = x0.size();
    auto project = [&](Eigen::VectorXd& v) { v = v.cwiseMax(lower); };

    BoundedLbfgsResult res;
    res.x = std::move(x0);
    project(res.x);
    res.gradient.resize(n);
    res.f = fn(res.x, res.gradient);
    res.evaluations = 1;
    if (!std::isfinite(res.f) || !res.gradient.allFinite()) {
        res.nonfinite = true;
        return res;
    }

    std::deque<Eigen::VectorXd> s_mem, y_mem;
    Eigen::VectorXd d(n), x_new(n), g_new(n), q(n);
    Eigen::VectorXd free(n);

    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        const double f = res.f;
        const Eigen::VectorXd& x = res.x;
        const Eigen::VectorXd& g = res.gradient;
        res.pg_norm = projected_gradient_norm(x, g, lower);
        const bool within = res.pg_norm <= opt.abs_tolerance + opt.rel_tolerance * std::abs(f);
        // The first step is always attempted: near a bound the projected
        // gradient is capped by the distance to it and can look small.
        if (within && res.iterations > 0) {
            // A relative tolerance can accept points held just off a bound by
            // a gradient pushing into it. Snap those onto the bound if that
            // does not increase f, and keep iterating from there.
            x_new = x;
            bool snapped = false;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (x(i) > lower(i) && g(i) > 0.0 && x(i) - lower(i) < g(i)) {
                    x_new(i) = lower(i);
                    snapped = true;
                }
            }
            if (snapped) {
                const double f_snap = fn(x_new, g_new);
                ++res.evaluations;
                if (std::isfinite(f_snap) && g_new.allFinite() && f_snap <= f) {
                    res.x.swap(x_new);
                    res.gradient.swap(g_new);
                    res.f = f_snap;
                    s_mem.clear();
                    y_mem.clear();
                    continue;
                }
            }
            res.converged = true;
            return res;
        }

        const double eps = std::min(1e-3, res.pg_norm);
        for (Eigen::Index i = 0; i < n; ++i) {
            free(i) = (x(i) - lower(i) <= eps && g(i) > 0.0) ? 0.0 : 1.0;
        }

        // Two-loop recursion restricted to the free components.
        const auto m = s_mem.size();
        std::vector<Eigen::VectorXd> sf(m), yf(m);
        std::vector<double> rho(m, 0.0), alpha(m, 0.0);
        double gamma = 1.0 / std::max(1.0, g.lpNorm<Eigen::Infinity>());
        for (std::size_t k = 0; k < m; ++k) {
            sf[k] = s_mem[k].cwiseProduct(free);
            yf[k] = y_mem[k].cwiseProduct(free);
            const double sy = sf[k].dot(yf[k]);
            if (sy > 1e-12 * sf[k].norm() * yf[k].norm() && sy > 0.0) {
                rho[k] = 1.0 / sy;
                gamma = sy / yf[k].squaredNorm();
            }
        }
        q = -g.cwiseProduct(free);
        for (std::size_t k = m; k-- > 0;) {
            if (rho[k] == 0.0) continue;
            alpha[k] = rho[k] * sf[k].dot(q);
            q -= alpha[k] * yf[k];
        }
        q *= gamma;
        for (std::size_t k = 0; k < m; ++k) {
            if (rho[k] == 0.0) continue;
            const double beta = rho[k] * yf[k].dot(q);
            q += (alpha[k] - beta) * sf[k];
        }
        for (Eigen::Index i = 0; i < n; ++i) d(i) = free(i) > 0.0 ? q(i) : -gamma * g(i);
        if (!(g.dot(d) < 0.0) || !d.allFinite()) {
            s_mem.clear();
            y_mem.clear();
            d = -g / std::max(1.0, g.lpNorm<Eigen::Infinity>());
        }

        // Backtracking along the projection arc.
        double step = 1.0;
        bool accepted = false;
        double f_new = f;
        for (int bt = 0; bt < opt.max_backtracks; ++bt) {
            x_new = x + step * d;
            project(x_new);
            f_new = fn(x_new, g_new);
            ++res.evaluations;
            const double decrease = g.dot(x_new - x);
            if (std::isfinite(f_new) && g_new.allFinite() &&
                f_new <= f + opt.armijo * std::min(decrease, 0.0) && f_new <= f) {
                accepted = true;
                break;
            }
            step *= (bt == 0 && std::isfinite(f_new)) ? 0.25 : 0.5;
        }
        if (!accepted) {
            if (s_mem.empty()) {
                // No progress possible from steepest descent.
                res.converged = within;
                return res;
            }
            s_mem.clear();
            y_mem.clear();
            continue;
        }

        Eigen::VectorXd s = x_new - x;
        Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        res.x.swap(x_new);
        res.gradient.swap(g_new);
        res.f = f_new;
        if (s.lpNorm<Eigen::Infinity>() <= 1e-15 * std::max(1.0, res.x.lpNorm<Eigen::Infinity>())) {
            res.pg_norm = projected_gradient_norm(res.x, res.gradient, lower);
            res.converged = res.pg_norm <= opt.abs_tolerance + opt.rel_tolerance * std::abs(res.f);
            return res;
        }
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_mem.push_back(std::move(s));
            y_mem.push_back(std::move(y));
            if (static_cast<int>(s_mem.size()) > opt.memory) {
                s_mem.pop_front();
                y_mem.pop_front();
            }
        }
    }
    res.pg_norm = projected_gradient_norm(res.x, res.gradient, lower);
    res.converged = res.pg_norm <= opt.abs_tolerance + opt.rel_tolerance * std::abs(res.f);
    return res;
}

} // namespace optim
} // namespace copreg
