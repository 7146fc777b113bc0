#pragma once
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>
#include <Eigen/Dense>
#include <copreg/dists.hpp>
#include <copreg/errors.hpp>
#include <copreg/sigma.hpp>

namespace copreg {

enum class Family { Lasso, ElasticNet, GaussCopula, TCopula };

inline std::string_view to_string(Family f)
{
    switch (f) {
        case Family::Lasso: return "lasso";
        case Family::ElasticNet: return "elastic-net";
        case Family::GaussCopula: return "gauss-copula";
        case Family::TCopula: return "t-copula";
    }
    return "unknown";
}

inline Family parse_family(std::string_view s)
{
    if (s == "lasso") return Family::Lasso;
    if (s == "elastic-net" || s == "enet" || s == "en") return Family::ElasticNet;
    if (s == "gauss-copula" || s == "gauss" || s == "lgc") return Family::GaussCopula;
    if (s == "t-copula" || s == "t" || s == "ltc") return Family::TCopula;
    throw invalid_parameter("unknown prior family '" + std::string(s) + "'");
}

inline bool is_copula(Family f) { return f == Family::GaussCopula || f == Family::TCopula; }

/// Which regularizer is used, with its hyperparameters.
struct PriorSpec
{
    Family family = Family::Lasso;
    double lambda = 1.0;   // Laplace rate and l1 weight
    double alpha = 1.0;    // elastic-net mixing; ignored by the other families
    double nu = 10.0;      // t-copula degrees of freedom
    SigmaPtr sigma;        // copula families only

    bool is_copula() const { return copreg::is_copula(family); }

    /// Weight on sum |w_j| in the split objective.
    double l1_weight() const { return family == Family::ElasticNet ? lambda * alpha : lambda; }

    PriorSpec with_lambda(double l) const
    {
        PriorSpec out = *this;
        out.lambda = l;
        return out;
    }

    void validate(Eigen::Index p) const
    {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) {
            throw invalid_parameter("lambda must be positive and finite");
        }
        if (family == Family::ElasticNet && !(alpha >= 0.0 && alpha <= 1.0)) {
            throw invalid_parameter("elastic-net alpha must lie in [0, 1]");
        }
        if (family == Family::TCopula && !(nu > 0.0)) {
            throw invalid_parameter("t-copula degrees of freedom must be positive");
        }
        if (is_copula()) {
            if (!sigma) throw invalid_parameter("copula prior requires a sigma matrix");
            if (sigma->size() != p) {
                throw invalid_parameter("sigma is " + std::to_string(sigma->size()) +
                                        "x" + std::to_string(sigma->size()) +
                                        " but there are " + std::to_string(p) + " coefficients");
            }
        }
    }
};

/**
 * q_j = base quantile of the Laplace CDF at w_j, with its derivative. The
 * t-copula q grows like exp(lambda |w| / nu) and overflows for large
 * lambda |w|, so log|q| and log dq/dw are carried too; q and dq_domega may
 * then be infinite while the logs stay finite.
 */
struct QMap
{
    Eigen::VectorXd q;
    Eigen::VectorXd dq_domega;
    Eigen::VectorXd log_abs_q;     // -inf where w = 0
    Eigen::VectorXd log_dq;
};

/**
 * Evaluated in tail form, q(w) = -sgn(w) G^{-1}(0.5 exp(-lambda |w|)), which
 * equals G^{-1}(F_L(w)) but keeps full precision for large |w| and makes q
 * exactly odd. The tail mass is handled on the log scale throughout, so no
 * probability clamp is applied.
 */
inline QMap q_map(const Eigen::VectorXd& omega, const PriorSpec& spec)
{
    if (!spec.is_copula()) throw invalid_parameter("q_map requires a copula family");
    const auto p = omega.size();
    QMap out{Eigen::VectorXd(p), Eigen::VectorXd(p), Eigen::VectorXd(p), Eigen::VectorXd(p)};
    const bool gauss = spec.family == Family::GaussCopula;
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    const double log_lambda = std::log(spec.lambda);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double w = omega(j);
        const double log_tail = std::log(0.5) - spec.lambda * std::abs(w);
        double upper;
        double log_upper;
        double log_dens;
        if (gauss) {
            upper = dists::detail::normal_upper_quantile_log(log_tail);
            log_upper = std::log(upper);
            log_dens = -0.5 * upper * upper - half_log_2pi;
        } else {
            log_upper = dists::detail::t_upper_log_quantile_log(log_tail, spec.nu);
            upper = std::exp(log_upper);
            log_dens = dists::detail::log_t_pdf_at_log(log_upper, spec.nu);
        }
        out.q(j) = (w < 0.0) ? -upper : upper;
        out.log_abs_q(j) = log_upper;
        out.log_dq(j) = log_lambda + log_tail - log_dens;
        out.dq_domega(j) = std::exp(out.log_dq(j));
    }
    return out;
}

/// Value and omega-gradient of the smooth (non-l1) part of the penalty.
struct SmoothPenalty
{
    double value = 0.0;
    Eigen::VectorXd gradient;
};

inline SmoothPenalty smooth_penalty(const Eigen::VectorXd& omega, const PriorSpec& spec,
                                    bool with_gradient = true)
{
    const auto p = omega.size();
    SmoothPenalty out;
    if (with_gradient) out.gradient = Eigen::VectorXd::Zero(p);
    switch (spec.family) {
        case Family::Lasso:
            return out;
        case Family::ElasticNet: {
            const double ridge = spec.lambda * (1.0 - spec.alpha);
            out.value = 0.5 * ridge * omega.squaredNorm();
            if (with_gradient) out.gradient = ridge * omega;
            return out;
        }
        case Family::GaussCopula: {
            if (spec.sigma->is_identity()) return out;
            const QMap qm = q_map(omega, spec);
            const Eigen::VectorXd aq = spec.sigma->solve(qm.q) - qm.q;
            out.value = 0.5 * qm.q.dot(aq);
            if (with_gradient) out.gradient = qm.dq_domega.cwiseProduct(aq);
            return out;
        }
        case Family::TCopula: {
            const QMap qm = q_map(omega, spec);
            const double nu = spec.nu;
            const double pd = static_cast<double>(p);
            const double lmax = qm.log_abs_q.maxCoeff();
            if (lmax < 0.0) {
                // All |q| < 1: direct evaluation.
                const Eigen::VectorXd sq = spec.sigma->solve(qm.q);
                const double quad = std::max(qm.q.dot(sq), 0.0);
                double marg = 0.0;
                for (Eigen::Index j = 0; j < p; ++j) marg += std::log1p(qm.q(j) * qm.q(j) / nu);
                out.value = 0.5 * (nu + pd) * std::log1p(quad / nu) - 0.5 * (nu + 1.0) * marg;
                if (with_gradient) {
                    const double joint = (nu + pd) / (nu + quad);
                    for (Eigen::Index j = 0; j < p; ++j) {
                        const double qj = qm.q(j);
                        out.gradient(j) = qm.dq_domega(j) * (joint * sq(j) - (nu + 1.0) * qj / (nu + qj * qj));
                    }
                }
                return out;
            }
            // Scaled by s = max|q| so nothing overflows: Q = s^2 qs' Sigma^{-1} qs.
            Eigen::VectorXd qs(p);
            for (Eigen::Index j = 0; j < p; ++j) {
                const double mag = std::exp(qm.log_abs_q(j) - lmax);
                qs(j) = omega(j) < 0.0 ? -mag : mag;
            }
            const Eigen::VectorXd sqs = spec.sigma->solve(qs);
            const double quad_s = std::max(qs.dot(sqs), 0.0);
            const double inv_s2 = std::exp(-2.0 * lmax);
            double marg = 0.0;
            for (Eigen::Index j = 0; j < p; ++j) {
                const double l = qm.log_abs_q(j);
                marg += l > 0.0 ? 2.0 * l - std::log(nu) + std::log1p(nu * std::exp(-2.0 * l))
                                : std::log1p(std::exp(2.0 * l) / nu);
            }
            out.value = 0.5 * (nu + pd) * (2.0 * lmax + std::log(inv_s2 + quad_s / nu)) -
                        0.5 * (nu + 1.0) * marg;
            if (with_gradient) {
                const double denom = nu * inv_s2 + quad_s;
                for (Eigen::Index j = 0; j < p; ++j) {
                    const double l = qm.log_abs_q(j);
                    const double ld = qm.log_dq(j);
                    const double joint = (nu + pd) * sqs(j) * std::exp(ld - lmax) / denom;
                    double marginal = l > 0.0 ? std::exp(ld - l) / (1.0 + nu * std::exp(-2.0 * l))
                                              : std::exp(l + ld) / (nu + std::exp(2.0 * l));
                    if (omega(j) < 0.0) marginal = -marginal;
                    out.gradient(j) = joint - (nu + 1.0) * marginal;
                }
            }
            return out;
        }
    }
    return out;
}

/// Negative log prior with every omega-independent term dropped.
inline double neg_log_prior(const Eigen::VectorXd& omega, const PriorSpec& spec)
{
    spec.validate(omega.size());
    return smooth_penalty(omega, spec, false).value + spec.l1_weight() * omega.lpNorm<1>();
}

namespace detail {

// log of the integral of exp(-a w^2 - b |w|) over the real line.
inline double log_enet_normalizer(double a, double b)
{
    if (a <= 0.0) return std::log(2.0 / b);
    const double z = b / (2.0 * std::sqrt(a));
    double log_scaled_erfc;  // log(exp(z^2) erfc(z))
    if (z < 25.0) {
        log_scaled_erfc = z * z + std::log(std::erfc(z));
    } else {
        const double iz2 = 1.0 / (z * z);
        log_scaled_erfc = -std::log(z * std::sqrt(std::numbers::pi)) +
                          std::log1p(-0.5 * iz2 + 0.75 * iz2 * iz2);
    }
    return 0.5 * std::log(std::numbers::pi / a) + log_scaled_erfc;
}

} // namespace detail

/// The omega-independent part of the log prior density for p coefficients.
inline double log_prior_constant(const PriorSpec& spec, Eigen::Index p)
{
    spec.validate(p);
    const double pd = static_cast<double>(p);
    const double log_laplace = pd * std::log(0.5 * spec.lambda);
    switch (spec.family) {
        case Family::Lasso:
            return log_laplace;
        case Family::ElasticNet:
            return -pd * detail::log_enet_normalizer(0.5 * spec.lambda * (1.0 - spec.alpha),
                                                     spec.lambda * spec.alpha);
        case Family::GaussCopula:
            return -0.5 * spec.sigma->log_det() + log_laplace;
        case Family::TCopula: {
            const double nu = spec.nu;
            return std::lgamma(0.5 * (nu + pd)) - std::lgamma(0.5 * nu) -
                   0.5 * spec.sigma->log_det() +
                   pd * (std::lgamma(0.5 * nu) - std::lgamma(0.5 * (nu + 1.0))) + log_laplace;
        }
    }
    return 0.0;
}

/// Full joint log prior density, constants included.
inline double log_prior_density(const Eigen::VectorXd& omega, const PriorSpec& spec)
{
    return log_prior_constant(spec, omega.size()) - neg_log_prior(omega, spec);
}

/// Branch of the split variable w = w+ - w-.
enum class Branch { Plus, Minus };

/**
 * Gradient of the penalty with respect to w+ (Branch::Plus) or w-
 * (Branch::Minus): +/- the smooth omega-gradient plus the l1 weight on
 * every component.
 */
inline Eigen::VectorXd neg_log_prior_grad(const Eigen::VectorXd& omega, const PriorSpec& spec,
                                          Branch branch)
{
    spec.validate(omega.size());
    Eigen::VectorXd g = smooth_penalty(omega, spec, true).gradient;
    if (branch == Branch::Minus) g = -g;
    g.array() += spec.l1_weight();
    return g;
}

struct ContourPoint
{
    double omega1;
    double omega2;
    double log_density;
};

/// Full log prior on a resolution x resolution grid over [-range, range]^2.
inline std::vector<ContourPoint> contour_grid(const PriorSpec& spec, double range, int resolution)
{
    if (!(range > 0.0)) throw invalid_parameter("contour range must be positive");
    if (resolution < 2) throw invalid_parameter("contour resolution must be at least 2");
    spec.validate(2);
    const double constant = log_prior_constant(spec, 2);
    std::vector<ContourPoint> out;
    out.reserve(static_cast<std::size_t>(resolution) * resolution);
    const double denom = resolution - 1;
    // Integer-symmetric construction keeps the grid exactly odd about 0.
    auto coord = [&](int i) { return range * (2.0 * i - denom) / denom; };
    Eigen::VectorXd w(2);
    for (int i = 0; i < resolution; ++i) {
        for (int j = 0; j < resolution; ++j) {
            w << coord(i), coord(j);
            const double v = constant - (smooth_penalty(w, spec, false).value +
                                         spec.l1_weight() * w.lpNorm<1>());
            out.push_back({w(0), w(1), v});
        }
    }
    return out;
}

inline void write_contour_csv(std::ostream& os, const std::vector<ContourPoint>& grid)
{
    os.precision(17);
    os << "omega1,omega2,log_density\n";
    for (const auto& pt : grid) {
        os << pt.omega1 << ',' << pt.omega2 << ',' << pt.log_density << '\n';
    }
}

} // namespace copreg
