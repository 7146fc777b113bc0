#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <copreg/errors.hpp>

namespace copreg {
namespace dists {

// Probabilities handed to a quantile function are kept inside
// [kProbClamp, 1 - kProbClamp]; this bounds |normal quantile| near 8.
inline constexpr double kProbClamp = 1e-15;

namespace detail {

inline void check_rate(double rate)
{
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw invalid_parameter("Laplace rate must be positive and finite, got " +
                                std::to_string(rate));
    }
}

inline void check_dof(double nu)
{
    if (!(nu > 0.0) || std::isnan(nu)) {
        throw invalid_parameter("Student-t degrees of freedom must be positive, got " +
                                std::to_string(nu));
    }
}

inline void check_prob(double u)
{
    if (!(u > 0.0 && u < 1.0)) {
        throw domain_error("probability must lie in (0, 1), got " + std::to_string(u));
    }
}

// Modified Lentz evaluation of the continued fraction of I_z(a, b); valid
// without the symmetry swap for z < (a + 1) / (a + b + 2).
inline double beta_continued_fraction(double a, double b, double z)
{
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    double c = 1.0;
    double d = 1.0 - (a + b) * z / (a + 1.0);
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const double m2 = 2.0 * m;
        double num = m * (b - m) * z / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        num = -(a + m) * (a + b + m) * z / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

inline double log_beta_front(double a, double b, double z, double zc)
{
    return a * std::log(z) + b * std::log(zc) - (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

// Regularized incomplete beta I_z(a, b). `zc` is 1 - z supplied by the
// caller so that no precision is lost when z is close to 1.
inline double incomplete_beta(double a, double b, double z, double zc)
{
    if (z <= 0.0) return 0.0;
    if (zc <= 0.0) return 1.0;
    if (z > (a + 1.0) / (a + b + 2.0)) {
        return 1.0 - incomplete_beta(b, a, zc, z);
    }
    return std::exp(log_beta_front(a, b, z, zc)) * beta_continued_fraction(a, b, z) / a;
}

// log I_z(a, b), finite even where I_z underflows.
inline double log_incomplete_beta(double a, double b, double z, double zc)
{
    if (z <= 0.0) return -std::numeric_limits<double>::infinity();
    if (zc <= 0.0) return 0.0;
    if (z > (a + 1.0) / (a + b + 2.0)) return std::log1p(-incomplete_beta(b, a, zc, z));
    return log_beta_front(a, b, z, zc) + std::log(beta_continued_fraction(a, b, z) / a);
}

// Lower-tail normal quantile for u <= 0.5: rational approximation
// (relative error ~1e-9) followed by one Halley step against erfc.
inline double normal_quantile_lower(double u)
{
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (u < p_low) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = u - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - u;
    const double t = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - t / (1.0 + 0.5 * x * t);
}

inline double log_t_norm(double nu)
{
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
           0.5 * std::log(nu * std::numbers::pi);
}

// Lower-tail t CDF, x <= 0.
inline double t_cdf_lower(double x, double nu)
{
    const double x2 = x * x;
    const double z = nu / (nu + x2);
    const double zc = x2 / (nu + x2);
    return 0.5 * incomplete_beta(0.5 * nu, 0.5, z, zc);
}

// log P(Z > x) for a standard normal, x >= 0.
inline double log_normal_upper_tail(double x)
{
    if (x < 30.0) return std::log(0.5 * std::erfc(x / std::numbers::sqrt2));
    const double r = 1.0 / (x * x);
    const double series = 1.0 - r * (1.0 - r * (3.0 - r * (15.0 - r * 105.0)));
    return -0.5 * x * x - std::log(x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

// log P(T > x) for Student t with nu degrees of freedom, x >= 0.
inline double log_t_upper_tail(double x, double nu)
{
    const double x2 = x * x;
    if (!std::isfinite(x2)) {
        // I_z(nu/2, 1/2) ~ z^{nu/2} / (nu/2 B) with z = nu / x^2.
        return std::log(0.5) + 0.5 * nu * (std::log(nu) - 2.0 * std::log(x)) - std::log(0.5 * nu) -
               (std::lgamma(0.5 * nu) + std::lgamma(0.5) - std::lgamma(0.5 * nu + 0.5));
    }
    return std::log(0.5) + log_incomplete_beta(0.5 * nu, 0.5, nu / (nu + x2), x2 / (nu + x2));
}

// x >= 0 with log P(Z > x) = log_tail, for log_tail <= log(1/2). Newton on
// the log scale from the tail asymptote; the plain quantile is used while
// the tail probability is representable with full precision.
inline double normal_upper_quantile_log(double log_tail)
{
    if (log_tail > -700.0) return -normal_quantile_lower(std::exp(log_tail));
    const double l = -2.0 * log_tail;
    double x = std::sqrt(l - std::log(l * 2.0 * std::numbers::pi));
    for (int it = 0; it < 20; ++it) {
        const double h = log_normal_upper_tail(x) - log_tail;
        const double slope = -std::exp(-0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi) -
                                       log_normal_upper_tail(x));
        const double step = h / slope;
        x -= step;
        if (std::abs(step) <= 1e-15 * x) break;
    }
    return x;
}

inline double log_t_pdf(double x, double nu)
{
    const double ax = std::abs(x);
    const double log_core = ax > 1e100 ? 2.0 * std::log(ax) - std::log(nu) + std::log1p(nu / (ax * ax))
                                       : std::log1p(x * x / nu);
    return log_t_norm(nu) - 0.5 * (nu + 1.0) * log_core;
}

// y >= 0 with log P(T > y) = log_tail <= log(1/2), for Student t with nu
// degrees of freedom. Safeguarded Newton on the log tail inside a bracket
// that starts at [0, inf); bisection is geometric once the bracket spans
// orders of magnitude.
inline double t_upper_quantile_log(double log_tail, double nu)
{
    constexpr double log_half = -0.6931471805599453;
    if (log_tail >= log_half) return 0.0;
    if (nu == 1.0) {
        if (log_tail > -700.0) return 1.0 / std::tan(std::numbers::pi * std::exp(log_tail));
        return std::exp(-log_tail - std::log(std::numbers::pi));
    }
    if (nu == 2.0) {
        if (log_tail > -700.0) {
            const double u = std::exp(log_tail);
            return std::sqrt(2.0 / (4.0 * u * (1.0 - u))) * (1.0 - 2.0 * u);
        }
        return std::exp(-0.5 * (log_tail + std::log(2.0)));
    }
    auto residual = [&](double y) { return log_t_upper_tail(y, nu) - log_tail; };

    // Starting points: the power-law tail asymptote and, while the
    // probability is representable, a Cornish-Fisher expansion.
    const double log_k = log_t_norm(nu) + 0.5 * (nu - 1.0) * std::log(nu);
    double y = std::exp((log_k - log_tail) / nu);
    double r = residual(y);
    if (log_tail > -700.0) {
        const double z = -normal_quantile_lower(std::exp(log_tail));
        const double z2 = z * z;
        const double cf = z + z * (z2 + 1.0) / (4.0 * nu) +
                          z * ((5.0 * z2 + 16.0) * z2 + 3.0) / (96.0 * nu * nu) +
                          z * (((3.0 * z2 + 19.0) * z2 + 17.0) * z2 - 15.0) / (384.0 * nu * nu * nu);
        if (cf > 0.0 && std::isfinite(cf)) {
            const double r_cf = residual(cf);
            if (std::abs(r_cf) < std::abs(r)) {
                y = cf;
                r = r_cf;
            }
        }
    }
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
        if (r == 0.0) return y;
        // The log tail decreases in y: a positive residual means y is too small.
        if (r > 0.0) lo = y; else hi = y;
        const double slope = -std::exp(log_t_pdf(y, nu) - log_t_upper_tail(y, nu));
        double next = y - r / slope;
        if (!(next > lo && next < hi) || !std::isfinite(next)) {
            if (!std::isfinite(hi)) next = 2.0 * std::max(y, 1.0);
            else if (lo > 0.0 && hi > 4.0 * lo) next = std::sqrt(lo * hi);
            else next = 0.5 * (lo + hi);
        }
        if (std::abs(next - y) <= 4e-16 * next) return next;
        y = next;
        r = residual(y);
        if (std::abs(r) <= 1e-15) return y;
    }
    return y;
}

// log of t_upper_quantile_log(log_tail, nu), finite where the quantile itself
// overflows. Past y ~ 1e100 the relative correction to the power-law tail is
// below 1e-200, so the asymptote is exact in double precision.
inline double t_upper_log_quantile_log(double log_tail, double nu)
{
    const double log_k = log_t_norm(nu) + 0.5 * (nu - 1.0) * std::log(nu);
    const double asymptote = (log_k - log_tail) / nu;
    if (asymptote > 230.0) return asymptote;
    return std::log(t_upper_quantile_log(log_tail, nu));
}

// log t density at y = exp(log_y), y >= 0.
inline double log_t_pdf_at_log(double log_y, double nu)
{
    if (log_y < 50.0) return log_t_pdf(std::exp(log_y), nu);
    return log_t_norm(nu) -
           0.5 * (nu + 1.0) * (2.0 * log_y - std::log(nu) + std::log1p(nu * std::exp(-2.0 * log_y)));
}

// Lower-tail t quantile for 0 < u <= 0.5 (result non-positive).
inline double t_quantile_lower(double u, double nu)
{
    return -t_upper_quantile_log(std::log(u), nu);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Laplace(0, 1/rate): pdf (rate/2) exp(-rate |w|).

/// Marginal prior on a single coefficient.
struct LaplaceMarginal
{
    double rate;

    explicit LaplaceMarginal(double r) : rate(r) { detail::check_rate(r); }

    double pdf(double w) const { return 0.5 * rate * std::exp(-rate * std::abs(w)); }
    double log_pdf(double w) const { return std::log(0.5 * rate) - rate * std::abs(w); }

    /// Clamped to [kProbClamp, 1 - kProbClamp].
    double cdf(double w) const
    {
        const double v = (w < 0.0) ? 0.5 * std::exp(rate * w)
                                   : 1.0 - 0.5 * std::exp(-rate * w);
        return std::clamp(v, kProbClamp, 1.0 - kProbClamp);
    }

    /// Smaller of the two tail masses, 0.5 exp(-rate |w|), clamped below.
    double tail(double w) const
    {
        return std::max(0.5 * std::exp(-rate * std::abs(w)), kProbClamp);
    }

    // Only used by tests; the solver never inverts the Laplace CDF.
    double quantile(double u) const
    {
        detail::check_prob(u);
        return (u < 0.5) ? std::log(2.0 * u) / rate : -std::log(2.0 * (1.0 - u)) / rate;
    }
};

inline double laplace_cdf(double w, double rate) { return LaplaceMarginal(rate).cdf(w); }
inline double laplace_pdf(double w, double rate) { return LaplaceMarginal(rate).pdf(w); }
inline double laplace_quantile(double u, double rate) { return LaplaceMarginal(rate).quantile(u); }

// ---------------------------------------------------------------------------
// Standard normal.

inline double normal_pdf(double x)
{
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_quantile(double u)
{
    detail::check_prob(u);
    if (u == 0.5) return 0.0;
    return (u < 0.5) ? detail::normal_quantile_lower(u)
                     : -detail::normal_quantile_lower(1.0 - u);
}

// ---------------------------------------------------------------------------
// Student-t with nu degrees of freedom.

struct StudentTMarginal
{
    double nu;

    explicit StudentTMarginal(double dof) : nu(dof) { detail::check_dof(dof); }

    double log_pdf(double x) const
    {
        return detail::log_t_norm(nu) - 0.5 * (nu + 1.0) * std::log1p(x * x / nu);
    }
    double pdf(double x) const { return std::exp(log_pdf(x)); }

    double cdf(double x) const
    {
        if (x <= 0.0) return detail::t_cdf_lower(x, nu);
        return 1.0 - detail::t_cdf_lower(-x, nu);
    }

    double quantile(double u) const
    {
        detail::check_prob(u);
        if (u == 0.5) return 0.0;
        return (u < 0.5) ? detail::t_quantile_lower(u, nu)
                         : -detail::t_quantile_lower(1.0 - u, nu);
    }
};

inline double student_t_pdf(double x, double nu) { return StudentTMarginal(nu).pdf(x); }
inline double student_t_cdf(double x, double nu) { return StudentTMarginal(nu).cdf(x); }
inline double student_t_quantile(double u, double nu) { return StudentTMarginal(nu).quantile(u); }

} // namespace dists
} // namespace copreg
