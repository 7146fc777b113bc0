#pragma once
#include <array>
#include <cmath>
#include <memory>
#include <ostream>
#include <string>
#include <Eigen/Dense>
#include <copreg/errors.hpp>

namespace copreg {

/**
 * Symmetric positive-definite matrix with unit diagonal used as the copula
 * dependence parameter. The Cholesky factor, the inverse (precision) and the
 * partial-correlation matrix are computed once at construction; the object is
 * immutable afterwards and may be shared between threads.
 */
class CorrelationMatrix
{
public:
    /// Validates symmetry, unit diagonal and positive definiteness.
    static CorrelationMatrix from_matrix(const Eigen::MatrixXd& m)
    {
        const auto p = m.rows();
        if (m.cols() != p || p == 0) {
            throw invalid_parameter("correlation matrix must be square and non-empty");
        }
        for (Eigen::Index i = 0; i < p; ++i) {
            if (std::abs(m(i, i) - 1.0) > 1e-12) {
                throw invalid_parameter("correlation matrix diagonal must be 1 (row " +
                                        std::to_string(i) + ")");
            }
            for (Eigen::Index j = 0; j < i; ++j) {
                if (std::abs(m(i, j) - m(j, i)) > 1e-12) {
                    throw invalid_parameter("correlation matrix must be symmetric");
                }
            }
        }
        CorrelationMatrix out;
        if (!out.factor(m)) {
            throw linalg_error("correlation matrix is not positive definite");
        }
        return out;
    }

    static CorrelationMatrix identity(Eigen::Index p)
    {
        return from_matrix(Eigen::MatrixXd::Identity(p, p));
    }

    /// 1 on the diagonal, rho elsewhere. Requires -1/(p-1) < rho < 1.
    static CorrelationMatrix equicorrelation(Eigen::Index p, double rho)
    {
        Eigen::MatrixXd m = Eigen::MatrixXd::Constant(p, p, rho);
        m.diagonal().setOnes();
        return from_matrix(m);
    }

    Eigen::Index size() const { return values_.rows(); }
    const Eigen::MatrixXd& values() const { return values_; }
    const Eigen::MatrixXd& precision() const { return precision_; }
    const Eigen::MatrixXd& partials() const { return partials_; }
    double log_det() const { return log_det_; }
    double jitter() const { return jitter_; }

    /// Sigma^{-1} q using the cached Cholesky factor.
    Eigen::VectorXd solve(const Eigen::VectorXd& q) const { return llt_.solve(q); }

    double correlation(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
    double partial(Eigen::Index i, Eigen::Index j) const { return partials_(i, j); }

    bool is_identity() const { return is_identity_; }

private:
    // Attempts a factorization; false when the matrix is not numerically PD.
    bool factor(const Eigen::MatrixXd& m)
    {
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        if (llt.info() != Eigen::Success) return false;
        if (!(llt.rcond() >= kMinRcond)) return false;
        values_ = m;
        llt_ = std::move(llt);
        const auto p = m.rows();
        precision_ = llt_.solve(Eigen::MatrixXd::Identity(p, p));
        precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
        log_det_ = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
        partials_.resize(p, p);
        for (Eigen::Index i = 0; i < p; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) {
                partials_(i, j) = (i == j) ? 1.0
                    : -precision_(i, j) / std::sqrt(precision_(i, i) * precision_(j, j));
            }
        }
        is_identity_ = m.isIdentity(0.0);
        return true;
    }

public:
    // Smallest reciprocal condition number accepted without jitter.
    static constexpr double kMinRcond = 1e-7;

private:
    friend CorrelationMatrix estimate_sigma(const Eigen::MatrixXd&, double);

    Eigen::MatrixXd values_;
    Eigen::MatrixXd precision_;
    Eigen::MatrixXd partials_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double log_det_ = 0.0;
    double jitter_ = 0.0;
    bool is_identity_ = false;
};

using SigmaPtr = std::shared_ptr<const CorrelationMatrix>;

/// Default ridge blend constant for the n < p case.
inline constexpr double kDefaultSigmaBlend = 0.01;

/**
 * Dependence matrix from a standardized design.
 *
 * S = X^T X / n rescaled to unit diagonal; when n < p the blend (S + cI)/(1+c)
 * is used instead. If the result is not numerically positive definite, a
 * jitter delta I with delta in {1e-10, 1e-8, ..., 1e-2} is added and the
 * diagonal renormalized, stopping at the first success.
 */
inline CorrelationMatrix estimate_sigma(const Eigen::MatrixXd& x, double c = kDefaultSigmaBlend)
{
    if (!(c > 0.0)) throw invalid_parameter("sigma blend constant c must be positive");
    const auto n = x.rows();
    const auto p = x.cols();
    if (n < 1 || p < 1) throw invalid_parameter("empty design matrix");

    Eigen::MatrixXd s = (x.transpose() * x) / static_cast<double>(n);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double mean = x.col(j).mean();
        const double var = s(j, j) - mean * mean;
        if (!(var > 1e-12 * std::max(1.0, s(j, j)))) {
            throw degenerate_feature("column " + std::to_string(j) +
                                     " has zero variance; cannot estimate sigma", j);
        }
    }
    auto to_correlation = [](Eigen::MatrixXd m) {
        const Eigen::VectorXd d = m.diagonal().array().sqrt().inverse();
        m = d.asDiagonal() * m * d.asDiagonal();
        m = 0.5 * (m + m.transpose()).eval();
        m.diagonal().setOnes();
        return m;
    };
    s = to_correlation(s);
    if (n < p) {
        s = (s + c * Eigen::MatrixXd::Identity(p, p)) / (1.0 + c);
        s.diagonal().setOnes();
    }

    CorrelationMatrix out;
    if (out.factor(s)) return out;
    static constexpr std::array<double, 5> deltas{1e-10, 1e-8, 1e-6, 1e-4, 1e-2};
    for (double delta : deltas) {
        Eigen::MatrixXd m = s;
        m.diagonal().array() += delta;
        if (out.factor(to_correlation(m))) {
            out.jitter_ = delta;
            return out;
        }
    }
    throw linalg_error("sigma is not positive definite even after jitter 1e-2");
}

enum class QuadMode { InverseMinusIdentity, Inverse };

/// q^T (Sigma^{-1} - I) q or q^T Sigma^{-1} q.
inline double quad_form(const Eigen::VectorXd& q, const CorrelationMatrix& m, QuadMode mode)
{
    if (q.size() != m.size()) throw invalid_parameter("quad_form: dimension mismatch");
    if (mode == QuadMode::InverseMinusIdentity && m.is_identity()) return 0.0;
    const double inv = q.dot(m.solve(q));
    if (mode == QuadMode::Inverse) return std::max(inv, 0.0);
    return inv - q.squaredNorm();
}

/// CSV dump: the correlation matrix followed by the partial correlations.
inline void write_sigma_csv(std::ostream& os, const CorrelationMatrix& m)
{
    os.precision(17);
    auto dump = [&](const char* name, const Eigen::MatrixXd& a) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            os << name << ',' << i;
            for (Eigen::Index j = 0; j < a.cols(); ++j) os << ',' << a(i, j);
            os << '\n';
        }
    };
    os << "matrix,row";
    for (Eigen::Index j = 0; j < m.size(); ++j) os << ",c" << j;
    os << '\n';
    dump("sigma", m.values());
    dump("partial", m.partials());
}

} // namespace copreg
