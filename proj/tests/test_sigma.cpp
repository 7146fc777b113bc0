#include <gtest/gtest.h>
#include <copreg/sigma.hpp>
#include <copreg/data.hpp>
#include "support.hpp"

using namespace copreg;

namespace {

Eigen::MatrixXd standardized(Eigen::Index n, Eigen::Index p, std::uint64_t seed)
{
    return standardize(testing_support::random_dataset(n, p, seed)).first.x;
}

// Correlation of the residuals of columns i and j after least-squares
// regression on all other columns.
double residual_partial(const Eigen::MatrixXd& x, Eigen::Index i, Eigen::Index j)
{
    const auto p = x.cols();
    Eigen::MatrixXd others(x.rows(), p - 2);
    Eigen::Index c = 0;
    for (Eigen::Index k = 0; k < p; ++k) {
        if (k != i && k != j) others.col(c++) = x.col(k);
    }
    auto residual = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        if (others.cols() == 0) return v;
        const Eigen::VectorXd b = others.colPivHouseholderQr().solve(v);
        return v - others * b;
    };
    const Eigen::VectorXd ri = residual(x.col(i));
    const Eigen::VectorXd rj = residual(x.col(j));
    return ri.dot(rj) / (ri.norm() * rj.norm());
}

} // namespace

TEST(Sigma, EstimateHasUnitDiagonalAndIsSymmetric)
{
    const auto s = estimate_sigma(standardized(80, 6, 1));
    EXPECT_TRUE(s.values().diagonal().isOnes(0.0));
    EXPECT_TRUE(s.values().isApprox(s.values().transpose(), 0.0));
    EXPECT_EQ(s.jitter(), 0.0);
}

TEST(Sigma, PartialCorrelationsMatchResidualRegression)
{
    const Eigen::MatrixXd x = standardized(120, 5, 2);
    const auto s = estimate_sigma(x);
    for (Eigen::Index i = 0; i < 5; ++i) {
        for (Eigen::Index j = 0; j < 5; ++j) {
            if (i == j) {
                EXPECT_EQ(s.partial(i, j), 1.0);
            } else {
                EXPECT_NEAR(s.partial(i, j), residual_partial(x, i, j), 1e-10) << i << ',' << j;
            }
        }
    }
}

TEST(Sigma, LogDetAndPrecisionAreConsistent)
{
    const auto s = estimate_sigma(standardized(60, 4, 3));
    EXPECT_NEAR(s.log_det(), std::log(s.values().determinant()), 1e-12);
    EXPECT_TRUE((s.values() * s.precision()).isIdentity(1e-10));
    const Eigen::VectorXd q = Eigen::VectorXd::LinSpaced(4, -1.0, 2.0);
    EXPECT_TRUE(s.solve(q).isApprox(s.precision() * q, 1e-12));
}

TEST(Sigma, WideDesignUsesRidgeBlend)
{
    const Eigen::MatrixXd x = standardized(5, 12, 4);
    const double c = 0.05;
    const auto s = estimate_sigma(x, c);
    Eigen::MatrixXd raw = x.transpose() * x / 5.0;
    const Eigen::VectorXd d = raw.diagonal().cwiseSqrt().cwiseInverse();
    raw = d.asDiagonal() * raw * d.asDiagonal();
    EXPECT_NEAR(s.correlation(0, 1), raw(0, 1) / (1.0 + c), 1e-12);
    EXPECT_EQ(s.correlation(3, 3), 1.0);
}

TEST(Sigma, DuplicateColumnsTriggerJitterLadder)
{
    Eigen::MatrixXd x = standardized(50, 4, 5);
    x.col(3) = x.col(1);
    const auto s = estimate_sigma(x);
    EXPECT_GT(s.jitter(), 0.0);
    EXPECT_TRUE(s.values().diagonal().isOnes(1e-15));
    Eigen::LLT<Eigen::MatrixXd> llt(s.values());
    EXPECT_EQ(llt.info(), Eigen::Success);
}

TEST(Sigma, ConstantColumnIsDegenerate)
{
    Eigen::MatrixXd x = standardized(30, 3, 6);
    x.col(2).setConstant(0.7);
    try {
        estimate_sigma(x);
        FAIL() << "expected degenerate_feature";
    } catch (const degenerate_feature& e) {
        EXPECT_EQ(e.column(), 2);
    }
}

TEST(Sigma, FromMatrixValidates)
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
    m(0, 0) = 1.1;
    EXPECT_THROW(CorrelationMatrix::from_matrix(m), invalid_parameter);
    m = Eigen::MatrixXd::Identity(3, 3);
    m(0, 1) = 0.2;
    EXPECT_THROW(CorrelationMatrix::from_matrix(m), invalid_parameter);
    EXPECT_THROW(CorrelationMatrix::equicorrelation(3, -0.6), linalg_error);
    EXPECT_THROW(CorrelationMatrix::equicorrelation(2, 1.0), linalg_error);
}

TEST(Sigma, QuadFormOnIdentityVanishes)
{
    const auto id = CorrelationMatrix::identity(4);
    const Eigen::VectorXd q = Eigen::VectorXd::LinSpaced(4, -2.0, 3.0);
    EXPECT_EQ(quad_form(q, id, QuadMode::InverseMinusIdentity), 0.0);
    EXPECT_NEAR(quad_form(q, id, QuadMode::Inverse), q.squaredNorm(), 1e-12);
    const auto eq = CorrelationMatrix::equicorrelation(4, 0.3);
    EXPECT_NEAR(quad_form(q, eq, QuadMode::Inverse) - q.squaredNorm(),
                quad_form(q, eq, QuadMode::InverseMinusIdentity), 1e-12);
}
