#include <cstring>
#include <set>
#include <gtest/gtest.h>
#include <copreg/resample.hpp>
#include "support.hpp"

using namespace copreg;

namespace {

Problem copula_problem(Eigen::Index n, Eigen::Index p, std::uint64_t seed, double frac = 0.1)
{
    PriorSpec prior;
    prior.family = Family::GaussCopula;
    prior.lambda = 1.0;
    Problem prob = make_problem(testing_support::random_dataset(n, p, seed), prior);
    prob.prior.lambda = frac * lambda_max(prob);
    return prob;
}

} // namespace

TEST(Median, OddEvenAndEmpty)
{
    EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
    EXPECT_EQ(median({-1.0}), -1.0);
    EXPECT_THROW(median({}), invalid_parameter);
    Eigen::MatrixXd s(3, 2);
    s << 1, 10, 5, 30, 3, 20;
    EXPECT_EQ(coordinate_median(s), Eigen::Vector2d(3, 20));
}

TEST(Draws, DeterministicSortedAndInRange)
{
    ResampleConfig cfg;
    cfg.m = 50;
    cfg.replications = 3;
    cfg.seed = 12;
    const auto a = draw_subsample(80, cfg, 1, 0);
    EXPECT_EQ(a, draw_subsample(80, cfg, 1, 0));
    EXPECT_NE(a, draw_subsample(80, cfg, 2, 0));
    EXPECT_NE(a, draw_subsample(80, cfg, 1, 1));
    EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
    EXPECT_GE(a.front(), 0);
    EXPECT_LT(a.back(), 80);
}

TEST(Draws, WithoutReplacementAreDistinct)
{
    ResampleConfig cfg;
    cfg.m = 60;
    cfg.with_replacement = false;
    const auto a = draw_subsample(60, cfg, 0, 0);
    EXPECT_EQ(std::set<Eigen::Index>(a.begin(), a.end()).size(), 60u);
    EXPECT_TRUE(detail::is_identity_draw(a, 60));
}

TEST(Config, ValidatesSizes)
{
    ResampleConfig cfg;
    cfg.m = 0;
    EXPECT_THROW(cfg.validate(10), invalid_parameter);
    cfg.m = 11;
    EXPECT_THROW(cfg.validate(10), invalid_parameter);
    cfg.m = 5;
    cfg.replications = 0;
    EXPECT_THROW(cfg.validate(10), invalid_parameter);
}

TEST(ResampleFit, SingleFullDrawIsTheFullFitBitForBit)
{
    const Problem prob = copula_problem(50, 5, 61);
    ResampleConfig cfg;
    cfg.m = prob.n();
    cfg.with_replacement = false;
    SolverOptions so;
    so.seed = 4;
    const ResampleResult r = resample_fit(prob, cfg, so);
    const FitResult full = solve(prob, so);
    ASSERT_EQ(r.fit.omega_hat.size(), full.omega_hat.size());
    EXPECT_EQ(std::memcmp(r.fit.omega_hat.data(), full.omega_hat.data(),
                          sizeof(double) * static_cast<std::size_t>(full.omega_hat.size())), 0);
    EXPECT_EQ(r.fit.objective, full.objective);
}

TEST(ResampleFit, MedianOfReplicationsAndDeterminism)
{
    const Problem prob = copula_problem(120, 4, 62);
    ResampleConfig cfg;
    cfg.m = 60;
    cfg.replications = 5;
    cfg.seed = 8;
    SolverOptions so;
    so.restarts = 0;
    const ResampleResult a = resample_fit(prob, cfg, so);
    const ResampleResult b = resample_fit(prob, cfg, so);
    EXPECT_EQ(a.solutions, b.solutions);
    EXPECT_EQ(a.fit.omega_hat, coordinate_median(a.solutions));
    EXPECT_TRUE(a.fit.converged);
    EXPECT_EQ(a.fit.omega_plus.cwiseMin(a.fit.omega_minus).maxCoeff(), 0.0);
}

TEST(ResampleFit, DegenerateDrawIsRetried)
{
    const Problem prob = copula_problem(40, 3, 63);
    ResampleConfig cfg;
    cfg.m = 20;
    cfg.max_retries = 2;
    SolverOptions so;
    so.restarts = 0;
    const auto draw = [&](int r, int attempt) {
        if (attempt == 0) return std::vector<Eigen::Index>(20, 0);  // every feature constant
        return draw_subsample(prob.n(), cfg, r, attempt);
    };
    const ResampleResult res = resample_fit(prob, cfg, draw, so);
    EXPECT_EQ(res.retries, std::vector<int>{1});
    cfg.max_retries = 0;
    EXPECT_THROW(resample_fit(prob, cfg, draw, so), degenerate_feature);
}

TEST(ResampleFit, TunedLambdaComesFromTheGrid)
{
    const Problem prob = copula_problem(200, 4, 64);
    ResampleConfig cfg;
    cfg.m = 80;
    CVOptions cv;
    cv.folds = 4;
    cv.solver.restarts = 0;
    const double lambda = tune_resample_lambda(prob, cfg, cv, 8, 1e-2);
    EXPECT_GT(lambda, 0.0);
    EXPECT_EQ(lambda, tune_resample_lambda(prob, cfg, cv, 8, 1e-2));
}
