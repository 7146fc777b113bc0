#include <gtest/gtest.h>
#include <copreg/tuning.hpp>
#include "oracles/lasso_cd.hpp"
#include "support.hpp"

using namespace copreg;

namespace {

Problem lasso_problem(Eigen::Index n, Eigen::Index p, std::uint64_t seed, double lambda)
{
    PriorSpec prior;
    prior.family = Family::Lasso;
    prior.lambda = lambda;
    return make_problem(testing_support::random_dataset(n, p, seed), prior);
}

} // namespace

TEST(SoftThreshold, OracleMatchesDefinition)
{
    EXPECT_EQ(oracle::soft_threshold(3.0, 1.0), 2.0);
    EXPECT_EQ(oracle::soft_threshold(-3.0, 1.0), -2.0);
    EXPECT_EQ(oracle::soft_threshold(0.5, 1.0), 0.0);
}

TEST(Lasso, MatchesCoordinateDescent)
{
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        Problem prob = lasso_problem(60, 8, seed, 1.0);
        const double top = lambda_max(prob);
        for (double frac : {0.5, 0.1, 0.01}) {
            prob.prior.lambda = frac * top;
            const FitResult fit = solve(prob);
            ASSERT_TRUE(fit.converged);
            const Eigen::VectorXd ref = oracle::lasso_cd(prob.x, prob.y, prob.prior.lambda);
            EXPECT_LT((fit.omega_hat - ref).lpNorm<Eigen::Infinity>(), 1e-5 * std::max(1.0, ref.norm()))
                << "seed " << seed << " frac " << frac;
        }
    }
}

TEST(Lasso, WideDesignMatchesCoordinateDescent)
{
    Problem prob = lasso_problem(15, 30, 24, 1.0);
    prob.prior.lambda = 0.2 * lambda_max(prob);
    const FitResult fit = solve(prob);
    ASSERT_TRUE(fit.converged);
    const Eigen::VectorXd ref = oracle::lasso_cd(prob.x, prob.y, prob.prior.lambda);
    EXPECT_LT((fit.omega_hat - ref).lpNorm<Eigen::Infinity>(), 1e-5 * std::max(1.0, ref.norm()));
}

TEST(Lasso, ZeroAtLambdaMax)
{
    Problem prob = lasso_problem(40, 5, 25, 1.0);
    prob.prior.lambda = lambda_max(prob) * (1.0 + 1e-9);
    const FitResult fit = solve(prob);
    EXPECT_LT(fit.omega_hat.lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(ElasticNet, AlphaZeroIsRidge)
{
    PriorSpec prior;
    prior.family = Family::ElasticNet;
    prior.alpha = 0.0;
    prior.lambda = 3.0;
    const Problem prob = make_problem(testing_support::random_dataset(50, 6, 26), prior);
    const FitResult fit = solve(prob);
    ASSERT_TRUE(fit.converged);
    const Eigen::VectorXd ref = oracle::ridge(prob.x, prob.y, prior.lambda);
    EXPECT_LT((fit.omega_hat - ref).lpNorm<Eigen::Infinity>(), 1e-5 * std::max(1.0, ref.norm()));
}

TEST(GaussCopula, IdentitySigmaReducesToLasso)
{
    PriorSpec prior;
    prior.family = Family::GaussCopula;
    prior.lambda = 1.0;
    ProblemOptions popt;
    popt.sigma_mode = SigmaMode::Identity;
    Problem prob = make_problem(testing_support::random_dataset(50, 6, 27), prior, popt);
    prob.prior.lambda = 0.1 * lambda_max(prob);
    const FitResult fit = solve(prob);
    ASSERT_TRUE(fit.converged);
    const Eigen::VectorXd ref = oracle::lasso_cd(prob.x, prob.y, prob.prior.lambda);
    EXPECT_LT((fit.omega_hat - ref).lpNorm<Eigen::Infinity>(), 1e-5 * std::max(1.0, ref.norm()));
}

TEST(Copula, FitsAreFeasibleAndDeterministic)
{
    for (Family fam : {Family::GaussCopula, Family::TCopula}) {
        PriorSpec prior;
        prior.family = fam;
        prior.lambda = 1.0;
        Problem prob = make_problem(testing_support::random_dataset(40, 6, 28), prior);
        prob.prior.lambda = 0.05 * lambda_max(prob);
        SolverOptions opt;
        opt.seed = 99;
        const FitResult a = solve(prob, opt);
        const FitResult b = solve(prob, opt);
        ASSERT_TRUE(a.converged) << to_string(fam);
        EXPECT_EQ(a.omega_hat, b.omega_hat);
        EXPECT_EQ(a.objective, b.objective);
        EXPECT_EQ(a.restarts_used, 3);
        EXPECT_LE(a.constraint_residual, 1e-6);
        EXPECT_GE(a.omega_plus.minCoeff(), 0.0);
        EXPECT_GE(a.omega_minus.minCoeff(), 0.0);
        // The kept start is no worse than the deterministic start alone.
        SolverOptions single = opt;
        single.restarts = 0;
        EXPECT_LE(a.objective, solve(prob, single).objective + 1e-9);
    }
}

TEST(Logistic, ZeroAtLambdaMaxWithFittedIntercept)
{
    PriorSpec prior;
    prior.family = Family::Lasso;
    prior.lambda = 1.0;
    Problem prob = make_problem(testing_support::random_classification(80, 4, 29), prior);
    prob.prior.lambda = lambda_max(prob) * 1.001;
    const FitResult fit = solve(prob);
    ASSERT_TRUE(fit.converged);
    EXPECT_LT(fit.omega_hat.lpNorm<Eigen::Infinity>(), 1e-7);
    const double rate = prob.y.mean();
    EXPECT_NEAR(fit.intercept_std, std::log(rate / (1.0 - rate)), 1e-5);
}

TEST(Logistic, SmallLambdaFindsSignal)
{
    PriorSpec prior;
    prior.family = Family::GaussCopula;
    prior.lambda = 1.0;
    const Dataset raw = testing_support::random_classification(200, 4, 30);
    Problem prob = make_problem(raw, prior);
    prob.prior.lambda = 0.05 * lambda_max(prob);
    const FitResult fit = solve(prob);
    ASSERT_TRUE(fit.converged);
    EXPECT_GT(fit.omega_hat(0), 0.5);
    EXPECT_LT(fit.omega_hat(1), -0.3);
    const Eigen::VectorXd prob_hat = predict_original(raw.x, fit, Loss::Logistic);
    EXPECT_TRUE(prob_hat.isApprox(predict(prob.x, fit, Loss::Logistic), 1e-10));
    EXPECT_LT(prediction_loss(prob_hat, raw.y, Loss::Logistic), 0.35);
}

TEST(Loss, GramFormMatchesResidualForm)
{
    PriorSpec prior;
    prior.family = Family::Lasso;
    prior.lambda = 1.0;
    const Problem tall = make_problem(testing_support::random_dataset(30, 4, 31), prior);
    const detail::LossEvaluator loss(tall);
    const Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(4, -0.5, 1.5);
    Eigen::VectorXd g;
    double gb = 0.0;
    const double value = loss(w, 0.0, g, gb);
    const Eigen::VectorXd r = tall.y - tall.x * w;
    EXPECT_NEAR(value, r.squaredNorm(), 1e-9 * r.squaredNorm());
    EXPECT_TRUE(g.isApprox(-2.0 * tall.x.transpose() * r, 1e-10));
}

TEST(Objective, OriginalScaleCoefficientsReproducePredictions)
{
    const Dataset raw = testing_support::random_dataset(40, 5, 32);
    PriorSpec prior;
    prior.family = Family::Lasso;
    prior.lambda = 5.0;
    const Problem prob = make_problem(raw, prior);
    const FitResult fit = solve(prob);
    const Eigen::VectorXd a = predict_original(raw.x, fit, Loss::SquaredError);
    const Eigen::VectorXd b = (predict(prob.x, fit, Loss::SquaredError).array() + raw.y.mean()).matrix();
    EXPECT_TRUE(a.isApprox(b, 1e-10));
}

TEST(Path, ContinuousAndValidated)
{
    Problem prob = lasso_problem(60, 6, 33, 1.0);
    const auto grid = make_lambda_grid(prob, 20, 1e-2);
    const SolutionPath path = solution_path(prob, grid);
    ASSERT_EQ(path.fits.size(), 20u);
    EXPECT_LT(path.fits.front().omega_hat.lpNorm<Eigen::Infinity>(), 1e-8);
    EXPECT_TRUE(std::isfinite(path.continuity));
    EXPECT_THROW(solution_path(prob, {1.0, 2.0}), invalid_parameter);
    EXPECT_THROW(solution_path(prob, {}), invalid_parameter);
}

TEST(Problem, ValidateRejectsUnstandardizedInput)
{
    Problem prob = lasso_problem(20, 3, 34, 1.0);
    EXPECT_NO_THROW(prob.validate());
    prob.x(0, 0) += 5.0;
    EXPECT_THROW(prob.validate(), invalid_parameter);
}

TEST(Properties, SignFlipEquivariance)
{
    for (Family fam : {Family::Lasso, Family::GaussCopula, Family::TCopula}) {
        PriorSpec prior;
        prior.family = fam;
        prior.lambda = 1.0;
        Dataset raw = testing_support::random_dataset(40, 5, 35);
        Problem prob = make_problem(raw, prior);
        prob.prior.lambda = 0.1 * lambda_max(prob);
        Problem flipped = prob;
        flipped.y = -prob.y;
        const FitResult a = solve(prob);
        const FitResult b = solve(flipped);
        EXPECT_LT((a.omega_hat + b.omega_hat).lpNorm<Eigen::Infinity>(), 1e-5 * std::max(1.0, a.omega_hat.norm()))
            << to_string(fam);
    }
}

TEST(Properties, RestartsAgreeOnConvexProblems)
{
    PriorSpec prior;
    prior.family = Family::GaussCopula;
    prior.lambda = 1.0;
    ProblemOptions popt;
    popt.sigma_mode = SigmaMode::Identity;
    Problem prob = make_problem(testing_support::random_dataset(50, 8, 36), prior, popt);
    prob.prior.lambda = 0.05 * lambda_max(prob);
    std::vector<double> objectives;
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        SolverOptions o;
        o.seed = seed;
        objectives.push_back(solve(prob, o).objective);
    }
    const auto [lo, hi] = std::minmax_element(objectives.begin(), objectives.end());
    EXPECT_LE(*hi - *lo, 1e-6 * std::max(1.0, std::abs(*lo)));
}

TEST(Properties, SeparableLogisticStaysFinite)
{
    Dataset d;
    d.task = Task::Classification;
    d.x.resize(20, 1);
    d.y.resize(20);
    for (Eigen::Index i = 0; i < 20; ++i) {
        d.x(i, 0) = static_cast<double>(i) - 9.5;
        d.y(i) = i >= 10 ? 1.0 : 0.0;
    }
    PriorSpec prior;
    prior.family = Family::Lasso;
    prior.lambda = 1.0;
    const FitResult fit = solve(make_problem(d, prior));
    EXPECT_TRUE(fit.converged);
    EXPECT_TRUE(fit.omega_hat.allFinite());
    EXPECT_GT(fit.omega_hat(0), 0.0);
}

TEST(Lasso, TwentyRandomProblemsMatchOracle)
{
    for (int k = 0; k < 20; ++k) {
        const Eigen::Index p = k % 2 == 0 ? 5 : 20;
        Problem prob = lasso_problem(50, p, 200 + static_cast<std::uint64_t>(k), 1.0);
        prob.prior.lambda = 0.05 * lambda_max(prob);
        const FitResult fit = solve(prob);
        const Eigen::VectorXd ref = oracle::lasso_cd(prob.x, prob.y, prob.prior.lambda);
        EXPECT_LT((fit.omega_hat - ref).lpNorm<Eigen::Infinity>(), 1e-4) << "problem " << k;
    }
}
