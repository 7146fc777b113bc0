#include <numeric>
#include <set>
#include <gtest/gtest.h>
#include <copreg/tuning.hpp>
#include "support.hpp"

using namespace copreg;

namespace {

PriorSpec lasso(double lambda = 1.0)
{
    PriorSpec p;
    p.family = Family::Lasso;
    p.lambda = lambda;
    return p;
}

} // namespace

TEST(LambdaGrid, LogSpacedFromLambdaMax)
{
    const Problem prob = make_problem(testing_support::random_dataset(30, 4, 41), lasso());
    const auto grid = make_lambda_grid(prob, 5, 1e-2);
    ASSERT_EQ(grid.size(), 5u);
    EXPECT_EQ(grid.front(), lambda_max(prob));
    EXPECT_NEAR(grid.back() / grid.front(), 1e-2, 1e-12);
    for (std::size_t k = 1; k < grid.size(); ++k) EXPECT_NEAR(grid[k] / grid[k - 1], std::sqrt(std::sqrt(1e-2)), 1e-12);
}

TEST(LambdaGrid, DegenerateResponseThrows)
{
    Problem prob = make_problem(testing_support::random_dataset(30, 3, 42), lasso());
    prob.y.setZero();
    EXPECT_THROW(make_lambda_grid(prob), invalid_parameter);
    EXPECT_THROW(make_lambda_grid(prob, 1), invalid_parameter);
    EXPECT_THROW(make_lambda_grid(prob, 10, 1.5), invalid_parameter);
}

TEST(Folds, DeterministicBalancedAndSeedDependent)
{
    const Dataset d = testing_support::random_dataset(103, 3, 43);
    const auto a = assign_folds(d, 10, 5);
    EXPECT_EQ(a, assign_folds(d, 10, 5));
    EXPECT_NE(a, assign_folds(d, 10, 6));
    std::vector<int> sizes(10, 0);
    for (int f : a) ++sizes[static_cast<std::size_t>(f)];
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1);
}

TEST(Folds, InvariantUnderRowPermutation)
{
    const Dataset d = testing_support::random_dataset(40, 3, 44);
    std::vector<Eigen::Index> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(1);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto base = assign_folds(d, 5, 9);
    const auto shuffled = assign_folds(d.rows(perm), 5, 9);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        EXPECT_EQ(shuffled[i], base[static_cast<std::size_t>(perm[i])]);
    }
}

TEST(Folds, DuplicateRowsShareAFold)
{
    Dataset d = testing_support::random_dataset(30, 3, 45);
    std::vector<Eigen::Index> idx(30);
    std::iota(idx.begin(), idx.end(), 0);
    for (Eigen::Index extra : {3, 3, 17, 29}) idx.push_back(extra);
    d = d.rows(idx);
    const auto f = assign_folds(d, 4, 1);
    EXPECT_EQ(f[30], f[3]);
    EXPECT_EQ(f[31], f[3]);
    EXPECT_EQ(f[32], f[17]);
    EXPECT_EQ(f[33], f[29]);
}

TEST(Folds, TooFewDistinctRowsThrows)
{
    Dataset d = testing_support::random_dataset(3, 2, 46);
    EXPECT_THROW(assign_folds(d, 4, 0), data_error);
    EXPECT_THROW(assign_folds(d, 1, 0), invalid_parameter);
}

TEST(CrossValidate, LeaveOneOutMatchesBruteForce)
{
    const Dataset d = testing_support::random_dataset(12, 3, 47);
    const Problem full = make_problem(d, lasso());
    const auto grid = make_lambda_grid(full, 6, 1e-2);
    CVOptions opt;
    opt.folds = 12;
    const CVReport rep = cross_validate(d, lasso(), grid, opt);
    EXPECT_EQ(std::set<int>(rep.folds.begin(), rep.folds.end()).size(), 12u);

    Eigen::VectorXd brute = Eigen::VectorXd::Zero(6);
    for (Eigen::Index i = 0; i < 12; ++i) {
        std::vector<Eigen::Index> tr;
        for (Eigen::Index j = 0; j < 12; ++j) if (j != i) tr.push_back(j);
        const Problem prob = make_problem(d.rows(tr), lasso(grid.front()));
        const auto path = solution_path(prob, grid, opt.solver);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const double pred = predict_original(d.x.row(i), path.fits[g], Loss::SquaredError)(0);
            brute(static_cast<Eigen::Index>(g)) += (pred - d.y(i)) * (pred - d.y(i)) / 12.0;
        }
    }
    EXPECT_TRUE(rep.mean_loss.isApprox(brute, 1e-10));
    EXPECT_LE(rep.index_1se, rep.index_min);
    EXPECT_GE(rep.lambda_1se, rep.lambda_min);
}

TEST(CrossValidate, RejectsBadGridAndTinyFolds)
{
    const Dataset d = testing_support::random_dataset(12, 3, 48);
    EXPECT_THROW(cross_validate(d, lasso(), {}), invalid_parameter);
    EXPECT_THROW(cross_validate(d, lasso(), {1.0, 1.0}), invalid_parameter);
    EXPECT_THROW(cross_validate(d, lasso(), {-1.0}), invalid_parameter);
    CVOptions opt;
    opt.folds = 20;
    EXPECT_THROW(cross_validate(d, lasso(), {1.0}, opt), data_error);
}

TEST(CrossValidate, CopulaFoldsReestimateSigma)
{
    PriorSpec prior;
    prior.family = Family::GaussCopula;
    prior.lambda = 1.0;
    const Dataset d = testing_support::random_dataset(50, 4, 49);
    const auto grid = make_lambda_grid(make_problem(d, prior), 8, 1e-2);
    CVOptions opt;
    opt.folds = 5;
    opt.seed = 3;
    const CVReport a = cross_validate(d, prior, grid, opt);
    const CVReport b = cross_validate(d, prior, grid, opt);
    EXPECT_EQ(a.fold_losses, b.fold_losses);
    EXPECT_TRUE(a.mean_loss.allFinite());
}

TEST(ValidationTune, TiesPreferLargerLambda)
{
    // Validation rows equal to the training mean give the same loss at every
    // lambda, so the first (largest) grid point must be chosen.
    const Dataset train = testing_support::random_dataset(30, 3, 50);
    Dataset valid = train.rows({0, 1});
    valid.x.row(0) = train.x.colwise().mean();
    valid.x.row(1) = train.x.colwise().mean();
    valid.y.setConstant(train.y.mean());
    TuneOptions opt;
    opt.grid_count = 5;
    const TuneResult r = validation_tune(train, valid, lasso(), opt);
    EXPECT_EQ(r.lambda, r.grid.front());
}

TEST(ValidationTune, ElasticNetAlphaSearch)
{
    PriorSpec prior;
    prior.family = Family::ElasticNet;
    prior.lambda = 1.0;
    const Dataset train = testing_support::random_dataset(40, 4, 51);
    const Dataset valid = testing_support::random_dataset(40, 4, 52);
    TuneOptions opt;
    opt.grid_count = 6;
    opt.tune_alpha = true;
    const TuneResult r = validation_tune(train, valid, prior, opt);
    EXPECT_NE(std::find(opt.alpha_grid.begin(), opt.alpha_grid.end(), r.alpha), opt.alpha_grid.end());
    EXPECT_EQ(r.fit.lambda, r.lambda);
    EXPECT_EQ(r.validation_loss, *std::min_element(r.losses.begin(), r.losses.end()));
}
