#include <set>
#include <gtest/gtest.h>
#include <copreg/experiments.hpp>
#include "support.hpp"

using namespace copreg;

TEST(Designs, DimensionsAndNames)
{
    for (DesignId id : {DesignId::Ex1, DesignId::Ex2, DesignId::Ex3, DesignId::Ex4, DesignId::Ex4Duplicated}) {
        const SimDesign d = SimDesign::make(id);
        EXPECT_EQ(parse_design(to_string(id)), id);
        const SimData s = generate(d, 3);
        EXPECT_EQ(s.train.n(), d.n_train);
        EXPECT_EQ(s.valid.n(), d.n_valid);
        EXPECT_EQ(s.test.n(), d.n_test);
        EXPECT_EQ(s.train.p(), d.p());
    }
    EXPECT_EQ(SimDesign::make(DesignId::Ex1).p(), 8);
    EXPECT_EQ(SimDesign::make(DesignId::Ex3).p(), 40);
    EXPECT_THROW(parse_design("ex5"), invalid_parameter);
}

TEST(Designs, GenerationIsSeeded)
{
    const SimDesign d = SimDesign::make(DesignId::Ex4);
    const SimData a = generate(d, 17);
    const SimData b = generate(d, 17);
    const SimData c = generate(d, 18);
    EXPECT_EQ(a.train.x, b.train.x);
    EXPECT_EQ(a.test.y, b.test.y);
    EXPECT_NE(a.train.x, c.train.x);
}

TEST(Designs, EquicorrelationIsRecovered)
{
    SimDesign d = SimDesign::make(DesignId::Ex2);
    d.n_train = 20000;
    const Eigen::MatrixXd x = generate(d, 5).train.x;
    const Eigen::MatrixXd c = (x.transpose() * x) / static_cast<double>(x.rows());
    EXPECT_NEAR(c(0, 1), d.rho, 0.01);
    EXPECT_NEAR(c(2, 2), 1.0, 0.03);
}

TEST(Designs, DuplicatedBlocksAreNearlyCollinear)
{
    SimDesign d = SimDesign::make(DesignId::Ex4Duplicated);
    d.n_train = 5000;
    const Eigen::MatrixXd x = generate(d, 6).train.x;
    const double corr = x.col(0).dot(x.col(1)) / (x.col(0).norm() * x.col(1).norm());
    EXPECT_GT(corr, 0.99);
    const double free_corr = x.col(20).dot(x.col(21)) / (x.col(20).norm() * x.col(21).norm());
    EXPECT_LT(std::abs(free_corr), 0.06);
}

TEST(ReplicationSeed, DistinctAcrossDesignsAndReplications)
{
    std::set<std::uint64_t> seen;
    for (DesignId id : {DesignId::Ex1, DesignId::Ex2, DesignId::Ex3}) {
        for (int r = 0; r < 50; ++r) seen.insert(replication_seed(7, id, r));
    }
    EXPECT_EQ(seen.size(), 150u);
}

TEST(Bootstrap, ConstantSampleHasZeroSe)
{
    EXPECT_EQ(bootstrap_se(std::vector<double>(20, 4.2), 200, 1), 0.0);
    EXPECT_THROW(bootstrap_se({}, 10), invalid_parameter);
    EXPECT_THROW(bootstrap_se({1.0}, 1), invalid_parameter);
}

TEST(Bootstrap, ShrinksWithSampleSize)
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> small(25), large(400);
    for (auto& v : small) v = normal(rng);
    for (auto& v : large) v = normal(rng);
    EXPECT_GT(bootstrap_se(small, 500, 3), bootstrap_se(large, 500, 3));
}

TEST(Blocks, PairsAndSpread)
{
    const SimDesign d = SimDesign::make(DesignId::Ex4);
    EXPECT_EQ(within_block_pairs(d).size(), 30u);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(40);
    w.segment(5, 5) << 1.0, 1.2, 0.9, 1.0, 1.1;
    w(30) = 50.0;  // outside every block
    EXPECT_NEAR(within_block_spread(w, d), 0.3, 1e-12);
}

TEST(Assumptions, GaussQMapScan)
{
    PriorSpec spec;
    spec.family = Family::GaussCopula;
    spec.lambda = 1.5;
    const AssumptionReport rep = check_assumptions(spec, 2000, 0.0, 2000, 4);
    EXPECT_GT(rep.concavity_points, 0);
    EXPECT_EQ(rep.concavity_violations, 0);
    EXPECT_EQ(rep.convexity_violations, 0);
    EXPECT_EQ(rep.pairs_sampled, 2000);
    EXPECT_LE(rep.pairs_eligible, rep.pairs_sampled);
    spec.family = Family::Lasso;
    EXPECT_THROW(check_assumptions(spec), invalid_parameter);
}

TEST(Benchmark, SmallRunIsReproducible)
{
    BenchOptions opt;
    opt.grid_count = 10;
    opt.bootstrap_b = 50;
    opt.tune_alpha = false;
    const auto a = run_benchmark({DesignId::Ex1}, {Family::Lasso, Family::GaussCopula}, 3, 11, opt);
    const auto b = run_benchmark({DesignId::Ex1}, {Family::Lasso, Family::GaussCopula}, 3, 11, opt);
    ASSERT_EQ(a.rows.size(), 6u);
    ASSERT_EQ(a.summary.size(), 2u);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_TRUE(a.rows[i].ok) << a.rows[i].error;
        EXPECT_EQ(a.rows[i].rmse, b.rows[i].rmse);
    }
    for (const auto& s : a.summary) {
        EXPECT_EQ(s.succeeded, 3);
        EXPECT_GT(s.median_rmse, 0.0);
    }
}

TEST(Grouping, VerificationProducesPairReports)
{
    BenchOptions opt;
    opt.grid_count = 10;
    const auto v = verify_grouping(SimDesign::make(DesignId::Ex4), 1, 5, opt);
    ASSERT_EQ(v.runs.size(), 1u);
    EXPECT_EQ(v.runs[0].pairs.size(), 30u);
    EXPECT_LE(v.holds, v.eligible);
    EXPECT_THROW(verify_grouping(SimDesign::make(DesignId::Ex1), 1, 5, opt), invalid_parameter);
}
