#pragma once
#include <mutex>
#include <random>
#include <Eigen/Dense>
#include <copreg/copreg.hpp>

namespace testing_support {

// Tallies every solve() in the test binary; checked once at the end.
struct FeasibilityLedger
{
    std::mutex mutex;
    long converged = 0;
    long violations = 0;
    double worst_complementarity = 0.0;
    double most_negative = 0.0;

    static FeasibilityLedger& instance()
    {
        static FeasibilityLedger ledger;
        return ledger;
    }
};

inline copreg::Dataset random_dataset(Eigen::Index n, Eigen::Index p, std::uint64_t seed, double noise = 1.0,
                                      double shared = 0.5)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    copreg::Dataset d;
    d.x.resize(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double common = normal(rng);
        for (Eigen::Index j = 0; j < p; ++j) d.x(i, j) = 3.0 + shared * common + (1.0 + 0.1 * j) * normal(rng);
    }
    Eigen::VectorXd beta(p);
    for (Eigen::Index j = 0; j < p; ++j) beta(j) = (j % 3 == 0) ? 0.0 : 1.0 + 0.5 * j;
    d.y = d.x * beta;
    for (Eigen::Index i = 0; i < n; ++i) d.y(i) += 10.0 + noise * normal(rng);
    d.ensure_names();
    return d;
}

inline copreg::Dataset random_classification(Eigen::Index n, Eigen::Index p, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    copreg::Dataset d;
    d.task = copreg::Task::Classification;
    d.x.resize(n, p);
    d.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) d.x(i, j) = normal(rng);
        const double eta = 0.3 + 1.5 * d.x(i, 0) - 1.0 * d.x(i, 1);
        d.y(i) = unif(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    }
    d.ensure_names();
    return d;
}

inline Eigen::MatrixXd random_correlation(Eigen::Index p, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd w(p, p + 2);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = normal(rng);
    }
    Eigen::MatrixXd s = w * w.transpose();
    const Eigen::VectorXd d = s.diagonal().cwiseSqrt().cwiseInverse();
    return d.asDiagonal() * s * d.asDiagonal();
}

inline copreg::PriorSpec copula_prior(copreg::Family family, Eigen::Index p, std::uint64_t seed, double lambda = 1.0,
                                      double nu = 10.0)
{
    copreg::PriorSpec spec;
    spec.family = family;
    spec.lambda = lambda;
    spec.nu = nu;
    spec.sigma = std::make_shared<const copreg::CorrelationMatrix>(
        copreg::CorrelationMatrix::from_matrix(random_correlation(p, seed)));
    return spec;
}

} // namespace testing_support
