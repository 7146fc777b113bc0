#pragma once
#include <cmath>
#include <Eigen/Dense>

// Cyclic coordinate descent for  ||y - X w||^2 + lambda ||w||_1.
// Independent of the library solver; used only as a test oracle.
namespace oracle {

inline double soft_threshold(double z, double t)
{
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

inline Eigen::VectorXd lasso_cd(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                                double tol = 1e-13, int max_sweeps = 100000)
{
    const auto p = x.cols();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd r = y;
    const Eigen::VectorXd col_sq = x.colwise().squaredNorm().transpose();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_step = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double z = x.col(j).dot(r) + col_sq(j) * w(j);
            const double next = soft_threshold(z, 0.5 * lambda) / col_sq(j);
            const double step = next - w(j);
            if (step != 0.0) {
                r -= step * x.col(j);
                w(j) = next;
                max_step = std::max(max_step, std::abs(step));
            }
        }
        if (max_step < tol) break;
    }
    return w;
}

// Closed-form minimizer of ||y - X w||^2 + (mu / 2) ||w||^2.
inline Eigen::VectorXd ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double mu)
{
    Eigen::MatrixXd a = 2.0 * x.transpose() * x;
    a.diagonal().array() += mu;
    return a.ldlt().solve(2.0 * x.transpose() * y);
}

} // namespace oracle
