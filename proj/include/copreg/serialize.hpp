#pragma once
#include <cmath>
#include <ostream>
#include <string>
#include <vector>
#include <Eigen/Dense>
#include <json.hpp>
#include <copreg/copula.hpp>
#include <copreg/experiments.hpp>
#include <copreg/resample.hpp>
#include <copreg/solver.hpp>
#include <copreg/tuning.hpp>

namespace copreg {

using json = nlohmann::ordered_json;

/// Coefficients with magnitude above this on the standardized scale count as selected.
inline constexpr double kSelectionThreshold = 1e-6;

/// Non-finite values become null so every document stays valid JSON.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const Eigen::VectorXd& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
    return out;
}

inline json to_json(const std::vector<double>& v)
{
    json out = json::array();
    for (double x : v) out.push_back(number(x));
    return out;
}

inline json to_json(const Eigen::MatrixXd& m)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
    return out;
}

inline json to_json(const PriorSpec& p)
{
    json out{{"family", std::string(to_string(p.family))}, {"lambda", number(p.lambda)}};
    if (p.family == Family::ElasticNet) out["alpha"] = p.alpha;
    if (p.family == Family::TCopula) out["nu"] = p.nu;
    if (p.sigma) out["sigma_jitter"] = p.sigma->jitter();
    return out;
}

/// Indices and names of features with |omega_j| above kSelectionThreshold.
inline json selected_features(const Eigen::VectorXd& omega, const std::vector<std::string>& names)
{
    json out = json::array();
    for (Eigen::Index j = 0; j < omega.size(); ++j) {
        if (std::abs(omega(j)) > kSelectionThreshold) {
            out.push_back(j < static_cast<Eigen::Index>(names.size()) ? json(names[static_cast<std::size_t>(j)])
                                                                      : json(j));
        }
    }
    return out;
}

inline json to_json(const FitResult& f, const std::vector<std::string>& names = {})
{
    json coef = json::object();
    json out;
    out["lambda"] = number(f.lambda);
    out["converged"] = f.converged;
    out["objective"] = number(f.objective);
    out["constraint_residual"] = number(f.constraint_residual);
    out["gradient_norm"] = number(f.gradient_norm);
    out["iterations"] = f.iterations;
    out["outer_iterations"] = f.outer_iterations;
    out["restarts_used"] = f.restarts_used;
    out["omega_hat"] = to_json(f.omega_hat);
    out["coef_original"] = to_json(f.coef_original);
    out["intercept_original"] = number(f.intercept_original);
    if (!names.empty()) {
        for (Eigen::Index j = 0; j < f.coef_original.size() && j < static_cast<Eigen::Index>(names.size()); ++j) {
            coef[names[static_cast<std::size_t>(j)]] = number(f.coef_original(j));
        }
        out["coefficients"] = coef;
    }
    out["selected_features"] = selected_features(f.omega_hat, names);
    out["n_selected"] = out["selected_features"].size();
    return out;
}

inline json to_json(const CVReport& r)
{
    return json{{"lambda_grid", to_json(r.lambda_grid)},
                {"mean_loss", to_json(r.mean_loss)},
                {"se_loss", to_json(r.se_loss)},
                {"fold_losses", to_json(r.fold_losses)},
                {"lambda_min", number(r.lambda_min)},
                {"lambda_1se", number(r.lambda_1se)},
                {"folds", r.folds}};
}

inline json to_json(const ExperimentRecord& rec)
{
    json designs = json::object();
    for (const auto& s : rec.summary) {
        json& d = designs[std::string(to_string(s.design))];
        d[std::string(to_string(s.method))] = json{{"median_rmse", number(s.median_rmse)},
                                                   {"bootstrap_se", number(s.se)},
                                                   {"replications_used", s.succeeded},
                                                   {"excluded_replications", s.excluded}};
    }
    json failures = json::array();
    for (const auto& row : rec.rows) {
        if (!row.ok) {
            failures.push_back(json{{"design", std::string(to_string(row.design))},
                                    {"method", std::string(to_string(row.method))},
                                    {"replication", row.replication},
                                    {"error", row.error}});
        }
    }
    return json{{"seed", rec.seed}, {"replications", rec.replications}, {"summary", designs},
                {"failures", failures}};
}

/// One row per design x method x replication.
inline void write_bench_csv(std::ostream& os, const ExperimentRecord& rec)
{
    os.precision(17);
    os << "design,method,replication,seed,rmse,lambda,alpha,ok\n";
    for (const auto& r : rec.rows) {
        os << to_string(r.design) << ',' << to_string(r.method) << ',' << r.replication << ',' << r.seed << ','
           << r.rmse << ',' << r.lambda << ',' << r.alpha << ',' << (r.ok ? 1 : 0) << '\n';
    }
}

inline void write_cv_csv(std::ostream& os, const CVReport& r)
{
    os.precision(17);
    os << "lambda,mean_loss,se_loss\n";
    for (std::size_t g = 0; g < r.lambda_grid.size(); ++g) {
        const auto i = static_cast<Eigen::Index>(g);
        os << r.lambda_grid[g] << ',' << r.mean_loss(i) << ',' << r.se_loss(i) << '\n';
    }
}

/// Standardized-scale coefficients along the path, one row per lambda.
inline void write_path_csv(std::ostream& os, const SolutionPath& path, const std::vector<std::string>& names)
{
    os.precision(17);
    os << "lambda";
    for (const auto& n : names) os << ',' << n;
    os << '\n';
    for (std::size_t k = 0; k < path.fits.size(); ++k) {
        os << path.lambdas[k];
        const auto& w = path.fits[k].omega_hat;
        for (Eigen::Index j = 0; j < w.size(); ++j) os << ',' << w(j);
        os << '\n';
    }
}

inline void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m, const std::vector<std::string>& names)
{
    os.precision(17);
    for (std::size_t j = 0; j < names.size(); ++j) os << (j ? "," : "") << names[j];
    os << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
        os << '\n';
    }
}

} // namespace copreg
