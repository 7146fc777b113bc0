#pragma once
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>
#include <Eigen/Dense>
#include <copreg/errors.hpp>

namespace copreg {

enum class Task { Regression, Classification };

inline std::string_view to_string(Task t)
{
    return t == Task::Regression ? "regression" : "classification";
}

inline Task parse_task(std::string_view s)
{
    if (s == "regression") return Task::Regression;
    if (s == "classification") return Task::Classification;
    throw invalid_parameter("unknown task '" + std::string(s) + "'");
}

struct Dataset
{
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<std::string> feature_names;
    std::string target_name = "y";
    Task task = Task::Regression;

    Eigen::Index n() const { return x.rows(); }
    Eigen::Index p() const { return x.cols(); }

    Dataset rows(const std::vector<Eigen::Index>& idx) const
    {
        Dataset out;
        out.x.resize(static_cast<Eigen::Index>(idx.size()), p());
        out.y.resize(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            out.x.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
            out.y(static_cast<Eigen::Index>(i)) = y(idx[i]);
        }
        out.feature_names = feature_names;
        out.target_name = target_name;
        out.task = task;
        return out;
    }

    void ensure_names()
    {
        if (static_cast<Eigen::Index>(feature_names.size()) == p()) return;
        feature_names.clear();
        for (Eigen::Index j = 0; j < p(); ++j) feature_names.push_back("x" + std::to_string(j + 1));
    }
};

/// Means and scales used to standardize a design (population variance).
struct StandardizationRecord
{
    Eigen::VectorXd means;
    Eigen::VectorXd scales;
    double y_mean = 0.0;   // 0 for classification
    Task task = Task::Regression;

    static StandardizationRecord identity(Eigen::Index p, Task task = Task::Regression)
    {
        return {Eigen::VectorXd::Zero(p), Eigen::VectorXd::Ones(p), 0.0, task};
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const
    {
        return (x.rowwise() - means.transpose()).array().rowwise() / scales.transpose().array();
    }

    /// Applies the same transform to another dataset (validation, test).
    Dataset apply(const Dataset& d) const
    {
        Dataset out = d;
        out.x = apply(d.x);
        if (task == Task::Regression) out.y = d.y.array() - y_mean;
        return out;
    }

    /// Standardized-scale coefficients and intercept to the original scale.
    std::pair<Eigen::VectorXd, double> to_original(const Eigen::VectorXd& omega,
                                                   double intercept_std = 0.0) const
    {
        Eigen::VectorXd beta = omega.array() / scales.array();
        const double intercept = y_mean + intercept_std - beta.dot(means);
        return {beta, intercept};
    }
};

/// Columns to mean 0 / variance 1 (divide by n); regression responses centered.
inline std::pair<Dataset, StandardizationRecord> standardize(const Dataset& data)
{
    const auto n = data.n();
    const auto p = data.p();
    if (n < 2) throw data_error("need at least two rows to standardize");
    StandardizationRecord rec;
    rec.task = data.task;
    rec.means = data.x.colwise().mean().transpose();
    rec.scales.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double var = (data.x.col(j).array() - rec.means(j)).square().mean();
        const double sd = std::sqrt(var);
        if (!(sd > 1e-12 * std::max(1.0, std::abs(rec.means(j))))) {
            const std::string name = j < static_cast<Eigen::Index>(data.feature_names.size())
                ? data.feature_names[static_cast<std::size_t>(j)] : std::to_string(j);
            throw degenerate_feature("feature '" + name + "' is constant", j);
        }
        rec.scales(j) = sd;
    }
    rec.y_mean = data.task == Task::Regression ? data.y.mean() : 0.0;
    return {rec.apply(data), rec};
}

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ||
                          s.back() == '"')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

} // namespace detail

/**
 * Parses a headered, comma-separated numeric table. Rows are numbered from 1
 * (the first data row) in error messages.
 */
inline Dataset parse_csv(std::istream& in, const std::string& target, Task task)
{
    std::string line;
    if (!std::getline(in, line)) throw data_error("empty CSV input: missing header row");
    const auto header = detail::split(line);
    std::vector<std::string> names(header.begin(), header.end());
    std::ptrdiff_t target_col = -1;
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (names[j] == target) target_col = static_cast<std::ptrdiff_t>(j);
    }
    if (target_col < 0) throw data_error("missing target column '" + target + "'");

    std::vector<std::vector<double>> rows;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row_no;
        const auto cells = detail::split(line);
        if (cells.size() != names.size()) {
            throw data_error("ragged row " + std::to_string(row_no) + ": expected " +
                             std::to_string(names.size()) + " cells, found " +
                             std::to_string(cells.size()));
        }
        std::vector<double> vals(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const auto cell = cells[j];
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
                throw data_error("non-numeric cell '" + std::string(cell) + "' at row " +
                                 std::to_string(row_no) + ", column '" + names[j] + "'");
            }
            if (!std::isfinite(v)) {
                throw data_error("non-finite value '" + std::string(cell) + "' at row " +
                                 std::to_string(row_no) + ", column '" + names[j] + "'");
            }
            vals[j] = v;
        }
        if (task == Task::Classification) {
            const double label = vals[static_cast<std::size_t>(target_col)];
            if (label != 0.0 && label != 1.0) {
                throw data_error("label-domain error: classification target must be 0 or 1, found " +
                                 std::string(cells[static_cast<std::size_t>(target_col)]) +
                                 " at row " + std::to_string(row_no));
            }
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw data_error("CSV has a header but no data rows");

    Dataset d;
    d.task = task;
    d.target_name = target;
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(names.size()) - 1;
    d.x.resize(n, p);
    d.y.resize(n);
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (static_cast<std::ptrdiff_t>(j) != target_col) d.feature_names.push_back(names[j]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index col = 0;
        for (std::size_t j = 0; j < names.size(); ++j) {
            const double v = rows[static_cast<std::size_t>(i)][j];
            if (static_cast<std::ptrdiff_t>(j) == target_col) d.y(i) = v;
            else d.x(i, col++) = v;
        }
    }
    return d;
}

inline Dataset load_csv(const std::string& path, const std::string& target, Task task)
{
    std::ifstream in(path);
    if (!in) throw data_error("cannot open '" + path + "'");
    return parse_csv(in, target, task);
}

/// Features first, target last, full double precision.
inline void write_csv(std::ostream& os, const Dataset& d)
{
    Dataset named = d;
    named.ensure_names();
    os.precision(17);
    for (const auto& name : named.feature_names) os << name << ',';
    os << named.target_name << '\n';
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        for (Eigen::Index j = 0; j < d.p(); ++j) os << d.x(i, j) << ',';
        os << d.y(i) << '\n';
    }
}

} // namespace copreg
