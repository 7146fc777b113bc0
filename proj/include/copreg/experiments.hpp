#pragma once
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>
#include <Eigen/Dense>
#include <copreg/copula.hpp>
#include <copreg/data.hpp>
#include <copreg/errors.hpp>
#include <copreg/parallel.hpp>
#include <copreg/resample.hpp>
#include <copreg/solver.hpp>
#include <copreg/tuning.hpp>

namespace copreg {

enum class DesignId { Ex1, Ex2, Ex3, Ex4, Ex4Duplicated };

inline std::string_view to_string(DesignId d)
{
    switch (d) {
        case DesignId::Ex1: return "ex1";
        case DesignId::Ex2: return "ex2";
        case DesignId::Ex3: return "ex3";
        case DesignId::Ex4: return "ex4";
        case DesignId::Ex4Duplicated: return "ex4-dup";
    }
    return "unknown";
}

inline DesignId parse_design(std::string_view s)
{
    if (s == "ex1") return DesignId::Ex1;
    if (s == "ex2") return DesignId::Ex2;
    if (s == "ex3") return DesignId::Ex3;
    if (s == "ex4") return DesignId::Ex4;
    if (s == "ex4-dup") return DesignId::Ex4Duplicated;
    throw invalid_parameter("unknown design '" + std::string(s) + "'");
}

/**
 * A simulation design. Equicorrelated designs draw rows from MVN(0, R) with
 * R = (1 - rho) I + rho 11^T; block designs set X_i = Z_b + e_i for the
 * columns of block b (e_i ~ N(0, block_noise_var)) and N(0, 1) for the rest.
 */
struct SimDesign
{
    DesignId id = DesignId::Ex1;
    Eigen::VectorXd beta_true;
    double sigma_noise = 3.0;
    Eigen::Index n_train = 20;
    Eigen::Index n_valid = 20;
    Eigen::Index n_test = 200;
    double rho = 0.95;             // equicorrelated designs
    int blocks = 0;                // block designs
    int block_size = 5;
    double block_noise_var = 0.16;

    Eigen::Index p() const { return beta_true.size(); }
    bool is_block() const { return blocks > 0; }

    static SimDesign make(DesignId id)
    {
        SimDesign d;
        d.id = id;
        switch (id) {
            case DesignId::Ex1:
                d.beta_true.resize(8);
                d.beta_true << 3, 1.5, 0, 0, 2, 0, 0, 0;
                break;
            case DesignId::Ex2:
                d.beta_true = Eigen::VectorXd::Constant(8, 0.85);
                break;
            case DesignId::Ex3:
                d.beta_true = Eigen::VectorXd::Zero(40);
                d.beta_true.segment(10, 10).setConstant(2.0);
                d.beta_true.segment(30, 10).setConstant(2.0);
                d.sigma_noise = 15.0;
                d.n_train = d.n_valid = 100;
                d.n_test = 400;
                break;
            case DesignId::Ex4:
            case DesignId::Ex4Duplicated:
                d.beta_true = Eigen::VectorXd::Zero(40);
                d.beta_true.head(15).setConstant(3.0);
                d.sigma_noise = 15.0;
                d.n_train = d.n_valid = 100;
                d.n_test = 400;
                d.rho = 0.0;
                d.blocks = 3;
                // Near-duplicate columns within each block.
                if (id == DesignId::Ex4Duplicated) d.block_noise_var = 0.0025;
                break;
        }
        return d;
    }
};

struct SimData
{
    Dataset train;
    Dataset valid;
    Dataset test;
};

namespace detail {

inline Dataset draw_split(const SimDesign& d, Eigen::Index n, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto p = d.p();
    Dataset out;
    out.x.resize(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (d.is_block()) {
            const Eigen::Index grouped = static_cast<Eigen::Index>(d.blocks) * d.block_size;
            const double e_sd = std::sqrt(d.block_noise_var);
            for (int b = 0; b < d.blocks; ++b) {
                const double z = normal(rng);
                for (int c = 0; c < d.block_size; ++c) {
                    out.x(i, static_cast<Eigen::Index>(b) * d.block_size + c) = z + e_sd * normal(rng);
                }
            }
            for (Eigen::Index j = grouped; j < p; ++j) out.x(i, j) = normal(rng);
        } else {
            const double common = normal(rng);
            const double a = std::sqrt(d.rho);
            const double b = std::sqrt(1.0 - d.rho);
            for (Eigen::Index j = 0; j < p; ++j) out.x(i, j) = a * common + b * normal(rng);
        }
    }
    out.y = out.x * d.beta_true;
    for (Eigen::Index i = 0; i < n; ++i) out.y(i) += d.sigma_noise * normal(rng);
    out.task = Task::Regression;
    out.ensure_names();
    return out;
}

} // namespace detail

/// Train, validation and test splits drawn independently from one seed.
inline SimData generate(const SimDesign& design, std::uint64_t seed)
{
    if (design.p() < 1 || design.n_train < 2 || design.n_valid < 1 || design.n_test < 1) {
        throw invalid_parameter("invalid simulation design");
    }
    if (design.is_block() && static_cast<Eigen::Index>(design.blocks) * design.block_size > design.p()) {
        throw invalid_parameter("block layout exceeds the number of features");
    }
    std::mt19937_64 rng(seed);
    SimData out;
    out.train = detail::draw_split(design, design.n_train, rng);
    out.valid = detail::draw_split(design, design.n_valid, rng);
    out.test = detail::draw_split(design, design.n_test, rng);
    return out;
}

/// Bootstrap standard error of the median: B resamples, sample SD of their medians.
inline double bootstrap_se(const std::vector<double>& values, int b = 1000, std::uint64_t seed = 0)
{
    if (values.empty()) throw invalid_parameter("bootstrap of an empty sample");
    if (b < 2) throw invalid_parameter("bootstrap needs B >= 2");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    std::vector<double> medians(static_cast<std::size_t>(b));
    std::vector<double> draw(values.size());
    for (auto& m : medians) {
        for (auto& v : draw) v = values[pick(rng)];
        m = median(draw);
    }
    // Shifted by the first median so a constant sample gives exactly zero.
    const double shift = medians.front();
    double mean = 0.0;
    for (double m : medians) mean += m - shift;
    mean /= b;
    double ss = 0.0;
    for (double m : medians) ss += (m - shift - mean) * (m - shift - mean);
    return std::sqrt(ss / (b - 1));
}

struct BenchOptions
{
    double nu = 10.0;
    int grid_count = 50;
    double grid_ratio = 1e-3;
    bool tune_alpha = true;              // elastic net alpha over {0, 0.1, ..., 1}
    int bootstrap_b = 1000;
    SolverOptions solver;                // seed is replaced by the replication seed
    ProblemOptions problem;
};

struct BenchRow
{
    DesignId design;
    Family method;
    int replication;
    std::uint64_t seed;
    double rmse;
    double lambda;
    double alpha;
    bool ok;
    std::string error;
};

struct BenchSummary
{
    DesignId design;
    Family method;
    double median_rmse;
    double se;
    int succeeded;
    std::vector<int> excluded;           // replications whose fit failed
};

struct ExperimentRecord
{
    std::vector<BenchRow> rows;
    std::vector<BenchSummary> summary;
    std::uint64_t seed = 0;
    int replications = 0;
    double seconds = 0.0;
};

/// Seed of replication r of a design, independent of the method.
inline std::uint64_t replication_seed(std::uint64_t seed, DesignId d, int r)
{
    return detail::splitmix64(detail::splitmix64(seed + static_cast<std::uint64_t>(d) * 0x1000003ULL) +
                              static_cast<std::uint64_t>(r));
}

struct TunedFit
{
    PriorSpec prior;                     // selected lambda / alpha / nu, sigma from training
    FitResult fit;
};

/**
 * Tunes a prior on the validation split; the returned fit is the training
 * fit at the selected lambda (and alpha / nu), from the same solver runs.
 */
inline TunedFit fit_tuned(const Dataset& train, const Dataset& valid, Family method, std::uint64_t seed,
                          const BenchOptions& opt)
{
    PriorSpec prior;
    prior.family = method;
    prior.nu = opt.nu;
    TuneOptions topt;
    topt.grid_count = opt.grid_count;
    topt.grid_ratio = opt.grid_ratio;
    topt.tune_alpha = opt.tune_alpha;
    topt.solver = opt.solver;
    topt.solver.seed = seed;
    topt.problem = opt.problem;
    const TuneResult tuned = validation_tune(train, valid, prior, topt);
    prior.lambda = tuned.lambda;
    prior.alpha = tuned.alpha;
    prior.nu = tuned.nu;
    return {make_problem(train, prior, opt.problem).prior, tuned.fit};
}

/// One replication of one method: tune on validation, fit on training, score on test.
inline BenchRow run_replication(const SimData& data, DesignId design, Family method, int r,
                                std::uint64_t seed, const BenchOptions& opt)
{
    BenchRow row{design, method, r, seed, std::numeric_limits<double>::quiet_NaN(), 0.0, 1.0, false, ""};
    try {
        const TunedFit tf = fit_tuned(data.train, data.valid, method, seed, opt);
        const Eigen::VectorXd pred = predict_original(data.test.x, tf.fit, Loss::SquaredError);
        row.rmse = std::sqrt((pred - data.test.y).squaredNorm() / static_cast<double>(data.test.n()));
        row.lambda = tf.prior.lambda;
        row.alpha = tf.prior.alpha;
        row.ok = std::isfinite(row.rmse);
        if (!row.ok) row.error = "non-finite test RMSE";
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
    }
    return row;
}

/**
 * Monte-Carlo benchmark: for each design and replication, data are drawn
 * once and shared by all methods. Failed fits are recorded and excluded from
 * the medians.
 */
inline ExperimentRecord run_benchmark(const std::vector<DesignId>& designs, const std::vector<Family>& methods,
                                      int replications, std::uint64_t seed, const BenchOptions& opt = {})
{
    if (replications < 1) throw invalid_parameter("replications must be at least 1");
    if (designs.empty() || methods.empty()) throw invalid_parameter("no designs or methods to run");
    const auto start = std::chrono::steady_clock::now();
    ExperimentRecord rec;
    rec.seed = seed;
    rec.replications = replications;
    const std::size_t per_design = static_cast<std::size_t>(replications) * methods.size();
    rec.rows.resize(designs.size() * per_design);
    for (std::size_t di = 0; di < designs.size(); ++di) {
        const SimDesign design = SimDesign::make(designs[di]);
        parallel_for(static_cast<std::size_t>(replications), [&](std::size_t r) {
            const std::uint64_t s = replication_seed(seed, designs[di], static_cast<int>(r));
            const SimData data = generate(design, s);
            for (std::size_t mi = 0; mi < methods.size(); ++mi) {
                rec.rows[di * per_design + r * methods.size() + mi] =
                    run_replication(data, designs[di], methods[mi], static_cast<int>(r), s, opt);
            }
        });
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            BenchSummary sum{designs[di], methods[mi], std::numeric_limits<double>::quiet_NaN(), 0.0, 0, {}};
            std::vector<double> vals;
            for (int r = 0; r < replications; ++r) {
                const auto& row = rec.rows[di * per_design + static_cast<std::size_t>(r) * methods.size() + mi];
                if (row.ok) vals.push_back(row.rmse);
                else sum.excluded.push_back(r);
            }
            sum.succeeded = static_cast<int>(vals.size());
            if (!vals.empty()) {
                sum.median_rmse = median(vals);
                sum.se = bootstrap_se(vals, opt.bootstrap_b, detail::splitmix64(seed ^ (di * 131 + mi)));
            }
            rec.summary.push_back(std::move(sum));
        }
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

struct GroupingPair
{
    Eigen::Index k;
    Eigen::Index l;
};

struct GroupingReport
{
    Eigen::Index k = 0;                  // ordered so omega_k >= omega_l
    Eigen::Index l = 0;
    bool eligible = false;
    std::string note;
    double d_lambda = 0.0;               // |q_k - q_l| dq_k/domega_k
    double bound_first = 0.0;            // |y| sqrt(2(1 - rho_lk)) / |rho*_kl|
    double bound_sqrt_half_pi = 0.0;     // full bound with constant lambda sqrt(pi/2)
    double bound_half_pi = 0.0;          // full bound with constant lambda pi/2
    bool holds = false;                  // against bound_sqrt_half_pi
    bool holds_half_pi = false;
};

/**
 * Evaluates both sides of the grouping inequality for a Gauss-copula fit at
 * each requested pair, using the fit's q-map and the problem's sigma. The
 * second term's constant is reported in both readings: lambda sqrt(pi/2) (the
 * value of dq/domega at 0) and lambda pi/2.
 */
inline std::vector<GroupingReport> check_grouping_theorem(const FitResult& fit, const Problem& prob,
                                                          const std::vector<GroupingPair>& pairs)
{
    if (prob.prior.family != Family::GaussCopula) {
        throw invalid_parameter("grouping check requires a Gauss-copula fit");
    }
    prob.prior.validate(prob.p());
    const auto& sig = *prob.prior.sigma;
    const QMap qm = q_map(fit.omega_hat, prob.prior);
    const double y_norm = prob.y.norm();
    const double lam = prob.prior.lambda;
    std::vector<GroupingReport> out;
    for (const auto& pr : pairs) {
        GroupingReport rep;
        Eigen::Index k = pr.k;
        Eigen::Index l = pr.l;
        if (k == l || k < 0 || l < 0 || k >= prob.p() || l >= prob.p()) {
            throw invalid_parameter("invalid feature pair");
        }
        if (fit.omega_hat(k) < fit.omega_hat(l)) std::swap(k, l);
        rep.k = k;
        rep.l = l;
        if (!(fit.omega_hat(l) > 0.0)) {
            rep.note = "skipped: requires omega_k >= omega_l > 0";
            out.push_back(rep);
            continue;
        }
        const double partial_kl = sig.partial(k, l);
        if (partial_kl == 0.0) {
            rep.note = "skipped: zero partial correlation";
            out.push_back(rep);
            continue;
        }
        rep.eligible = true;
        rep.d_lambda = std::abs(qm.q(k) - qm.q(l)) * qm.dq_domega(k);
        double q_rest = 0.0;
        double diff_rest = 0.0;
        for (Eigen::Index j = 0; j < prob.p(); ++j) {
            if (j == k || j == l) continue;
            q_rest += qm.q(j) * qm.q(j);
            const double d = sig.partial(j, l) - sig.partial(j, k);
            diff_rest += d * d;
        }
        const double denom = std::abs(partial_kl);
        rep.bound_first = y_norm * std::sqrt(std::max(0.0, 2.0 * (1.0 - sig.correlation(l, k)))) / denom;
        const double second = std::sqrt(q_rest) * std::sqrt(diff_rest) / denom;
        rep.bound_sqrt_half_pi = rep.bound_first + lam * std::sqrt(std::numbers::pi / 2.0) * second;
        rep.bound_half_pi = rep.bound_first + lam * (std::numbers::pi / 2.0) * second;
        rep.holds = rep.d_lambda <= rep.bound_sqrt_half_pi;
        rep.holds_half_pi = rep.d_lambda <= rep.bound_half_pi;
        out.push_back(rep);
    }
    return out;
}

struct AssumptionReport
{
    int concavity_points = 0;
    int concavity_violations = 0;        // omega > 0 branch
    int convexity_violations = 0;        // omega < 0 branch
    int pairs_sampled = 0;
    int pairs_eligible = 0;              // denominator of the inequality nonzero
    int assumption2_violations = 0;
    double violation_fraction = 0.0;
};

/**
 * Numerical scans of the two shape assumptions on the q-map: concavity of q
 * on (0, upper] by second differences (and convexity on the mirrored branch),
 * and the sampled pairwise inequality
 *   q(w_k + w_l) (q_k q'_l - q_l q'_k) / (q'_l - q'_k)
 *     < (q_k^2 q'_l - q_l^2 q'_k) / (q'_l - q'_k)
 * over random distinct same-sign pairs (half positive, half negative).
 */
inline AssumptionReport check_assumptions(const PriorSpec& spec, int grid_points = 10000,
                                          double upper = 0.0, int pairs = 10000,
                                          std::uint64_t seed = 0)
{
    if (spec.family != Family::GaussCopula) throw invalid_parameter("assumption scan requires the Gauss family");
    if (!(spec.lambda > 0.0)) throw invalid_parameter("lambda must be positive");
    if (grid_points < 3) throw invalid_parameter("need at least 3 grid points");
    if (upper <= 0.0) upper = 30.0 / spec.lambda;
    PriorSpec s1 = spec;
    s1.sigma = std::make_shared<const CorrelationMatrix>(CorrelationMatrix::identity(1));

    AssumptionReport rep;
    rep.concavity_points = grid_points;
    Eigen::VectorXd w(grid_points);
    const double h = upper / grid_points;
    for (int i = 0; i < grid_points; ++i) w(i) = h * (i + 1);
    const QMap pos = q_map(w, s1);
    const QMap neg = q_map(-w, s1);
    for (int i = 1; i + 1 < grid_points; ++i) {
        const double d2p = pos.q(i + 1) - 2.0 * pos.q(i) + pos.q(i - 1);
        const double d2n = neg.q(i + 1) - 2.0 * neg.q(i) + neg.q(i - 1);
        const double tol = 1e-12 * std::max(1.0, std::abs(pos.q(i)));
        if (d2p > tol) ++rep.concavity_violations;
        if (d2n < -tol) ++rep.convexity_violations;
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, upper);
    Eigen::VectorXd trio(3);
    for (int t = 0; t < pairs; ++t) {
        const double sign = (t % 2 == 0) ? 1.0 : -1.0;
        const double a = sign * unif(rng);
        const double b = sign * unif(rng);
        if (a == b || a == 0.0 || b == 0.0) continue;
        ++rep.pairs_sampled;
        trio << a, b, a + b;
        const QMap qm = q_map(trio, s1);
        const double qk = qm.q(0), ql = qm.q(1), dk = qm.dq_domega(0), dl = qm.dq_domega(1);
        const double den = dl - dk;
        if (den == 0.0) continue;
        ++rep.pairs_eligible;
        const double lhs = qm.q(2) * (qk * dl - ql * dk) / den;
        const double rhs = (qk * qk * dl - ql * ql * dk) / den;
        if (!(lhs < rhs)) ++rep.assumption2_violations;
    }
    rep.violation_fraction = rep.pairs_eligible > 0
        ? static_cast<double>(rep.assumption2_violations) / rep.pairs_eligible : 0.0;
    return rep;
}

/// Largest within-block range max(omega) - min(omega) over the design's blocks.
inline double within_block_spread(const Eigen::VectorXd& omega, const SimDesign& design)
{
    double out = 0.0;
    for (int b = 0; b < design.blocks; ++b) {
        const auto seg = omega.segment(static_cast<Eigen::Index>(b) * design.block_size, design.block_size);
        out = std::max(out, seg.maxCoeff() - seg.minCoeff());
    }
    return out;
}

/// All unordered within-block pairs of a block design.
inline std::vector<GroupingPair> within_block_pairs(const SimDesign& design)
{
    std::vector<GroupingPair> out;
    for (int b = 0; b < design.blocks; ++b) {
        const Eigen::Index base = static_cast<Eigen::Index>(b) * design.block_size;
        for (int i = 0; i < design.block_size; ++i) {
            for (int j = i + 1; j < design.block_size; ++j) out.push_back({base + i, base + j});
        }
    }
    return out;
}

struct GroupingRun
{
    std::uint64_t seed = 0;
    double lambda = 0.0;
    int eligible = 0;
    int holds = 0;                       // lambda sqrt(pi/2) constant
    int holds_half_pi = 0;               // lambda pi/2 constant
    int skipped = 0;
    double max_ratio = 0.0;              // max D / bound over eligible pairs
    std::vector<GroupingReport> pairs;
};

struct GroupingVerification
{
    std::vector<GroupingRun> runs;
    int eligible = 0;
    int holds = 0;
    int holds_half_pi = 0;
    double fraction = 0.0;
    double fraction_half_pi = 0.0;
};

/**
 * Seeded block-design runs: each is tuned on its validation split, refitted
 * on the training split under the Gauss copula, and every within-block pair
 * is checked against the grouping inequality.
 */
inline GroupingVerification verify_grouping(const SimDesign& design, int runs, std::uint64_t seed,
                                            const BenchOptions& opt = {})
{
    if (!design.is_block()) throw invalid_parameter("grouping verification needs a block design");
    if (runs < 1) throw invalid_parameter("runs must be at least 1");
    GroupingVerification out;
    out.runs.resize(static_cast<std::size_t>(runs));
    const auto pairs = within_block_pairs(design);
    parallel_for(static_cast<std::size_t>(runs), [&](std::size_t r) {
        GroupingRun& run = out.runs[r];
        run.seed = replication_seed(seed, design.id, static_cast<int>(r));
        const SimData data = generate(design, run.seed);
        const TunedFit tf = fit_tuned(data.train, data.valid, Family::GaussCopula, run.seed, opt);
        const Problem prob = make_problem(data.train, tf.prior, opt.problem);
        run.lambda = tf.prior.lambda;
        run.pairs = check_grouping_theorem(tf.fit, prob, pairs);
        for (const auto& rep : run.pairs) {
            if (!rep.eligible) {
                ++run.skipped;
                continue;
            }
            ++run.eligible;
            run.holds += rep.holds ? 1 : 0;
            run.holds_half_pi += rep.holds_half_pi ? 1 : 0;
            if (rep.bound_sqrt_half_pi > 0.0) {
                run.max_ratio = std::max(run.max_ratio, rep.d_lambda / rep.bound_sqrt_half_pi);
            }
        }
    });
    for (const auto& run : out.runs) {
        out.eligible += run.eligible;
        out.holds += run.holds;
        out.holds_half_pi += run.holds_half_pi;
    }
    if (out.eligible > 0) {
        out.fraction = static_cast<double>(out.holds) / out.eligible;
        out.fraction_half_pi = static_cast<double>(out.holds_half_pi) / out.eligible;
    }
    return out;
}

} // namespace copreg
