#pragma once
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>
#include <CLI11.hpp>
#include <copreg/copula.hpp>
#include <copreg/data.hpp>
#include <copreg/errors.hpp>
#include <copreg/experiments.hpp>
#include <copreg/resample.hpp>
#include <copreg/serialize.hpp>
#include <copreg/sigma.hpp>
#include <copreg/solver.hpp>
#include <copreg/tuning.hpp>

namespace copreg::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 2, kData = 3, kNumerical = 4 };

enum class Command { Fit, CV, Path, Simulate, Bench, Contour, ResampleFit, VerifyTheory };

inline std::string_view to_string(Command c)
{
    switch (c) {
        case Command::Fit: return "fit";
        case Command::CV: return "cv";
        case Command::Path: return "path";
        case Command::Simulate: return "simulate";
        case Command::Bench: return "bench";
        case Command::Contour: return "contour";
        case Command::ResampleFit: return "resample-fit";
        case Command::VerifyTheory: return "verify-theory";
    }
    return "unknown";
}

/// Seed used when none is given: COPREG_SEED if set, else 0.
inline std::uint64_t default_seed()
{
    if (const char* env = std::getenv("COPREG_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw invalid_parameter("COPREG_SEED must be a non-negative integer");
        }
    }
    return 0;
}

struct RunConfig
{
    Command command = Command::Fit;
    std::string input;                   // CSV for fit / cv / path / resample-fit
    std::string output_dir = ".";
    std::string target = "y";
    Task task = Task::Regression;

    Family family = Family::GaussCopula;
    std::optional<double> lambda;        // unset: chosen by cross-validation
    double alpha = 0.5;
    double nu = 10.0;
    double sigma_blend = kDefaultSigmaBlend;
    bool identity_sigma = false;
    bool tune_alpha = false;
    bool tune_nu = false;

    int folds = 10;
    int grid_count = 50;
    double grid_ratio = 1e-3;
    std::uint64_t seed = 0;

    int restarts = 3;
    int max_outer = 200;
    int max_inner = 500;
    double grad_tol = 1e-6;
    double constraint_tol = 1e-6;

    // simulate / bench / verify-theory
    std::vector<std::string> designs{"ex1"};
    std::vector<std::string> methods{"gauss-copula", "t-copula", "elastic-net", "lasso"};
    int replications = 100;
    int bootstrap_b = 1000;
    int runs = 20;

    // contour
    double rho = 0.5;
    double range = 3.0;
    int resolution = 101;

    // resample-fit
    Eigen::Index subsample = 0;          // 0: min(n, 1500)
    int resample_count = 200;
    bool without_replacement = false;
    bool dump_solutions = false;

    std::string trace_path;              // JSON-lines solver diagnostics
    bool dump_sigma = false;
};

namespace detail {

struct Outputs
{
    std::vector<std::pair<std::string, std::string>> files;   // name, contents

    void add(const std::string& name, const std::string& contents) { files.emplace_back(name, contents); }
};

// Solver diagnostics collected in memory and written with the other outputs.
class TraceSink
{
public:
    explicit TraceSink(bool enabled) : enabled_(enabled) {}

    std::function<void(const TraceEvent&)> callback()
    {
        if (!enabled_) return {};
        return [this](const TraceEvent& e) {
            json line{{"start", e.start}, {"outer", e.outer}, {"inner_iterations", e.inner_iterations},
                      {"objective", number(e.objective)}, {"constraint", number(e.constraint)},
                      {"multiplier", number(e.multiplier)}, {"penalty", number(e.penalty)},
                      {"gradient_norm", number(e.gradient_norm)}};
            std::lock_guard lock(mutex_);
            lines_ << line.dump() << '\n';
        };
    }

    std::string contents() const { return lines_.str(); }

private:
    bool enabled_;
    std::mutex mutex_;
    std::ostringstream lines_;
};

inline SolverOptions solver_options(const RunConfig& c)
{
    SolverOptions o;
    o.restarts = c.restarts;
    o.max_outer = c.max_outer;
    o.max_inner = c.max_inner;
    o.grad_tol = c.grad_tol;
    o.constraint_tol = c.constraint_tol;
    o.seed = c.seed;
    return o;
}

inline ProblemOptions problem_options(const RunConfig& c)
{
    ProblemOptions o;
    o.sigma_blend = c.sigma_blend;
    o.sigma_mode = c.identity_sigma ? SigmaMode::Identity : SigmaMode::Estimate;
    return o;
}

inline PriorSpec prior(const RunConfig& c)
{
    PriorSpec p;
    p.family = c.family;
    p.alpha = c.alpha;
    p.nu = c.nu;
    if (c.lambda) p.lambda = *c.lambda;
    return p;
}

inline Dataset load_input(const RunConfig& c)
{
    if (c.input.empty()) throw invalid_parameter("--input is required for " + std::string(to_string(c.command)));
    Dataset d = load_csv(c.input, c.target, c.task);
    d.ensure_names();
    return d;
}

inline json config_json(const RunConfig& c)
{
    json out{{"command", std::string(to_string(c.command))},
             {"seed", c.seed},
             {"family", std::string(to_string(c.family))},
             {"task", std::string(copreg::to_string(c.task))},
             {"sigma_blend", c.sigma_blend},
             {"sigma", c.identity_sigma ? "identity" : "estimated"},
             {"restarts", c.restarts}};
    if (!c.input.empty()) out["input"] = c.input;
    if (c.lambda) out["lambda"] = *c.lambda;
    return out;
}

inline CVOptions cv_options(const RunConfig& c)
{
    CVOptions o;
    o.folds = c.folds;
    o.seed = c.seed;
    o.solver = solver_options(c);
    o.problem = problem_options(c);
    return o;
}

// Cross-validated lambda (and optionally alpha / nu) on the full data.
struct Selection
{
    PriorSpec prior;
    std::optional<CVReport> cv;
};

inline Selection select_prior(const RunConfig& c, const Dataset& data, const SolverOptions& so)
{
    Selection sel{prior(c), std::nullopt};
    if (c.lambda) return sel;
    std::vector<double> alphas{c.alpha};
    std::vector<double> nus{c.nu};
    if (c.tune_alpha && c.family == Family::ElasticNet) alphas = TuneOptions{}.alpha_grid;
    if (c.tune_nu && c.family == Family::TCopula) nus = TuneOptions{}.nu_grid;
    CVOptions cvo = cv_options(c);
    cvo.solver.trace = so.trace;
    double best = std::numeric_limits<double>::infinity();
    for (double nu : nus) {
        for (double alpha : alphas) {
            PriorSpec p = sel.prior;
            p.alpha = alpha;
            p.nu = nu;
            const Problem full = make_problem(data, p, problem_options(c));
            const auto grid = make_lambda_grid(full, c.grid_count, c.grid_ratio);
            CVReport rep = cross_validate(data, p, grid, cvo);
            const double loss = rep.mean_loss(static_cast<Eigen::Index>(rep.index_min));
            if (loss < best) {
                best = loss;
                p.lambda = rep.lambda_min;
                sel.prior = p;
                sel.cv = std::move(rep);
            }
        }
    }
    return sel;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline std::string sigma_csv(const PriorSpec& p)
{
    std::ostringstream os;
    if (p.sigma) write_sigma_csv(os, *p.sigma);
    return os.str();
}

inline void cmd_fit(const RunConfig& c, Outputs& out, json& result, TraceSink& trace)
{
    const Dataset data = load_input(c);
    SolverOptions so = solver_options(c);
    so.trace = trace.callback();
    const Selection sel = select_prior(c, data, so);
    const Problem prob = make_problem(data, sel.prior, problem_options(c));
    const FitResult fit = solve(prob, so);
    result["prior"] = to_json(prob.prior);
    result["n"] = data.n();
    result["p"] = data.p();
    result["fit"] = to_json(fit, data.feature_names);
    if (sel.cv) result["cv"] = json{{"lambda_min", sel.cv->lambda_min}, {"lambda_1se", sel.cv->lambda_1se},
                                    {"folds", c.folds}};
    if (c.dump_sigma) out.add("sigma.csv", sigma_csv(prob.prior));
    out.add("fit.json", "");
}

inline void cmd_cv(const RunConfig& c, Outputs& out, json& result, TraceSink& trace)
{
    const Dataset data = load_input(c);
    RunConfig cc = c;
    cc.lambda.reset();
    SolverOptions so = solver_options(c);
    so.trace = trace.callback();
    const Selection sel = select_prior(cc, data, so);
    result["prior"] = to_json(sel.prior);
    result["cv"] = to_json(*sel.cv);
    std::ostringstream curve;
    write_cv_csv(curve, *sel.cv);
    out.add("cv_curve.csv", curve.str());
    out.add("cv.json", "");
}

inline void cmd_path(const RunConfig& c, Outputs& out, json& result, TraceSink& trace)
{
    const Dataset data = load_input(c);
    PriorSpec p = prior(c);
    const Problem prob = make_problem(data, p, problem_options(c));
    const auto grid = make_lambda_grid(prob, c.grid_count, c.grid_ratio);
    SolverOptions so = solver_options(c);
    so.trace = trace.callback();
    const SolutionPath path = solution_path(prob, grid, so);
    json fits = json::array();
    for (const auto& f : path.fits) {
        fits.push_back(json{{"lambda", f.lambda}, {"converged", f.converged},
                            {"omega_hat", to_json(f.omega_hat)},
                            {"n_selected", selected_features(f.omega_hat, data.feature_names).size()}});
    }
    result["prior"] = to_json(prob.prior);
    result["feature_names"] = data.feature_names;
    result["lambda_grid"] = to_json(grid);
    result["continuity_constant"] = number(path.continuity);
    result["path"] = fits;
    std::ostringstream csv;
    write_path_csv(csv, path, data.feature_names);
    out.add("path.csv", csv.str());
    if (c.dump_sigma) out.add("sigma.csv", sigma_csv(prob.prior));
    out.add("path.json", "");
}

inline void cmd_simulate(const RunConfig& c, Outputs& out, json& result)
{
    json files = json::array();
    for (const auto& name : c.designs) {
        const SimDesign design = SimDesign::make(parse_design(name));
        const SimData data = generate(design, c.seed);
        const std::pair<const char*, const Dataset*> splits[] = {
            {"train", &data.train}, {"valid", &data.valid}, {"test", &data.test}};
        for (const auto& [split, d] : splits) {
            std::ostringstream os;
            write_csv(os, *d);
            const std::string file = name + "_" + split + ".csv";
            out.add(file, os.str());
            files.push_back(json{{"file", file}, {"rows", d->n()}, {"features", d->p()}});
        }
        result["designs"][name] = json{{"beta_true", to_json(design.beta_true)},
                                       {"sigma_noise", design.sigma_noise}};
    }
    result["files"] = files;
    out.add("simulate.json", "");
}

inline void cmd_bench(const RunConfig& c, Outputs& out, json& result)
{
    std::vector<DesignId> designs;
    for (const auto& d : c.designs) designs.push_back(parse_design(d));
    std::vector<Family> methods;
    for (const auto& m : c.methods) methods.push_back(parse_family(m));
    BenchOptions bo;
    bo.nu = c.nu;
    bo.grid_count = c.grid_count;
    bo.grid_ratio = c.grid_ratio;
    bo.bootstrap_b = c.bootstrap_b;
    bo.solver = solver_options(c);
    bo.problem = problem_options(c);
    const ExperimentRecord rec = run_benchmark(designs, methods, c.replications, c.seed, bo);
    result["benchmark"] = to_json(rec);
    std::ostringstream csv;
    write_bench_csv(csv, rec);
    out.add("bench.csv", csv.str());
    out.add("bench_summary.json", "");
}

inline void cmd_contour(const RunConfig& c, Outputs& out, json& result)
{
    PriorSpec p = prior(c);
    if (!c.lambda) p.lambda = 1.0;
    if (p.is_copula()) {
        p.sigma = std::make_shared<const CorrelationMatrix>(CorrelationMatrix::equicorrelation(2, c.rho));
    }
    const auto grid = contour_grid(p, c.range, c.resolution);
    std::ostringstream csv;
    write_contour_csv(csv, grid);
    result["prior"] = to_json(p);
    result["rho"] = c.rho;
    result["range"] = c.range;
    result["resolution"] = c.resolution;
    out.add("contour.csv", csv.str());
    out.add("contour.json", "");
}

inline void cmd_resample(const RunConfig& c, Outputs& out, json& result, TraceSink& trace)
{
    const Dataset data = load_input(c);
    Problem prob = make_problem(data, prior(c), problem_options(c));
    ResampleConfig rc;
    rc.m = c.subsample > 0 ? c.subsample : std::min<Eigen::Index>(data.n(), 1500);
    rc.replications = c.resample_count;
    rc.seed = c.seed;
    rc.with_replacement = !c.without_replacement;
    SolverOptions so = solver_options(c);
    so.trace = trace.callback();
    bool tuned = false;
    if (!c.lambda) {
        prob.prior.lambda = tune_resample_lambda(prob, rc, cv_options(c), c.grid_count, c.grid_ratio);
        tuned = true;
    }
    const ResampleResult res = resample_fit(prob, rc, so, problem_options(c));
    result["prior"] = to_json(prob.prior);
    result["lambda_tuned_on_subsample"] = tuned;
    result["m"] = rc.m;
    result["M"] = rc.replications;
    result["with_replacement"] = rc.with_replacement;
    result["retries"] = res.retries;
    result["fit"] = to_json(res.fit, data.feature_names);
    if (c.dump_solutions) {
        std::ostringstream csv;
        write_matrix_csv(csv, res.solutions, data.feature_names);
        out.add("resample_solutions.csv", csv.str());
    }
    out.add("resample.json", "");
}

inline void cmd_verify(const RunConfig& c, Outputs& out, json& result)
{
    const std::string name = c.designs.size() == 1 && c.designs.front() != "ex1" ? c.designs.front() : "ex4";
    const SimDesign design = SimDesign::make(parse_design(name));
    BenchOptions bo;
    bo.grid_count = c.grid_count;
    bo.grid_ratio = c.grid_ratio;
    bo.solver = solver_options(c);
    bo.problem = problem_options(c);
    const GroupingVerification gv = verify_grouping(design, c.runs, c.seed, bo);
    json runs = json::array();
    for (const auto& r : gv.runs) {
        runs.push_back(json{{"seed", r.seed}, {"lambda", r.lambda}, {"eligible_pairs", r.eligible},
                            {"holds", r.holds}, {"holds_half_pi", r.holds_half_pi},
                            {"skipped_pairs", r.skipped}, {"max_ratio", number(r.max_ratio)}});
    }
    PriorSpec ap;
    ap.family = Family::GaussCopula;
    ap.lambda = 1.0;
    ap.sigma = std::make_shared<const CorrelationMatrix>(CorrelationMatrix::identity(1));
    const AssumptionReport ar = check_assumptions(ap, 10000, 0.0, 10000, c.seed);
    result["design"] = name;
    result["grouping"] = json{{"eligible_pairs", gv.eligible},
                              {"fraction_holding_sqrt_half_pi", number(gv.fraction)},
                              {"fraction_holding_half_pi", number(gv.fraction_half_pi)},
                              {"runs", runs}};
    result["assumptions"] = json{{"lambda", 1.0},
                                 {"concavity_points", ar.concavity_points},
                                 {"concavity_violations", ar.concavity_violations},
                                 {"convexity_violations", ar.convexity_violations},
                                 {"pairs_sampled", ar.pairs_sampled},
                                 {"pairs_eligible", ar.pairs_eligible},
                                 {"assumption2_violations", ar.assumption2_violations},
                                 {"violation_fraction", ar.violation_fraction}};
    out.add("theory.json", "");
}

inline int exit_code_for(const error& e)
{
    const std::string_view kind = e.kind();
    if (kind == "invalid_parameter") return kUsage;
    if (kind == "data_error" || kind == "degenerate_feature") return kData;
    return kNumerical;
}

inline void print_error(std::ostream& err, const std::string& kind, const std::string& message, int code)
{
    err << json{{"error", json{{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << '\n';
}

} // namespace detail

/**
 * Executes one command. All artifacts are assembled in memory and written to
 * cfg.output_dir at the end; the main JSON document carries the result and a
 * separate "timing" object, which is the only run-dependent content.
 */
inline int run(const RunConfig& cfg, std::ostream& err = std::cerr)
{
    const auto start = std::chrono::steady_clock::now();
    detail::Outputs out;
    json result;
    result["config"] = detail::config_json(cfg);
    detail::TraceSink trace(!cfg.trace_path.empty());
    try {
        switch (cfg.command) {
            case Command::Fit: detail::cmd_fit(cfg, out, result, trace); break;
            case Command::CV: detail::cmd_cv(cfg, out, result, trace); break;
            case Command::Path: detail::cmd_path(cfg, out, result, trace); break;
            case Command::Simulate: detail::cmd_simulate(cfg, out, result); break;
            case Command::Bench: detail::cmd_bench(cfg, out, result); break;
            case Command::Contour: detail::cmd_contour(cfg, out, result); break;
            case Command::ResampleFit: detail::cmd_resample(cfg, out, result, trace); break;
            case Command::VerifyTheory: detail::cmd_verify(cfg, out, result); break;
        }
    } catch (const diverged& e) {
        detail::print_error(err, e.kind(), std::string(e.what()) + "\n" + e.trace(), kNumerical);
        return kNumerical;
    } catch (const error& e) {
        const int code = detail::exit_code_for(e);
        detail::print_error(err, e.kind(), e.what(), code);
        return code;
    } catch (const std::exception& e) {
        detail::print_error(err, "internal", e.what(), kNumerical);
        return kNumerical;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result["timing"] = json{{"wall_seconds", seconds}};

    try {
        std::filesystem::create_directories(cfg.output_dir);
        for (auto& [name, contents] : out.files) {
            const std::string body = contents.empty() ? detail::dump(result) : contents;
            std::ofstream f(std::filesystem::path(cfg.output_dir) / name, std::ios::binary);
            if (!f) throw data_error("cannot write '" + name + "' in '" + cfg.output_dir + "'");
            f << body;
        }
        if (!cfg.trace_path.empty()) {
            std::ofstream f(cfg.trace_path, std::ios::binary);
            if (!f) throw data_error("cannot write trace file '" + cfg.trace_path + "'");
            f << trace.contents();
        }
    } catch (const std::filesystem::filesystem_error& e) {
        detail::print_error(err, "data_error", e.what(), kData);
        return kData;
    } catch (const error& e) {
        detail::print_error(err, e.kind(), e.what(), kData);
        return kData;
    }
    return kSuccess;
}

/// Parses argv into a RunConfig and runs it. Usage errors exit with 2.
inline int main_entry(int argc, char** argv, std::ostream& err = std::cerr)
{
    CLI::App app{"Copula-prior sparse regression"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::uint64_t seed = 0;
    std::string task = "regression";
    std::string family = "gauss-copula";

    auto add_data = [&](CLI::App* sub) {
        sub->add_option("--input", cfg.input, "Input CSV with a header row")->required();
        sub->add_option("--target", cfg.target, "Response column name");
        sub->add_option("--task", task, "regression or classification")
            ->check(CLI::IsMember({"regression", "classification"}));
    };
    auto add_prior = [&](CLI::App* sub) {
        sub->add_option("--family", family, "lasso, elastic-net, gauss-copula or t-copula");
        sub->add_option("--lambda", cfg.lambda, "Fixed lambda (default: chosen by cross-validation)");
        sub->add_option("--alpha", cfg.alpha, "Elastic-net mixing in [0, 1]");
        sub->add_option("--nu", cfg.nu, "t-copula degrees of freedom");
        sub->add_option("--c", cfg.sigma_blend, "Sigma blend constant used when n < p");
        sub->add_flag("--identity-sigma", cfg.identity_sigma, "Use sigma = I instead of estimating it");
        sub->add_flag("--tune-alpha", cfg.tune_alpha, "Cross-validate alpha over {0, 0.1, ..., 1}");
        sub->add_flag("--tune-nu", cfg.tune_nu, "Cross-validate nu over {5, 10, 30}");
    };
    auto add_solver = [&](CLI::App* sub) {
        sub->add_option("--restarts", cfg.restarts, "Extra random starts for copula priors");
        sub->add_option("--max-outer", cfg.max_outer, "Augmented-Lagrangian outer iterations");
        sub->add_option("--max-inner", cfg.max_inner, "Inner quasi-Newton iterations");
        sub->add_option("--grad-tol", cfg.grad_tol, "Relative projected-gradient tolerance");
        sub->add_option("--constraint-tol", cfg.constraint_tol, "Complementarity tolerance");
        sub->add_option("--trace", cfg.trace_path, "Write solver diagnostics as JSON lines");
    };
    auto add_grid = [&](CLI::App* sub) {
        sub->add_option("--folds", cfg.folds, "Cross-validation folds");
        sub->add_option("--grid-count", cfg.grid_count, "Lambda grid size");
        sub->add_option("--grid-ratio", cfg.grid_ratio, "Smallest lambda as a fraction of lambda_max");
    };
    auto add_base = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "Random seed (default: $COPREG_SEED or 0)");
        sub->add_option("--out", cfg.output_dir, "Output directory");
    };

    auto* fit = app.add_subcommand("fit", "Fit one model and write fit.json");
    auto* cv = app.add_subcommand("cv", "Cross-validate lambda and write cv.json and cv_curve.csv");
    auto* path = app.add_subcommand("path", "Trace the solution path and write path.csv");
    auto* sim = app.add_subcommand("simulate", "Write train/validation/test CSVs of a simulation design");
    auto* bench = app.add_subcommand("bench", "Monte-Carlo benchmark over simulation designs");
    auto* contour = app.add_subcommand("contour", "Bivariate log prior density on a grid");
    auto* resample = app.add_subcommand("resample-fit", "Median of subsample fits for large n");
    auto* verify = app.add_subcommand("verify-theory", "Numerical checks of the grouping bound and q-map shape");

    for (auto* sub : {fit, cv, path, resample}) {
        add_base(sub);
        add_data(sub);
        add_prior(sub);
        add_solver(sub);
        add_grid(sub);
    }
    fit->add_flag("--dump-sigma", cfg.dump_sigma, "Also write sigma.csv");
    path->add_flag("--dump-sigma", cfg.dump_sigma, "Also write sigma.csv");
    resample->add_option("--m", cfg.subsample, "Subsample size (default min(n, 1500))");
    resample->add_option("--M", cfg.resample_count, "Number of subsample fits");
    resample->add_flag("--without-replacement", cfg.without_replacement, "Draw subsamples without replacement");
    resample->add_flag("--dump-solutions", cfg.dump_solutions, "Write the M x p solution matrix");

    add_base(sim);
    sim->add_option("--design", cfg.designs, "ex1, ex2, ex3, ex4 or ex4-dup")->delimiter(',');

    add_base(bench);
    add_solver(bench);
    bench->add_option("--design", cfg.designs, "Comma-separated designs")->delimiter(',');
    bench->add_option("--methods", cfg.methods, "Comma-separated prior families")->delimiter(',');
    bench->add_option("--reps", cfg.replications, "Replications per design");
    bench->add_option("--nu", cfg.nu, "t-copula degrees of freedom");
    bench->add_option("--bootstrap", cfg.bootstrap_b, "Bootstrap resamples for the SE of the median");
    bench->add_option("--grid-count", cfg.grid_count, "Lambda grid size");
    bench->add_option("--grid-ratio", cfg.grid_ratio, "Smallest lambda as a fraction of lambda_max");

    add_base(contour);
    contour->add_option("--family", family, "Prior family");
    contour->add_option("--lambda", cfg.lambda, "Laplace rate (default 1)");
    contour->add_option("--alpha", cfg.alpha, "Elastic-net mixing");
    contour->add_option("--nu", cfg.nu, "t-copula degrees of freedom");
    contour->add_option("--rho", cfg.rho, "Copula correlation");
    contour->add_option("--range", cfg.range, "Grid half-width");
    contour->add_option("--resolution", cfg.resolution, "Points per axis");

    add_base(verify);
    add_solver(verify);
    verify->add_option("--design", cfg.designs, "Block design (ex4 or ex4-dup)")->delimiter(',');
    verify->add_option("--runs", cfg.runs, "Seeded runs");
    verify->add_option("--grid-count", cfg.grid_count, "Lambda grid size");

    try {
        cfg.seed = default_seed();
        seed = cfg.seed;
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp& e) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        detail::print_error(err, "usage", e.what(), kUsage);
        return kUsage;
    } catch (const error& e) {
        detail::print_error(err, e.kind(), e.what(), kUsage);
        return kUsage;
    }

    const std::pair<CLI::App*, Command> commands[] = {
        {fit, Command::Fit},         {cv, Command::CV},           {path, Command::Path},
        {sim, Command::Simulate},    {bench, Command::Bench},     {contour, Command::Contour},
        {resample, Command::ResampleFit}, {verify, Command::VerifyTheory}};
    for (const auto& [sub, cmd] : commands) {
        if (sub->parsed()) cfg.command = cmd;
    }
    cfg.seed = seed;
    try {
        cfg.task = parse_task(task);
        cfg.family = parse_family(family);
    } catch (const error& e) {
        detail::print_error(err, "usage", e.what(), kUsage);
        return kUsage;
    }
    return run(cfg, err);
}

} // namespace copreg::cli
