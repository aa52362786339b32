#ifndef DKQL_EXPERIMENT_HPP
#define DKQL_EXPERIMENT_HPP

#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dkql/complexity.hpp"
#include "dkql/config.hpp"
#include "dkql/distributed.hpp"
#include "dkql/evaluation.hpp"
#include "dkql/io.hpp"
#include "dkql/learners.hpp"

namespace dkql {

/// Ridge grid {1/2^q}, descending. sim1 keeps 1/2^q > 1/(2N); sim2 keeps
/// 100/N > 1/2^q > 1/(10N).
inline std::vector<double> lambda_grid(std::size_t N, SimKind sim) {
    if (N < 1) throw ConfigError("lambda grid needs N >= 1");
    const auto n = static_cast<double>(N);
    const double lo = sim == SimKind::sim1 ? 1.0 / (2.0 * n) : 1.0 / (10.0 * n);
    std::vector<double> out;
    for (int q = 0; q < 1100; ++q) {
        const double v = std::ldexp(1.0, -q);
        if (!(v > lo)) break;
        if (sim == SimKind::sim2 && !(v < 100.0 / n)) continue;
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("lambda grid is empty for N = " + std::to_string(N));
    return out;
}

/// `count` log-spaced values from lo to hi, endpoints exact.
inline std::vector<double> sigma_grid(double lo, double hi, std::size_t count = 20) {
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) throw ConfigError("sigma grid needs 0 < lo <= hi");
    if (count < 1) throw ConfigError("sigma grid needs at least one value");
    if (count == 1) {
        if (lo != hi) throw ConfigError("a one-point sigma grid needs lo == hi");
        return {lo};
    }
    if (lo == hi) throw ConfigError("sigma grid with lo == hi must have one value");
    std::vector<double> out(count);
    const double a = std::log(lo);
    const double step = (std::log(hi) - a) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) out[k] = std::exp(a + step * static_cast<double>(k));
    out.front() = lo;
    out.back() = hi;
    return out;
}

inline std::vector<double> config_lambdas(const ExperimentConfig& c) {
    return c.lambda.empty() ? lambda_grid(c.n_train, c.simulator) : c.lambda;
}

inline std::vector<double> config_sigmas(const ExperimentConfig& c) {
    return c.sigma.empty() ? sigma_grid(c.sigma_lo, c.sigma_hi, c.sigma_count) : c.sigma;
}

/// Metric a grid search maximizes: mean survival (sim1) or CSP (sim2).
inline std::string target_metric(SimKind sim) { return sim == SimKind::sim1 ? "survival" : "csp"; }

inline std::vector<FixedPolicy> config_fixed_policies(const ExperimentConfig& c) {
    if (c.fixed.empty()) return c.simulator == SimKind::sim1 ? FixedPolicy::all_sim1() : FixedPolicy::all_sim2();
    std::vector<FixedPolicy> out;
    for (const auto& f : c.fixed)
        out.push_back(c.simulator == SimKind::sim1 ? FixedPolicy::sim1_sequence(f) : FixedPolicy::sim2_dose(parse_real(f)));
    return out;
}

// ---------------------------------------------------------------------------
// Seed layout. Everything derives from SplitMix64(config.seed):
//   trials/i/train      training cohort of trial i
//   trials/i/partition  worker partition of trial i (dkrr, skrr)
//   trials/i/eval       evaluation cohort of trial i
//   grid/train          grid-search training cohort
//   grid/validation     grid-search validation cohorts
// Trial seeds do not depend on the learner or m, so learners in one run
// are compared on the same cohorts.

inline SplitMix64 trial_stream(std::uint64_t seed, std::size_t i) { return SplitMix64(seed).split("trials").split(i); }
inline SplitMix64 grid_stream(std::uint64_t seed) { return SplitMix64(seed).split("grid"); }

/// A trained policy plus its instrumentation.
struct Trained {
    DtrPolicy policy;
    std::vector<WorkerStats> stats;
    double seconds = 0.0;
};

/// Trains one learner. `m` is the worker count (dkrr) or the subset
/// divisor (skrr); ignored otherwise.
inline Trained train_learner(Learner learner, std::span<const Trajectory> data, const DtrProblem& problem,
                             FeatureCase c, const KernelParams& params, std::size_t m, const SplitMix64& partition_rng,
                             unsigned threads = 1) {
    const auto start = std::chrono::steady_clock::now();
    Trained out;
    switch (learner) {
        case Learner::ls:
            out.policy = ls_dtr_train(data, problem, c, &out.stats);
            break;
        case Learner::krr:
            out.policy = krr_dtr_train(data, problem, c, params, &out.stats);
            break;
        case Learner::dkrr: {
            WorkerPool pool = WorkerPool::random(data.size(), m, partition_rng, threads);
            out.policy = dkrr_dtr_run(data, problem, c, params, pool).policy;
            out.stats = pool.stats();
            break;
        }
        case Learner::skrr: {
            // Single machine on the first worker's share of a random partition.
            const auto parts = random_partition(data.size(), m, partition_rng);
            std::vector<Trajectory> subset;
            subset.reserve(parts.front().size());
            for (std::size_t i : parts.front()) subset.push_back(data[i]);
            out.policy = krr_dtr_train(subset, problem, c, params, &out.stats);
            out.policy.set_learner("skrr");
            break;
        }
        case Learner::fixed:
            throw InputError("fixed policies are not trained");
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

// ---------------------------------------------------------------------------
// Grid search

struct GridCell {
    double lambda = 0.0;
    double sigma = 0.0;
    double metric = 0.0;
    bool ok = false;
    std::string error;
};

struct GridResult {
    KernelParams best;
    double best_metric = 0.0;
    std::vector<GridCell> cells;  ///< lambda-major, in grid order
};

/// Strictly better, or equal with larger lambda, or equal lambda and larger sigma.
inline bool grid_better(const GridCell& a, const GridCell& b) {
    if (a.metric != b.metric) return a.metric > b.metric;
    if (a.lambda != b.lambda) return a.lambda > b.lambda;
    return a.sigma > b.sigma;
}

/// Picks the best cell among those that trained. Throws when none did.
inline GridResult select_best(std::vector<GridCell> cells) {
    GridResult r;
    const GridCell* best = nullptr;
    for (const auto& cell : cells)
        if (cell.ok && (!best || grid_better(cell, *best))) best = &cell;
    if (!best) {
        std::string why = cells.empty() ? "empty grid" : cells.front().error;
        throw NumericalError("every grid cell failed; first error: " + why);
    }
    r.best = {best->sigma, best->lambda};
    r.best_metric = best->metric;
    r.cells = std::move(cells);
    return r;
}

/// Trains on one cohort from the grid branch and scores every (lambda,
/// sigma) cell on a validation cohort of n_eval patients from its own
/// branch. The validation cohort is regenerated from the same stream for
/// each cell, so cells are compared on identical patients, and it never
/// coincides with any trial's evaluation cohort.
inline GridResult grid_search(const ExperimentConfig& c, const std::vector<double>& lambdas,
                              const std::vector<double>& sigmas) {
    if (!is_kernel_learner(c.learner)) throw ConfigError("grid search needs a kernel learner (krr, dkrr or skrr)");
    if (lambdas.empty() || sigmas.empty()) throw ConfigError("grid search needs nonempty lambda and sigma grids");
    const SplitMix64 g = grid_stream(c.seed);
    const DtrProblem problem = problem_for(c.simulator);
    const auto train = simulate(c.simulator, c.n_train, nullptr, g.split("train"));
    const std::size_t m = c.m.front();

    std::vector<GridCell> cells;
    for (double l : lambdas)
        for (double s : sigmas) cells.push_back(GridCell{l, s, 0.0, false, {}});
    parallel_for(cells.size(), c.threads, [&](std::size_t k) {
        auto& cell = cells[k];
        try {
            const Trained tr = train_learner(c.learner, train, problem, c.fcase, {cell.sigma, cell.lambda}, m,
                                             g.split("partition"));
            const auto cohort = rollout(tr.policy, c.simulator, c.n_eval, g.split("validation"));
            const auto metrics = cohort_metrics(c.simulator, cohort);
            cell.metric = metrics[0];  // survival or csp
            cell.ok = std::isfinite(cell.metric);
            if (!cell.ok) cell.error = "non-finite metric";
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
        }
    });
    return select_best(std::move(cells));
}

inline GridResult grid_search(const ExperimentConfig& c) { return grid_search(c, config_lambdas(c), config_sigmas(c)); }

inline CsvTable grid_table(const GridResult& r) {
    CsvTable t({"lambda", "sigma", "metric", "ok", "best", "error"});
    for (const auto& cell : r.cells) {
        const bool best = cell.ok && cell.lambda == r.best.lambda && cell.sigma == r.best.sigma &&
                          cell.metric == r.best_metric;
        std::string err = cell.error;
        for (char& ch : err)
            if (ch == ',' || ch == '\n') ch = ';';
        t.add({format_real(cell.lambda), format_real(cell.sigma), cell.ok ? format_real(cell.metric) : "nan",
               cell.ok ? "1" : "0", best ? "1" : "0", err});
    }
    return t;
}

// ---------------------------------------------------------------------------
// Repeated trials

/// Result of running one learner configuration over all trials.
struct TrialSeries {
    std::string label;  ///< e.g. "krr", "dkrr_m10", "fixed_AAB"
    Learner learner = Learner::krr;
    std::size_t m = 1;
    std::optional<KernelParams> params;
    EvalReport report;
    std::vector<double> train_seconds;  ///< per trial
    std::optional<Trained> first;       ///< trial 0's policy and stats (trained learners)
    std::vector<Trajectory> first_train;  ///< trial 0's training cohort (when kept)
    double critical_flops = 0.0;          ///< trial 0, along the critical path
};

inline std::string series_label(Learner l, std::size_t m) {
    if (l == Learner::dkrr || l == Learner::skrr) return std::string(to_string(l)) + "_m" + std::to_string(m);
    return std::string(to_string(l));
}

/// Fresh training and evaluation cohorts per trial (see the seed layout).
inline TrialSeries run_trials(const ExperimentConfig& c, Learner learner, std::size_t m, const KernelParams& params,
                              bool keep_first_train = false) {
    if (learner == Learner::fixed) throw InputError("use run_fixed_trials for fixed policies");
    const DtrProblem problem = problem_for(c.simulator);
    TrialSeries s;
    s.label = series_label(learner, m);
    s.learner = learner;
    s.m = m;
    if (is_kernel_learner(learner)) s.params = params;
    s.train_seconds.assign(c.repeats, 0.0);
    std::vector<std::optional<Trained>> first(1);
    s.report = repeated_trials(
        metric_names(c.simulator), c.repeats, SplitMix64(c.seed).split("trials"),
        [&](std::size_t i, const SplitMix64& rng) {
            auto train = simulate(c.simulator, c.n_train, nullptr, rng.split("train"));
            Trained tr = train_learner(learner, train, problem, c.fcase, params, m, rng.split("partition"));
            const auto cohort = rollout(tr.policy, c.simulator, c.n_eval, rng.split("eval"));
            s.train_seconds[i] = tr.seconds;
            if (i == 0) {
                first[0] = std::move(tr);
                if (keep_first_train) s.first_train = std::move(train);
            }
            return cohort_metrics(c.simulator, cohort);
        },
        c.threads);
    s.report.fingerprint = config_fingerprint(c);
    s.first = std::move(first[0]);
    if (s.first) s.critical_flops = critical_path_flops(s.first->stats);
    return s;
}

/// Fixed policy evaluated on each trial's evaluation cohort.
inline TrialSeries run_fixed_trials(const ExperimentConfig& c, const FixedPolicy& policy) {
    TrialSeries s;
    s.label = "fixed_" + policy.name();
    s.learner = Learner::fixed;
    s.m = 0;
    s.train_seconds.assign(c.repeats, 0.0);
    s.report = repeated_trials(
        metric_names(c.simulator), c.repeats, SplitMix64(c.seed).split("trials"),
        [&](std::size_t, const SplitMix64& rng) {
            return cohort_metrics(c.simulator, rollout(policy, c.simulator, c.n_eval, rng.split("eval")));
        },
        c.threads);
    s.report.fingerprint = config_fingerprint(c);
    return s;
}

/// Evaluates a saved policy with the same cohort layout as run_trials.
inline EvalReport evaluate_policy(const ExperimentConfig& c, const TreatmentPolicy& policy) {
    EvalReport r = repeated_trials(
        metric_names(c.simulator), c.repeats, SplitMix64(c.seed).split("trials"),
        [&](std::size_t, const SplitMix64& rng) {
            return cohort_metrics(c.simulator, rollout(policy, c.simulator, c.n_eval, rng.split("eval")));
        },
        c.threads);
    r.fingerprint = config_fingerprint(c);
    return r;
}

// ---------------------------------------------------------------------------
// Summary tables

inline CsvTable summary_table_for(SimKind sim) {
    std::vector<std::string> h{"series", "learner", "case", "m", "lambda", "sigma", "n_train", "repeats"};
    for (const auto& name : metric_names(sim)) {
        h.push_back(name + "_mean");
        h.push_back(name + "_std");
    }
    h.push_back("critical_flops");
    h.push_back("train_seconds");
    return CsvTable(h);
}

inline void add_summary_row(CsvTable& t, const ExperimentConfig& c, const TrialSeries& s) {
    std::vector<std::string> row{s.label,
                                 std::string(to_string(s.learner)),
                                 s.learner == Learner::fixed ? "-" : std::string(to_string(c.fcase)),
                                 std::to_string(s.m),
                                 s.params ? format_real(s.params->lambda) : "-",
                                 s.params ? format_real(s.params->sigma) : "-",
                                 s.learner == Learner::fixed ? "0" : std::to_string(c.n_train),
                                 std::to_string(c.repeats)};
    for (std::size_t k = 0; k < s.report.metrics.size(); ++k) {
        row.push_back(format_real(s.report.mean[k]));
        row.push_back(format_real(s.report.stddev[k]));
    }
    row.push_back(format_real(s.critical_flops));
    double secs = 0.0;
    for (double v : s.train_seconds) secs += v;
    row.push_back(format_real(s.train_seconds.empty() ? 0.0 : secs / static_cast<double>(s.train_seconds.size())));
    t.add(std::move(row));
}

// ---------------------------------------------------------------------------
// Complexity report

struct ComplexityRow {
    std::size_t m = 1;
    double omega = 0.0;
};

struct ComplexityReport {
    std::vector<ComplexityRow> rows;
    double m_star = 0.0;
    std::size_t argmin = 1;  ///< m in the list with the smallest Omega (first on ties)
};

inline ComplexityReport complexity_report(const ComplexityInputs& in, const std::vector<std::size_t>& m_list) {
    if (m_list.empty()) throw InputError("complexity report needs at least one m");
    ComplexityReport r;
    r.m_star = optimal_workers(in);
    for (std::size_t m : m_list) {
        const double omega = training_complexity(in, static_cast<double>(m));
        if (r.rows.empty() || omega < training_complexity(in, static_cast<double>(r.argmin))) r.argmin = m;
        r.rows.push_back({m, omega});
    }
    return r;
}

inline CsvTable complexity_table(const ComplexityReport& r) {
    CsvTable t({"m", "omega", "argmin"});
    for (const auto& row : r.rows)
        t.add({std::to_string(row.m), format_real(row.omega), row.m == r.argmin ? "1" : "0"});
    return t;
}

/// Instrumented distributed training for each m on one cohort: nominal
/// critical-path flops next to the cost model.
struct FlopSweepRow {
    std::size_t m = 1;
    double critical_flops = 0.0;
    double total_flops = 0.0;
    double entries_sent = 0.0;
    double omega = 0.0;
    double train_seconds = 0.0;
};

inline std::vector<FlopSweepRow> flop_sweep(const ExperimentConfig& c, const KernelParams& params,
                                            const std::vector<std::size_t>& m_list) {
    const DtrProblem problem = problem_for(c.simulator);
    const SplitMix64 rng = trial_stream(c.seed, 0);
    const auto train = simulate(c.simulator, c.n_train, nullptr, rng.split("train"));
    const auto inputs = complexity_inputs(problem, c.fcase, static_cast<double>(c.n_train));
    std::vector<FlopSweepRow> out(m_list.size());
    parallel_for(m_list.size(), c.threads, [&](std::size_t k) {
        const Trained tr = train_learner(Learner::dkrr, train, problem, c.fcase, params, m_list[k], rng.split("partition"));
        FlopSweepRow row;
        row.m = m_list[k];
        row.critical_flops = critical_path_flops(tr.stats);
        for (const auto& s : tr.stats) {
            row.total_flops += s.flops;
            row.entries_sent += s.entries_sent;
        }
        row.omega = training_complexity(inputs, static_cast<double>(m_list[k]));
        row.train_seconds = tr.seconds;
        out[k] = row;
    });
    return out;
}

inline CsvTable flop_sweep_table(const std::vector<FlopSweepRow>& rows) {
    CsvTable t({"m", "critical_flops", "total_flops", "entries_sent", "omega", "train_seconds"});
    for (const auto& r : rows)
        t.add({std::to_string(r.m), format_real(r.critical_flops), format_real(r.total_flops), format_real(r.entries_sent),
               format_real(r.omega), format_real(r.train_seconds)});
    return t;
}

// ---------------------------------------------------------------------------
// Whole experiments

/// One line of a suite: a learner at a worker count. Learner::fixed
/// expands to every fixed policy in the config.
struct SeriesSpec {
    Learner learner = Learner::krr;
    std::size_t m = 1;
};

/// Hyperparameters for the kernel series of `c`: the single configured
/// cell, or the grid-search winner (grid table saved to `grid_csv`).
inline KernelParams resolve_params(const ExperimentConfig& c, const std::filesystem::path& grid_csv) {
    const auto lambdas = config_lambdas(c);
    const auto sigmas = config_sigmas(c);
    if (lambdas.size() * sigmas.size() == 1) return {sigmas.front(), lambdas.front()};
    ExperimentConfig g = c;
    if (!is_kernel_learner(g.learner)) g.learner = Learner::krr;
    const GridResult r = grid_search(g, lambdas, sigmas);
    grid_table(r).save(grid_csv);
    return r.best;
}

/// Runs every spec with the same trial cohorts and writes, under c.out:
///   config.txt                  the effective config
///   data/train_trial0.ndjson    trial 0 training cohort (when a learner is trained)
///   policies/<series>.json      trial 0 policy per trained series
///   reports/<series>.csv|.json  per-trial metrics and their summary
///   timing/<series>.csv         trial 0 stage/worker instrumentation
///   summary.csv                 one row per series
inline std::vector<TrialSeries> run_suite(const ExperimentConfig& c, const std::vector<SeriesSpec>& specs,
                                          const KernelParams& params) {
    validate(c);
    namespace fs = std::filesystem;
    const fs::path out = c.out;
    ensure_directory(out);
    write_file(out / "config.txt", emit_config(c));

    std::vector<TrialSeries> series;
    bool kept_data = false;
    for (const auto& spec : specs) {
        if (spec.learner == Learner::fixed) {
            for (const auto& fp : config_fixed_policies(c)) series.push_back(run_fixed_trials(c, fp));
        } else {
            series.push_back(run_trials(c, spec.learner, spec.m, params, !kept_data));
            kept_data = true;
        }
    }

    CsvTable summary = summary_table_for(c.simulator);
    for (const auto& s : series) {
        save_report(s.report, out / "reports" / (s.label + ".csv"), out / "reports" / (s.label + ".json"));
        if (s.first) {
            save_policy(s.first->policy, out / "policies" / (s.label + ".json"));
            timing_table(s.first->stats).save(out / "timing" / (s.label + ".csv"));
        }
        if (!s.first_train.empty()) save_trajectories(s.first_train, out / "data" / "train_trial0.ndjson");
        add_summary_row(summary, c, s);
    }
    summary.save(out / "summary.csv");
    return series;
}

/// The configured learner over every m in the config (dkrr, skrr) or once.
/// Kernel hyperparameters come from resolve_params; grid.csv is written
/// when a grid was searched.
inline std::vector<TrialSeries> run_experiment(const ExperimentConfig& c) {
    validate(c);
    std::vector<SeriesSpec> specs;
    if (c.learner == Learner::dkrr || c.learner == Learner::skrr)
        for (std::size_t m : c.m) specs.push_back({c.learner, m});
    else
        specs.push_back({c.learner, 1});
    KernelParams params;
    if (is_kernel_learner(c.learner)) params = resolve_params(c, std::filesystem::path(c.out) / "grid.csv");
    return run_suite(c, specs, params);
}

}  // namespace dkql

#endif  // DKQL_EXPERIMENT_HPP
