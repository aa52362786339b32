// dkql: command-line driver for the experiments.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "dkql/dkql.hpp"

namespace fs = std::filesystem;
using namespace dkql;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

const char* const kCohortNote =
    "Cohorts: trial i trains on a fresh cohort and is scored on a separate\n"
    "evaluation cohort, both drawn from the seed branch trials/i. Grid search\n"
    "trains on its own cohort (branch grid/train) and scores every (lambda,\n"
    "sigma) cell on validation patients from branch grid/validation, so the\n"
    "hyperparameters never see a test cohort.";

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "experiment config (key = value lines)");
    app->add_option("--seed", c.seed, "master seed, overrides the config");
    app->add_option("--out", c.out, "output directory, overrides the config");
    app->add_option("--threads", c.threads, "worker threads, overrides the config")->check(CLI::PositiveNumber);
}

ExperimentConfig load(const Common& c) {
    ExperimentConfig cfg = c.config.empty() ? default_config(SimKind::sim1) : load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (c.out) cfg.out = *c.out;
    if (c.threads) cfg.threads = *c.threads;
    validate(cfg);
    return cfg;
}

void print_table(const CsvTable& t) { std::cout << t.str(); }

int cmd_generate(const Common& common) {
    const ExperimentConfig c = load(common);
    const auto data = simulate(c.simulator, c.n_train, nullptr, trial_stream(c.seed, 0).split("train"));
    const fs::path out = fs::path(c.out) / "dataset.ndjson";
    save_trajectories(data, out);
    write_file(fs::path(c.out) / "config.txt", emit_config(c));
    std::cout << "wrote " << data.size() << " " << to_string(c.simulator) << " trajectories to " << out.string() << "\n";
    return 0;
}

int cmd_train(const Common& common, const std::string& data_path) {
    const ExperimentConfig c = load(common);
    if (c.learner == Learner::fixed) throw ConfigError("train needs a trained learner (ls, krr, dkrr or skrr)");
    const DtrProblem problem = problem_for(c.simulator);
    const SplitMix64 rng = trial_stream(c.seed, 0);
    std::vector<Trajectory> data =
        data_path.empty() ? simulate(c.simulator, c.n_train, nullptr, rng.split("train")) : load_trajectories(data_path);
    for (const auto& tr : data)
        if (tr.sim != c.simulator) throw ConfigError("dataset simulator does not match the config");

    KernelParams params;
    if (is_kernel_learner(c.learner)) params = resolve_params(c, fs::path(c.out) / "grid.csv");
    const std::vector<std::size_t> ms =
        (c.learner == Learner::dkrr || c.learner == Learner::skrr) ? c.m : std::vector<std::size_t>{1};
    write_file(fs::path(c.out) / "config.txt", emit_config(c));
    for (std::size_t m : ms) {
        const Trained t = train_learner(c.learner, data, problem, c.fcase, params, m, rng.split("partition"), c.threads);
        const std::string label = series_label(c.learner, m);
        save_policy(t.policy, fs::path(c.out) / "policies" / (label + ".json"));
        timing_table(t.stats).save(fs::path(c.out) / "timing" / (label + ".csv"));
        std::printf("%s: trained on %zu trajectories in %.3f s", label.c_str(), data.size(), t.seconds);
        if (is_kernel_learner(c.learner)) std::printf(" (lambda %.6g, sigma %.6g)", params.lambda, params.sigma);
        std::printf("\n");
    }
    return 0;
}

int cmd_evaluate(const Common& common, const std::string& policy_path) {
    const ExperimentConfig c = load(common);
    CsvTable summary = summary_table_for(c.simulator);
    if (!policy_path.empty()) {
        const DtrPolicy p = load_policy(policy_path);
        if (p.problem().sim != c.simulator) throw ConfigError("policy simulator does not match the config");
        TrialSeries s;
        s.label = fs::path(policy_path).stem().string();
        s.learner = parse_learner(p.learner());
        s.report = evaluate_policy(c, p);
        s.train_seconds.clear();
        save_report(s.report, fs::path(c.out) / "reports" / (s.label + ".csv"),
                    fs::path(c.out) / "reports" / (s.label + ".json"));
        ExperimentConfig shown = c;
        shown.fcase = p.feature_case();
        add_summary_row(summary, shown, s);
    } else {
        if (c.learner != Learner::fixed)
            throw ConfigError("evaluate needs --policy, or learner = fixed in the config");
        for (const auto& fp : config_fixed_policies(c)) {
            const TrialSeries s = run_fixed_trials(c, fp);
            save_report(s.report, fs::path(c.out) / "reports" / (s.label + ".csv"),
                        fs::path(c.out) / "reports" / (s.label + ".json"));
            add_summary_row(summary, c, s);
        }
    }
    summary.save(fs::path(c.out) / "summary.csv");
    print_table(summary);
    return 0;
}

int cmd_run(const Common& common) {
    const ExperimentConfig c = load(common);
    const auto series = run_experiment(c);
    std::cout << read_file(fs::path(c.out) / "summary.csv");
    return 0;
}

int cmd_sweep_m(const Common& common) {
    ExperimentConfig c = load(common);
    std::vector<SeriesSpec> specs;
    for (std::size_t m : c.m) specs.push_back({Learner::dkrr, m});
    for (std::size_t m : c.m) specs.push_back({Learner::skrr, m});
    ExperimentConfig g = c;
    g.learner = Learner::krr;
    const KernelParams params = resolve_params(g, fs::path(c.out) / "grid.csv");
    c.learner = Learner::dkrr;
    run_suite(c, specs, params);
    std::cout << read_file(fs::path(c.out) / "summary.csv");
    return 0;
}

int cmd_grid_search(const Common& common) {
    ExperimentConfig c = load(common);
    if (!is_kernel_learner(c.learner)) c.learner = Learner::krr;
    const GridResult r = grid_search(c);
    grid_table(r).save(fs::path(c.out) / "grid.csv");
    std::size_t failed = 0;
    for (const auto& cell : r.cells) failed += cell.ok ? 0 : 1;
    std::printf("best lambda %s sigma %s %s %s (%zu cells, %zu failed)\n", format_real(r.best.lambda).c_str(),
                format_real(r.best.sigma).c_str(), target_metric(c.simulator).c_str(),
                format_real(r.best_metric).c_str(), r.cells.size(), failed);
    return 0;
}

int cmd_complexity(const Common& common, bool flops) {
    const ExperimentConfig c = load(common);
    const auto inputs = complexity_inputs(problem_for(c.simulator), c.fcase, static_cast<double>(c.n_train));
    const auto report = complexity_report(inputs, c.m);
    const CsvTable t = complexity_table(report);
    t.save(fs::path(c.out) / "complexity.csv");
    print_table(t);
    std::printf("m* = %s\n", format_real(report.m_star).c_str());
    if (flops) {
        const auto lambdas = config_lambdas(c);
        const auto sigmas = config_sigmas(c);
        const CsvTable ft = flop_sweep_table(flop_sweep(c, {sigmas.front(), lambdas.front()}, c.m));
        ft.save(fs::path(c.out) / "flops.csv");
        print_table(ft);
    }
    return 0;
}

int cmd_reproduce(const Common& common, const std::string& fig) {
    const ExperimentConfig c = load(common);
    std::cout << fig << ": " << figure_description(fig) << "\n";
    reproduce(fig, c);
    std::cout << read_file(fs::path(c.out) / fig / "summary.csv");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel-based distributed Q-learning for dynamic treatment regimes"};
    app.footer(kCohortNote);
    app.require_subcommand(1);

    Common common;
    std::string data_path;
    std::string policy_path;
    std::string figure;
    bool flops = false;

    auto* gen = app.add_subcommand("generate", "simulate n_train trajectories under uniform random treatment");
    auto* train = app.add_subcommand("train", "train the configured learner on one cohort and save the policy");
    train->add_option("--data", data_path, "train on this trajectory file instead of simulating")->check(CLI::ExistingFile);
    auto* eval = app.add_subcommand("evaluate", "score a saved policy, or the fixed treatments, over repeated cohorts");
    eval->add_option("--policy", policy_path, "policy file written by train")->check(CLI::ExistingFile);
    auto* run = app.add_subcommand("run", "full experiment: grid search if needed, repeated trials, all outputs");
    auto* sweep = app.add_subcommand("sweep-m", "DKRR-DTR and S-KRR-DTR for every m in the config");
    auto* grid = app.add_subcommand("grid-search", "score every (lambda, sigma) cell on validation cohorts");
    auto* cx = app.add_subcommand("complexity", "cost model Omega(m) for every m in the config, and m*");
    cx->add_flag("--flops", flops, "also run instrumented distributed training for each m");
    auto* rep = app.add_subcommand("reproduce", "canned desk-scale tables (fig3 to fig9)");
    rep->add_option("figure", figure, "fig3, fig4, fig5, fig6, fig7, fig8 or fig9")
        ->required()
        ->check(CLI::IsMember(figure_names()));
    for (auto* sub : {gen, train, eval, run, sweep, grid, cx, rep}) {
        add_common(sub, common);
        sub->footer(kCohortNote);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (gen->parsed()) return cmd_generate(common);
        if (train->parsed()) return cmd_train(common, data_path);
        if (eval->parsed()) return cmd_evaluate(common, policy_path);
        if (run->parsed()) return cmd_run(common);
        if (sweep->parsed()) return cmd_sweep_m(common);
        if (grid->parsed()) return cmd_grid_search(common);
        if (cx->parsed()) return cmd_complexity(common, flops);
        if (rep->parsed()) return cmd_reproduce(common, figure);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InputError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
