#include <gtest/gtest.h>

#include <filesystem>

#include "dkql/dkql.hpp"

using namespace dkql;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dkql_test_exp_" + name);
    fs::remove_all(p);
    return p;
}

ExperimentConfig small(SimKind sim, const fs::path& out) {
    ExperimentConfig c = default_config(sim);
    c.n_train = 120;
    c.n_eval = 150;
    c.repeats = 3;
    c.lambda = {0.01};
    c.sigma = {0.5};
    c.seed = 5;
    c.out = out.string();
    return c;
}

/// CSV text with every *_seconds column blanked.
std::string mask_seconds(const std::string& csv) {
    auto rows = parse_csv(csv);
    if (rows.empty()) return csv;
    std::vector<bool> timed;
    for (const auto& h : rows[0]) timed.push_back(h.size() > 8 && h.substr(h.size() - 8) == "_seconds");
    std::string out;
    for (auto& r : rows) {
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (k < timed.size() && timed[k] && &r != &rows[0]) r[k] = "*";
            out += (k ? "," : "") + r[k];
        }
        out += "\n";
    }
    return out;
}

std::map<std::string, std::string> csv_bodies(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.path().extension() == ".csv")
            out[fs::relative(e.path(), root).string()] = mask_seconds(read_file(e.path()));
    return out;
}

}  // namespace

TEST(LambdaGrid, Sim1) {
    const auto g = lambda_grid(10000, SimKind::sim1);
    ASSERT_EQ(g.size(), 15u);
    EXPECT_EQ(g.front(), 1.0);
    EXPECT_EQ(g.back(), std::ldexp(1.0, -14));
    EXPECT_EQ(lambda_grid(1, SimKind::sim1), std::vector<double>{1.0});
}

TEST(LambdaGrid, Sim2) {
    const auto g = lambda_grid(20000, SimKind::sim2);
    ASSERT_EQ(g.size(), 10u);
    EXPECT_EQ(g.front(), std::ldexp(1.0, -8));
    EXPECT_EQ(g.back(), std::ldexp(1.0, -17));
    EXPECT_THROW(lambda_grid(0, SimKind::sim2), ConfigError);
}

TEST(SigmaGrid, Examples) {
    const auto g = sigma_grid(0.001, 1.0, 20);
    ASSERT_EQ(g.size(), 20u);
    EXPECT_EQ(g.front(), 0.001);
    EXPECT_EQ(g.back(), 1.0);
    const double ratio = std::pow(1000.0, 1.0 / 19.0);
    for (std::size_t k = 1; k < g.size(); ++k) EXPECT_NEAR(g[k] / g[k - 1], ratio, 1e-12);
    EXPECT_EQ(sigma_grid(1, 1, 1), std::vector<double>{1.0});
    const auto h = sigma_grid(0.01, 10, 20);
    EXPECT_LT(h[9], std::sqrt(0.1));
    EXPECT_GT(h[10], std::sqrt(0.1));
    EXPECT_NEAR(std::sqrt(h[9] * h[10]), std::sqrt(0.1), 1e-12);
    EXPECT_THROW(sigma_grid(0, 1, 5), ConfigError);
    EXPECT_THROW(sigma_grid(1, 2, 1), ConfigError);
}

TEST(GridSearch, TieRulePrefersStrongerRegularization) {
    const std::vector<GridCell> cells{{0.1, 0.5, 3.0, true, ""},
                                      {0.2, 0.5, 3.0, true, ""},
                                      {0.2, 0.9, 3.0, true, ""},
                                      {0.4, 0.1, 2.9, true, ""},
                                      {1.0, 1.0, 9.0, false, "failed"}};
    const GridResult r = select_best(cells);
    EXPECT_EQ(r.best.lambda, 0.2);
    EXPECT_EQ(r.best.sigma, 0.9);
    EXPECT_EQ(r.best_metric, 3.0);
    auto dup = cells;
    dup.push_back(dup[2]);
    const GridResult d = select_best(dup);
    EXPECT_EQ(d.best, r.best);
    EXPECT_THROW(select_best(std::vector<GridCell>{GridCell{1.0, 1.0, 0.0, false, "x"}}), NumericalError);
}

TEST(GridSearch, SingleCell) {
    ExperimentConfig c = small(SimKind::sim1, scratch("single"));
    const GridResult r = grid_search(c);
    ASSERT_EQ(r.cells.size(), 1u);
    EXPECT_EQ(r.best, (KernelParams{0.5, 0.01}));
    EXPECT_TRUE(r.cells[0].ok);
    EXPECT_EQ(r.best_metric, r.cells[0].metric);
}

TEST(GridSearch, DegenerateWidthDoesNotWin) {
    ExperimentConfig c = small(SimKind::sim1, scratch("degenerate"));
    c.n_train = 300;
    c.n_eval = 500;
    const GridResult r = grid_search(c, {0.01}, {1e-6, 0.3});
    ASSERT_EQ(r.cells.size(), 2u);
    for (const auto& cell : r.cells)
        if (cell.sigma == 1e-6) EXPECT_LE(cell.metric, r.best_metric);
    const auto rows = parse_csv(grid_table(r).str());
    EXPECT_EQ(rows[0][0], "lambda");
    EXPECT_EQ(rows.size(), 3u);
}

TEST(GridSearch, ValidationCohortsAreSharedAcrossCells) {
    ExperimentConfig c = small(SimKind::sim2, scratch("crn"));
    c.learner = Learner::krr;
    const GridResult a = grid_search(c, {0.01, 0.01}, {0.5});
    EXPECT_EQ(a.cells[0].metric, a.cells[1].metric);
}

TEST(Experiment, FixedConfigWritesNoTrainingArtifacts) {
    const fs::path out = scratch("fixed");
    ExperimentConfig c = small(SimKind::sim1, out);
    c.learner = Learner::fixed;
    c.fixed = {"AAA", "BBB"};
    const auto series = run_experiment(c);
    ASSERT_EQ(series.size(), 2u);
    EXPECT_FALSE(fs::exists(out / "policies"));
    EXPECT_FALSE(fs::exists(out / "data"));
    EXPECT_FALSE(fs::exists(out / "timing"));
    EXPECT_FALSE(fs::exists(out / "grid.csv"));
    EXPECT_TRUE(fs::exists(out / "reports" / "fixed_AAA.csv"));
    EXPECT_TRUE(fs::exists(out / "reports" / "fixed_BBB.json"));
    EXPECT_EQ(parse_csv(read_file(out / "summary.csv")).size(), 3u);
    fs::remove_all(out);
}

TEST(Experiment, DistributedSweepWritesOnePolicyPerM) {
    const fs::path out = scratch("sweep");
    ExperimentConfig c = small(SimKind::sim1, out);
    c.learner = Learner::dkrr;
    c.m = {1, 5, 10};
    const auto series = run_experiment(c);
    ASSERT_EQ(series.size(), 3u);
    for (const char* label : {"dkrr_m1", "dkrr_m5", "dkrr_m10"}) {
        EXPECT_TRUE(fs::exists(out / "policies" / (std::string(label) + ".json"))) << label;
        EXPECT_TRUE(fs::exists(out / "timing" / (std::string(label) + ".csv"))) << label;
    }
    const auto summary = parse_csv(read_file(out / "summary.csv"));
    ASSERT_EQ(summary.size(), 4u);
    EXPECT_EQ(summary[3][0], "dkrr_m10");
    EXPECT_EQ(summary[3][3], "10");
    EXPECT_TRUE(fs::exists(out / "data" / "train_trial0.ndjson"));
    EXPECT_EQ(load_trajectories(out / "data" / "train_trial0.ndjson").size(), c.n_train);
    EXPECT_EQ(load_config(out / "config.txt"), c);
    fs::remove_all(out);
}

TEST(Experiment, RerunGivesIdenticalCsvBodies) {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    ExperimentConfig c = small(SimKind::sim2, a);
    c.learner = Learner::dkrr;
    c.m = {1, 3};
    c.lambda = {0.01, 0.001};
    c.sigma = {0.3, 1.0};
    c.threads = 2;
    run_experiment(c);
    c.out = b.string();
    c.threads = 1;
    run_experiment(c);
    const auto x = csv_bodies(a), y = csv_bodies(b);
    EXPECT_EQ(x.size(), y.size());
    EXPECT_TRUE(x.count("grid.csv"));
    for (const auto& [name, body] : x) {
        if (name == "config.txt") continue;
        EXPECT_EQ(body, y.at(name)) << name;
    }
    EXPECT_EQ(read_file(a / "policies" / "dkrr_m3.json"), read_file(b / "policies" / "dkrr_m3.json"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(ExperimentInvariant, SingleMachineSubsetLearnerRunsFromConfig) {
    const fs::path out = scratch("skrr");
    ExperimentConfig c = parse_config("learner = skrr\nn_train = 120\nn_eval = 100\nrepeats = 2\nm = 1, 4\n"
                                      "lambda = 0.01\nsigma = 0.5\nout = " +
                                      out.string() + "\n");
    const auto series = run_experiment(c);
    ASSERT_EQ(series.size(), 2u);
    EXPECT_EQ(series[1].label, "skrr_m4");
    ASSERT_TRUE(series[1].first);
    EXPECT_EQ(series[1].first->policy.learner(), "skrr");
    for (const auto& s : series[1].first->stats) EXPECT_NEAR(s.ops.factor_flops, 30.0 * 30.0 * 30.0 / 3.0, 1e-6);
    EXPECT_EQ(policy_from_json(nlohmann::json::parse(read_file(out / "policies" / "skrr_m4.json"))).learner(), "skrr");
    fs::remove_all(out);
}

TEST(Experiment, TrialCohortsFollowTheSeedLayout) {
    ExperimentConfig c = small(SimKind::sim1, scratch("crn_trials"));
    const auto s = run_trials(c, Learner::krr, 1, {0.5, 0.01}, true);
    const auto expected = simulate(c.simulator, c.n_train, nullptr, trial_stream(c.seed, 0).split("train"));
    EXPECT_EQ(trajectories_to_ndjson(s.first_train), trajectories_to_ndjson(expected));
    const auto f1 = run_fixed_trials(c, FixedPolicy::sim1_sequence("ABA"));
    const auto f2 = evaluate_policy(c, FixedPolicy::sim1_sequence("ABA"));
    EXPECT_EQ(f1.report.per_trial, f2.per_trial);
    EXPECT_THROW(run_trials(c, Learner::fixed, 1, {0.5, 0.01}), InputError);
}

TEST(Experiment, ResolveParamsSearchesWhenNeeded) {
    const fs::path out = scratch("resolve");
    ExperimentConfig c = small(SimKind::sim1, out);
    EXPECT_EQ(resolve_params(c, out / "grid.csv"), (KernelParams{0.5, 0.01}));
    EXPECT_FALSE(fs::exists(out / "grid.csv"));
    c.sigma = {0.2, 0.5};
    c.learner = Learner::ls;
    const KernelParams p = resolve_params(c, out / "grid.csv");
    EXPECT_TRUE(fs::exists(out / "grid.csv"));
    EXPECT_EQ(p.lambda, 0.01);
    fs::remove_all(out);
}

TEST(Experiment, ComplexityReportAndFlopSweep) {
    ExperimentConfig c = small(SimKind::sim1, scratch("flops"));
    const auto rows = flop_sweep(c, {0.5, 0.01}, {1, 2, 4});
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_GT(rows[0].critical_flops, rows[1].critical_flops);
    EXPECT_EQ(rows[0].entries_sent, 2.0 * 120 * 2);  // stages 3 and 2, one worker
    EXPECT_EQ(rows[1].omega, training_complexity(complexity_inputs(sim1::problem(), FeatureCase::MJ, 120), 2));
}

TEST(Reproduce, FigureNames) {
    EXPECT_EQ(figure_names().size(), 7u);
    EXPECT_THROW(figure_description("fig10"), ConfigError);
    ExperimentConfig c = default_config(SimKind::sim1);
    c.n_train = 20;
    EXPECT_THROW(reproduce("fig4", c), ConfigError);
}
