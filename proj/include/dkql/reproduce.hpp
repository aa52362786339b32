#ifndef DKQL_REPRODUCE_HPP
#define DKQL_REPRODUCE_HPP

// Canned desk-scale versions of the comparison tables behind the
// published figures. Sample sizes, repeats, seed and threads come from the
// base config; simulator, case, learners and m lists are fixed per table.

#include <filesystem>
#include <string>
#include <vector>

#include "dkql/experiment.hpp"

namespace dkql {

/// Kernel hyperparameters used by the canned tables: grid-search winners
/// at N = 2000, n_eval = 1000, seed 777 (grid branch) over the default grids.
inline KernelParams desk_params(SimKind sim, FeatureCase c) {
    if (sim == SimKind::sim1) {
        switch (c) {
            case FeatureCase::SS: return {1.0, 1.0 / 16};
            case FeatureCase::MS: return {0.335982, 1.0 / 2048};
            case FeatureCase::MJ: return {1.0, 1.0 / 1024};
            case FeatureCase::NJ: return {0.695193, 1.0 / 2048};
        }
    }
    if (c == FeatureCase::NJ) return {2.33572, 1.0 / 128};
    return {0.78476, 1.0 / 4096};
}

inline const std::vector<std::string>& figure_names() {
    static const std::vector<std::string> names{"fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"};
    return names;
}

inline std::string figure_description(const std::string& fig) {
    if (fig == "fig3") return "sim1 M+J: fixed treatments, LS-DTR and KRR-DTR (survival, training time)";
    if (fig == "fig4" || fig == "fig6")
        return "sim1, all four feature cases: DKRR-DTR and S-KRR-DTR against m (survival, training time)";
    if (fig == "fig5" || fig == "fig7")
        return "sim1 M+J: LS-DTR, KRR-DTR and DKRR-DTR(m) bars, plus cost model and instrumented flops";
    if (fig == "fig8") return "sim2 M+J and N+J: fixed doses, LS-DTR and KRR-DTR (CSP, CCP, TEP)";
    if (fig == "fig9") return "sim2 M+J and N+J: DKRR-DTR and S-KRR-DTR against m";
    throw ConfigError("unknown figure '" + fig + "' (expected fig3 to fig9)");
}

namespace detail {

inline std::vector<SeriesSpec> sweep_specs(const std::vector<std::size_t>& ms) {
    std::vector<SeriesSpec> out;
    for (std::size_t m : ms) out.push_back({Learner::dkrr, m});
    for (std::size_t m : ms) out.push_back({Learner::skrr, m});
    return out;
}

/// Runs one suite per case under out/<case>/ and stacks the summaries.
inline void run_cases(ExperimentConfig c, const std::vector<FeatureCase>& cases,
                      const std::vector<SeriesSpec>& specs) {
    const std::filesystem::path root = c.out;
    std::string combined;
    for (FeatureCase fc : cases) {
        c.fcase = fc;
        c.out = (root / std::string(to_string(fc))).string();
        run_suite(c, specs, desk_params(c.simulator, fc));
        const std::string body = read_file(std::filesystem::path(c.out) / "summary.csv");
        combined += combined.empty() ? body : body.substr(body.find('\n') + 1);
    }
    write_file(root / "summary.csv", combined);
}

}  // namespace detail

/// Writes the table for `fig` under base.out/<fig>/.
inline void reproduce(const std::string& fig, ExperimentConfig base) {
    (void)figure_description(fig);
    base.out = (std::filesystem::path(base.out) / fig).string();
    base.lambda.clear();
    base.sigma.clear();
    base.fixed.clear();
    const std::vector<std::size_t> ms{1, 5, 10, 20, 50};
    for (std::size_t m : ms)
        if (m > base.n_train) throw ConfigError("n_train must be at least 50 for the m sweeps");

    if (fig == "fig3") {
        base.simulator = SimKind::sim1;
        detail::run_cases(base, {FeatureCase::MJ},
                          {{Learner::fixed, 0}, {Learner::ls, 1}, {Learner::krr, 1}});
    } else if (fig == "fig4" || fig == "fig6") {
        base.simulator = SimKind::sim1;
        detail::run_cases(base, {FeatureCase::SS, FeatureCase::MS, FeatureCase::MJ, FeatureCase::NJ},
                          detail::sweep_specs(ms));
    } else if (fig == "fig5" || fig == "fig7") {
        base.simulator = SimKind::sim1;
        base.fcase = FeatureCase::MJ;
        std::vector<SeriesSpec> specs{{Learner::ls, 1}, {Learner::krr, 1}};
        for (std::size_t m : ms)
            if (m > 1) specs.push_back({Learner::dkrr, m});
        detail::run_cases(base, {FeatureCase::MJ}, specs);

        const auto inputs = complexity_inputs(problem_for(base.simulator), base.fcase, static_cast<double>(base.n_train));
        std::vector<std::size_t> sweep;
        for (std::size_t m = 1; m <= 64 && m <= base.n_train; m *= 2) sweep.push_back(m);
        const auto report = complexity_report(inputs, sweep);
        complexity_table(report).save(std::filesystem::path(base.out) / "complexity.csv");
        write_file(std::filesystem::path(base.out) / "m_star.txt", format_real(report.m_star) + "\n");
        flop_sweep_table(flop_sweep(base, desk_params(base.simulator, base.fcase), sweep))
            .save(std::filesystem::path(base.out) / "flops.csv");
    } else if (fig == "fig8") {
        base.simulator = SimKind::sim2;
        detail::run_cases(base, {FeatureCase::MJ, FeatureCase::NJ},
                          {{Learner::fixed, 0}, {Learner::ls, 1}, {Learner::krr, 1}});
    } else if (fig == "fig9") {
        base.simulator = SimKind::sim2;
        detail::run_cases(base, {FeatureCase::MJ, FeatureCase::NJ}, detail::sweep_specs(ms));
    }
}

}  // namespace dkql

#endif  // DKQL_REPRODUCE_HPP
