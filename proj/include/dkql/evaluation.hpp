#ifndef DKQL_EVALUATION_HPP
#define DKQL_EVALUATION_HPP

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "dkql/parallel.hpp"
#include "dkql/simulate.hpp"

namespace dkql {

/// Same treatment at every stage: an A/B sequence for sim1, a constant
/// dose for sim2. A sim2 dose outside a stage's action set (stage 1 only
/// allows 0.51 and up) is replaced by the nearest allowed dose.
class FixedPolicy : public TreatmentPolicy {
public:
    /// sim1 sequence, e.g. "AAB".
    static FixedPolicy sim1_sequence(const std::string& seq) {
        if (seq.size() != static_cast<std::size_t>(sim1::kMaxStages))
            throw InputError("sim1 fixed policy needs " + std::to_string(sim1::kMaxStages) + " treatments, got '" + seq + "'");
        FixedPolicy p;
        p.sim_ = SimKind::sim1;
        p.name_ = seq;
        const ActionSet set = sim1::action_set();
        for (char c : seq) p.sim1_actions_.push_back(set.index_of_label(std::string(1, c)));
        return p;
    }

    static FixedPolicy sim2_dose(double dose) {
        if (!(dose > 0.0 && dose <= 1.0)) throw InputError("sim2 dose must be in (0, 1]");
        FixedPolicy p;
        p.sim_ = SimKind::sim2;
        p.dose_ = dose;
        char buf[32];
        std::snprintf(buf, sizeof buf, "dose%.2f", dose);
        p.name_ = buf;
        return p;
    }

    /// The eight A/B sequences in lexicographic order.
    static std::vector<FixedPolicy> all_sim1() {
        std::vector<FixedPolicy> out;
        for (const char* s : {"AAA", "AAB", "ABA", "ABB", "BAA", "BAB", "BBA", "BBB"}) out.push_back(sim1_sequence(s));
        return out;
    }

    /// Doses 0.1, 0.2, ..., 1.0.
    static std::vector<FixedPolicy> all_sim2() {
        std::vector<FixedPolicy> out;
        for (int k = 1; k <= 10; ++k) out.push_back(sim2_dose(k / 10.0));
        return out;
    }

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] SimKind sim() const noexcept { return sim_; }

    std::vector<std::size_t> decide(int stage, std::span<const Trajectory* const> histories) const override {
        std::size_t a;
        if (sim_ == SimKind::sim1) {
            if (stage < 1 || stage > static_cast<int>(sim1_actions_.size())) throw InputError("stage outside fixed policy");
            a = sim1_actions_[static_cast<std::size_t>(stage - 1)];
        } else {
            a = sim2::stage_actions(stage).nearest(dose_);
        }
        return std::vector<std::size_t>(histories.size(), a);
    }

    void check_compatible(const DtrProblem& p) const override {
        if (p.sim != sim_) throw InputError("fixed policy " + name_ + " is for " + std::string(to_string(sim_)));
    }

private:
    SimKind sim_ = SimKind::sim1;
    std::vector<std::size_t> sim1_actions_;
    double dose_ = 0.0;
    std::string name_;
};

inline std::vector<Trajectory> rollout(const TreatmentPolicy& policy, SimKind sim, std::size_t n, const SplitMix64& rng) {
    return simulate(sim, n, &policy, rng);
}

/// Mean total survival (years) over sim1 patients.
inline double mean_survival_time(std::span<const Trajectory> data) {
    if (data.empty()) return 0.0;
    double s = 0.0;
    for (const auto& tr : data) {
        if (tr.sim != SimKind::sim1) throw InputError("mean_survival_time expects sim1 trajectories");
        s += tr.total_reward();
    }
    return s / static_cast<double>(data.size());
}

struct SurvivalMetrics {
    double csp = 0.0;  ///< fraction alive at the end
    double ccp = 0.0;  ///< fraction alive and cured
    double tep = 0.0;  ///< fraction alive and not cured
};

inline SurvivalMetrics csp_metrics(std::span<const Trajectory> data) {
    SurvivalMetrics out;
    if (data.empty()) return out;
    std::size_t cured = 0;
    std::size_t uncured = 0;
    for (const auto& tr : data) {
        if (tr.sim != SimKind::sim2) throw InputError("csp_metrics expects sim2 trajectories");
        if (tr.termination == Termination::Cured)
            ++cured;
        else if (tr.termination != Termination::Death)
            ++uncured;
    }
    const auto n = static_cast<double>(data.size());
    out.ccp = static_cast<double>(cured) / n;
    out.tep = static_cast<double>(uncured) / n;
    out.csp = out.ccp + out.tep;
    return out;
}

/// Metric names reported for each simulator.
inline std::vector<std::string> metric_names(SimKind sim) {
    if (sim == SimKind::sim1) return {"survival"};
    return {"csp", "ccp", "tep"};
}

inline std::vector<double> cohort_metrics(SimKind sim, std::span<const Trajectory> cohort) {
    if (sim == SimKind::sim1) return {mean_survival_time(cohort)};
    const auto m = csp_metrics(cohort);
    return {m.csp, m.ccp, m.tep};
}

struct EvalReport {
    std::vector<std::string> metrics;
    std::vector<std::vector<double>> per_trial;  ///< [trial][metric]
    std::vector<double> mean;
    std::vector<double> stddev;  ///< sample standard deviation across trials; 0 for one trial
    std::uint64_t seed = 0;
    std::string fingerprint;

    [[nodiscard]] std::size_t index_of(const std::string& metric) const {
        for (std::size_t k = 0; k < metrics.size(); ++k)
            if (metrics[k] == metric) return k;
        throw InputError("report has no metric '" + metric + "'");
    }
    [[nodiscard]] double mean_of(const std::string& metric) const { return mean[index_of(metric)]; }
    [[nodiscard]] std::vector<double> column(const std::string& metric) const {
        std::vector<double> out;
        const auto k = index_of(metric);
        for (const auto& row : per_trial) out.push_back(row[k]);
        return out;
    }
};

inline void summarize(EvalReport& r) {
    const std::size_t k = r.per_trial.size();
    r.mean.assign(r.metrics.size(), 0.0);
    r.stddev.assign(r.metrics.size(), 0.0);
    for (std::size_t j = 0; j < r.metrics.size(); ++j) {
        double s = 0.0;
        for (const auto& row : r.per_trial) s += row[j];
        const double mean = k ? s / static_cast<double>(k) : 0.0;
        double ss = 0.0;
        for (const auto& row : r.per_trial) ss += (row[j] - mean) * (row[j] - mean);
        r.mean[j] = mean;
        r.stddev[j] = k > 1 ? std::sqrt(ss / static_cast<double>(k - 1)) : 0.0;
    }
}

/// Runs `trial(i, rng.split(i))` for i in [0, k) and aggregates the metric
/// vectors it returns. Trials run on up to `threads` threads; the report
/// is assembled in trial order.
inline EvalReport repeated_trials(std::vector<std::string> metrics, std::size_t k, const SplitMix64& master,
                                  const std::function<std::vector<double>(std::size_t, const SplitMix64&)>& trial,
                                  unsigned threads = 1) {
    if (k < 1) throw InputError("repeated_trials needs at least one repeat");
    EvalReport r;
    r.metrics = std::move(metrics);
    r.seed = master.key();
    r.per_trial.resize(k);
    parallel_for(k, threads, [&](std::size_t i) {
        r.per_trial[i] = trial(i, master.split(i));
        if (r.per_trial[i].size() != r.metrics.size()) throw InputError("trial returned the wrong number of metrics");
    });
    summarize(r);
    return r;
}

}  // namespace dkql

#endif  // DKQL_EVALUATION_HPP
