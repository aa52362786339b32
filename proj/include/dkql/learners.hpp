#ifndef DKQL_LEARNERS_HPP
#define DKQL_LEARNERS_HPP

#include <chrono>
#include <span>
#include <string>
#include <vector>

#include "dkql/features.hpp"
#include "dkql/policy.hpp"

namespace dkql {

/// Per-(stage, worker) instrumentation. Single-machine learners report
/// worker 0; in distributed runs worker == -1 is the synthesis step.
struct WorkerStats {
    int stage = 0;
    int worker = 0;
    double fit_seconds = 0.0;
    double predict_seconds = 0.0;
    double entries_sent = 0.0;
    double flops = 0.0;
    OpCounter ops;
};

/// y_t = r_t + max_a Q_{t+1}. At the last stage, and for trajectories that
/// end at stage t, the continuation is zero.
inline Vector stage_labels(const Vector& rewards, const Vector& next_stage_max_q) {
    if (rewards.size() != next_stage_max_q.size())
        throw InputError("stage_labels: " + std::to_string(rewards.size()) + " rewards but " +
                         std::to_string(next_stage_max_q.size()) + " continuation values");
    return rewards + next_stage_max_q;
}

/// Max over the stage's actions of the (possibly synthesized) Q-function.
inline Vector max_q_over_actions(const StagePolicy& sp, FeatureCase c, const Matrix& contexts,
                                 OpCounter* counter = nullptr) {
    return max_over_actions(stage_q_values(sp, c, contexts, counter));
}

namespace detail {

inline void check_training_input(std::span<const Trajectory> data, const DtrProblem& problem, FeatureCase c) {
    if (data.empty()) throw InputError("training data is empty");
    if (problem.horizon < 1 || problem.actions.size() != static_cast<std::size_t>(problem.horizon))
        throw InputError("problem must define one action set per stage");
    check_case(problem.sim, c);
    for (const auto& tr : data)
        if (tr.stage_count() > problem.horizon)
            throw InputError("trajectory " + std::to_string(tr.id) + " is longer than the horizon");
}

/// Indices of dataset rows that took each action.
inline std::vector<std::vector<Eigen::Index>> rows_by_action(const StageDataset& ds, std::size_t n_actions) {
    std::vector<std::vector<Eigen::Index>> by(n_actions);
    for (std::size_t r = 0; r < ds.actions.size(); ++r) {
        if (ds.actions[r] >= n_actions) throw InputError("recorded action outside the stage's action set");
        by[ds.actions[r]].push_back(static_cast<Eigen::Index>(r));
    }
    return by;
}

inline Matrix select_rows(const Matrix& X, const std::vector<Eigen::Index>& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), X.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = X.row(idx[k]);
    return out;
}

inline Vector select_rows(const Vector& v, const std::vector<Eigen::Index>& idx) {
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(idx[k]);
    return out;
}

/// Fits the stage model(s) on a labelled dataset with `fit(X, y, counter)`.
template <class Fit>
StagePolicy fit_stage(const StageDataset& ds, const ActionSet& actions, FeatureCase c, Fit&& fit,
                      OpCounter* counter = nullptr) {
    StagePolicy sp;
    sp.stage = ds.stage;
    sp.actions = actions;
    if (is_joint(c)) {
        sp.components.push_back({WeightedModel{fit(ds.inputs, ds.labels, counter), 1.0}});
    } else {
        const auto by = rows_by_action(ds, actions.size());
        for (std::size_t a = 0; a < actions.size(); ++a) {
            if (by[a].empty())
                throw InputError("no samples took action " + actions.labels[a] + " at stage " + std::to_string(ds.stage));
            sp.components.push_back(
                {WeightedModel{fit(select_rows(ds.inputs, by[a]), select_rows(ds.labels, by[a]), counter), 1.0}});
        }
    }
    return sp;
}

/// Backward induction with one model fit per stage (or per stage and
/// action) on all active rows. Appends one worker-0 row per stage to
/// `stats` when given.
template <class Fit>
DtrPolicy backward_fit(std::span<const Trajectory> data, const DtrProblem& problem, FeatureCase c, std::string learner,
                       Fit&& fit, std::vector<WorkerStats>* stats = nullptr) {
    using clock = std::chrono::steady_clock;
    check_training_input(data, problem, c);
    DtrPolicy policy(problem, c, std::move(learner));
    // continuation[i]: max_a Q_{t+1} for trajectory i, zero when it has no stage t+1.
    std::vector<double> continuation(data.size(), 0.0);
    for (int t = problem.horizon; t >= 1; --t) {
        WorkerStats ws;
        ws.stage = t;
        const auto start = clock::now();
        StageDataset ds = build_features(data, t, c, problem.sim);
        if (ds.row_ids.empty()) throw InputError("no trajectory reaches stage " + std::to_string(t));
        Vector next(static_cast<Eigen::Index>(ds.row_ids.size()));
        for (std::size_t r = 0; r < ds.row_ids.size(); ++r) next(static_cast<Eigen::Index>(r)) = continuation[ds.row_ids[r]];
        ds.labels = stage_labels(ds.rewards, next);

        StagePolicy sp = fit_stage(ds, problem.action_set(t), c, fit, &ws.ops);
        const auto fitted = clock::now();

        std::fill(continuation.begin(), continuation.end(), 0.0);
        if (t > 1) {
            std::vector<const Trajectory*> ptrs;
            for (std::size_t i : ds.row_ids) ptrs.push_back(&data[i]);
            const Vector maxq = max_q_over_actions(sp, c, build_contexts(ptrs, t, problem.sim, c), &ws.ops);
            for (std::size_t r = 0; r < ds.row_ids.size(); ++r) continuation[ds.row_ids[r]] = maxq(static_cast<Eigen::Index>(r));
        }
        policy.set_stage(std::move(sp));
        if (stats) {
            ws.fit_seconds = std::chrono::duration<double>(fitted - start).count();
            ws.predict_seconds = std::chrono::duration<double>(clock::now() - fitted).count();
            ws.flops = ws.ops.total();
            stats->push_back(ws);
        }
    }
    return policy;
}

}  // namespace detail

/// Batch kernel ridge regression Q-learning.
inline DtrPolicy krr_dtr_train(std::span<const Trajectory> data, const DtrProblem& problem, FeatureCase c,
                               const KernelParams& params, std::vector<WorkerStats>* stats = nullptr) {
    params.validate();
    return detail::backward_fit(
        data, problem, c, "krr",
        [&](const Matrix& X, const Vector& y, OpCounter* counter) -> Regressor { return krr_fit(X, y, params, counter); },
        stats);
}

/// Linear least-squares Q-learning baseline.
inline DtrPolicy ls_dtr_train(std::span<const Trajectory> data, const DtrProblem& problem, FeatureCase c,
                              std::vector<WorkerStats>* stats = nullptr) {
    return detail::backward_fit(
        data, problem, c, "ls", [](const Matrix& X, const Vector& y, OpCounter*) -> Regressor { return linear_fit(X, y); },
        stats);
}

}  // namespace dkql

#endif  // DKQL_LEARNERS_HPP
