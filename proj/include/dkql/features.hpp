#ifndef DKQL_FEATURES_HPP
#define DKQL_FEATURES_HPP

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dkql/kernel.hpp"
#include "dkql/trajectory.hpp"

namespace dkql {

/// How stage inputs are built.
///   SS: wellness only, one model per action
///   MS: (wellness, previous reward), one model per action
///   MJ: current state and action, one joint model
///   NJ: all states and actions up to the current stage, one joint model
enum class FeatureCase { SS, MS, MJ, NJ };

inline std::string_view to_string(FeatureCase c) {
    switch (c) {
        case FeatureCase::SS: return "SS";
        case FeatureCase::MS: return "MS";
        case FeatureCase::MJ: return "MJ";
        case FeatureCase::NJ: return "NJ";
    }
    return "?";
}

inline FeatureCase parse_feature_case(std::string_view s) {
    if (s == "SS" || s == "S+S") return FeatureCase::SS;
    if (s == "MS" || s == "M+S") return FeatureCase::MS;
    if (s == "MJ" || s == "M+J") return FeatureCase::MJ;
    if (s == "NJ" || s == "N+J") return FeatureCase::NJ;
    throw InputError("unknown feature case '" + std::string(s) + "'");
}

[[nodiscard]] constexpr bool is_joint(FeatureCase c) noexcept { return c == FeatureCase::MJ || c == FeatureCase::NJ; }

inline void check_case(SimKind sim, FeatureCase c) {
    if (sim == SimKind::sim2 && !is_joint(c))
        throw InputError("feature case " + std::string(to_string(c)) + " is not supported for sim2 (use MJ or NJ)");
}

namespace detail {

/// Markov state features of stage t: sim1 -> (w_t, r_{t-1}) or (w_t) for SS;
/// sim2 -> (toxicity_t, tumor_t).
inline int state_feature_dim(SimKind sim, FeatureCase c) noexcept {
    return (sim == SimKind::sim1 && c == FeatureCase::SS) ? 1 : 2;
}

inline double* write_state(const Trajectory& tr, int t, SimKind sim, FeatureCase c, double* out) {
    const auto& rec = tr.stages[static_cast<std::size_t>(t - 1)];
    if (sim == SimKind::sim1) {
        *out++ = rec.state.at(0);
        if (c != FeatureCase::SS) *out++ = t == 1 ? 0.0 : tr.stages[static_cast<std::size_t>(t - 2)].reward;
    } else {
        *out++ = rec.state.at(0);
        *out++ = rec.state.at(1);
    }
    return out;
}

}  // namespace detail

/// Dimension of the decision context at stage t: every input coordinate
/// except the current action.
inline int context_dim(SimKind sim, FeatureCase c, int t) {
    const int s = detail::state_feature_dim(sim, c);
    return c == FeatureCase::NJ ? t * s + (t - 1) : s;
}

/// Dimension of the regression input at stage t.
inline int input_dim(SimKind sim, FeatureCase c, int t) { return context_dim(sim, c, t) + (is_joint(c) ? 1 : 0); }

/// Context rows for the given trajectories at stage t. Only stages 1..t
/// are read; the stage-t action is not.
inline Matrix build_contexts(std::span<const Trajectory* const> rows, int t, SimKind sim, FeatureCase c) {
    check_case(sim, c);
    const int d = context_dim(sim, c, t);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> X(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Trajectory& tr = *rows[r];
        if (!tr.active_at(t))
            throw InputError("trajectory " + std::to_string(tr.id) + " has no stage " + std::to_string(t));
        double* out = X.row(static_cast<Eigen::Index>(r)).data();
        if (c == FeatureCase::NJ) {
            for (int s = 1; s < t; ++s) {
                out = detail::write_state(tr, s, sim, c, out);
                *out++ = tr.stages[static_cast<std::size_t>(s - 1)].action_code;
            }
        }
        detail::write_state(tr, t, sim, c, out);
    }
    return X;
}

/// Regression inputs for one stage. Rows are the trajectories active at
/// stage t; `labels` is filled in by the learner.
struct StageDataset {
    int stage = 1;
    Matrix inputs;                       ///< joint: [context, action code]; separate: context
    Vector labels;                       ///< empty until labelled
    Vector rewards;                      ///< r_t per row
    std::vector<std::size_t> row_ids;    ///< index into the trajectory list
    std::vector<std::size_t> actions;    ///< taken action index per row
};

inline std::vector<std::size_t> active_rows(std::span<const Trajectory> data, int t,
                                            std::span<const std::size_t> subset = {}) {
    std::vector<std::size_t> rows;
    if (subset.empty()) {
        for (std::size_t i = 0; i < data.size(); ++i)
            if (data[i].active_at(t)) rows.push_back(i);
    } else {
        for (std::size_t i : subset)
            if (data[i].active_at(t)) rows.push_back(i);
    }
    return rows;
}

inline StageDataset build_features(std::span<const Trajectory> data, int t, FeatureCase c, SimKind sim,
                                   std::span<const std::size_t> subset = {}) {
    if (t < 1) throw InputError("stage must be >= 1");
    check_case(sim, c);
    StageDataset ds;
    ds.stage = t;
    ds.row_ids = active_rows(data, t, subset);
    std::vector<const Trajectory*> ptrs;
    ptrs.reserve(ds.row_ids.size());
    for (std::size_t i : ds.row_ids) ptrs.push_back(&data[i]);
    const Matrix ctx = build_contexts(ptrs, t, sim, c);
    const auto n = static_cast<Eigen::Index>(ds.row_ids.size());
    ds.rewards.resize(n);
    ds.actions.resize(ds.row_ids.size());
    if (is_joint(c)) {
        ds.inputs.resize(n, ctx.cols() + 1);
        ds.inputs.leftCols(ctx.cols()) = ctx;
    } else {
        ds.inputs = ctx;
    }
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& rec = ptrs[static_cast<std::size_t>(r)]->stages[static_cast<std::size_t>(t - 1)];
        ds.rewards(r) = rec.reward;
        ds.actions[static_cast<std::size_t>(r)] = rec.action;
        if (is_joint(c)) ds.inputs(r, ctx.cols()) = rec.action_code;
    }
    return ds;
}

}  // namespace dkql

#endif  // DKQL_FEATURES_HPP
