#ifndef DKQL_TRAJECTORY_HPP
#define DKQL_TRAJECTORY_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "dkql/errors.hpp"

namespace dkql {

enum class SimKind { sim1, sim2 };

enum class Termination { Death, TimeLimit, StageLimit, Cured };

inline std::string_view to_string(SimKind s) { return s == SimKind::sim1 ? "sim1" : "sim2"; }

inline SimKind parse_sim_kind(std::string_view s) {
    if (s == "sim1") return SimKind::sim1;
    if (s == "sim2") return SimKind::sim2;
    throw InputError("unknown simulator '" + std::string(s) + "'");
}

inline std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::Death: return "Death";
        case Termination::TimeLimit: return "TimeLimit";
        case Termination::StageLimit: return "StageLimit";
        case Termination::Cured: return "Cured";
    }
    return "?";
}

inline Termination parse_termination(std::string_view s) {
    if (s == "Death") return Termination::Death;
    if (s == "TimeLimit") return Termination::TimeLimit;
    if (s == "StageLimit") return Termination::StageLimit;
    if (s == "Cured") return Termination::Cured;
    throw InputError("unknown termination '" + std::string(s) + "'");
}

/// Ordered finite action set. `codes` are the scalar encodings that enter
/// the features; `labels` are display names.
struct ActionSet {
    std::vector<double> codes;
    std::vector<std::string> labels;

    [[nodiscard]] std::size_t size() const noexcept { return codes.size(); }

    [[nodiscard]] std::size_t index_of_label(std::string_view label) const {
        for (std::size_t k = 0; k < labels.size(); ++k)
            if (labels[k] == label) return k;
        throw InputError("action '" + std::string(label) + "' is not in the action set");
    }

    /// Index of the code closest to `code`; ties go to the lower index.
    [[nodiscard]] std::size_t nearest(double code) const {
        if (codes.empty()) throw InputError("empty action set");
        std::size_t best = 0;
        for (std::size_t k = 1; k < codes.size(); ++k) {
            if (std::abs(codes[k] - code) < std::abs(codes[best] - code)) best = k;
        }
        return best;
    }

    friend bool operator==(const ActionSet&, const ActionSet&) = default;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct StageRecord {
    std::vector<double> state;  ///< layout documented per simulator
    std::size_t action = 0;     ///< index into the stage's ActionSet
    double action_code = 0.0;
    double reward = 0.0;
    bool padded = false;
    double tau = kNaN;  ///< sim1 exponential survival draw; NaN when not drawn
};

/// One patient's episode. `stages.size()` is the stored stage count
/// (sim1 always pads to 3); `real_stages` counts stages actually treated.
struct Trajectory {
    std::uint64_t id = 0;
    SimKind sim = SimKind::sim1;
    std::vector<StageRecord> stages;
    std::vector<double> terminal_state;
    Termination termination = Termination::StageLimit;
    int real_stages = 0;

    [[nodiscard]] int stage_count() const noexcept { return static_cast<int>(stages.size()); }

    /// Stage t (1-based) is stored, so it contributes a regression row.
    [[nodiscard]] bool active_at(int t) const noexcept { return t >= 1 && t <= stage_count(); }

    [[nodiscard]] double total_reward() const noexcept {
        double s = 0.0;
        for (const auto& st : stages) s += st.reward;
        return s;
    }
};

/// Horizon and per-stage action sets of a decision problem.
struct DtrProblem {
    SimKind sim = SimKind::sim1;
    int horizon = 1;
    std::vector<ActionSet> actions;  ///< one per stage

    [[nodiscard]] const ActionSet& action_set(int t) const {
        if (t < 1 || t > horizon) throw InputError("stage " + std::to_string(t) + " outside 1..horizon");
        return actions[static_cast<std::size_t>(t - 1)];
    }

    friend bool operator==(const DtrProblem&, const DtrProblem&) = default;
};

}  // namespace dkql

#endif  // DKQL_TRAJECTORY_HPP
