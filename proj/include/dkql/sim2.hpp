#ifndef DKQL_SIM2_HPP
#define DKQL_SIM2_HPP

// Fixed six-stage dose-finding trial. Toxicity W and tumor size M follow
// difference equations driven by the dose; death is a Bernoulli draw each
// month and a tumor that reaches size 0 never recurs.
//
// Stored stage state layout: [toxicity, tumor size].
// The reference values W0/M0 in the transition are the patient's initial
// toxicity and tumor size.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "dkql/trajectory.hpp"

namespace dkql::sim2 {

inline constexpr int kStages = 6;
inline constexpr double kDeathPenalty = -6.0;

struct State {
    double toxicity;
    double tumor;
};

inline State transition(double W, double M, double dose, double M0, double W0) noexcept {
    const double W_next = W + 0.1 * std::max(M, M0) + 1.2 * (dose - 0.5);
    const double growth = M > 0.0 ? 0.15 * std::max(W, W0) - 1.2 * (dose - 0.5) : 0.0;
    return {W_next, std::max(M + growth, 0.0)};
}

inline double death_prob(double W, double M) noexcept { return 1.0 - std::exp(-std::exp(W + M - 4.5)); }

inline double toxicity_reward(double W, double W_next) noexcept {
    const double d = W_next - W;
    if (d <= -0.5) return 0.5;
    if (d >= 0.5) return -0.5;
    return 0.0;
}

inline double tumor_reward(double M, double M_next) noexcept {
    const double d = M_next - M;
    if (M_next == 0.0) return 1.5;
    if (d <= -0.5) return 0.5;
    if (d >= 0.5) return -0.5;
    return 0.0;
}

inline double reward(bool died, double W, double W_next, double M, double M_next) noexcept {
    if (died) return kDeathPenalty;
    return toxicity_reward(W, W_next) + tumor_reward(M, M_next);
}

/// Stage 1 doses are {0.51, ..., 1.00}; later stages {0.01, ..., 1.00}.
inline ActionSet stage_actions(int t) {
    const int first = t == 1 ? 51 : 1;
    ActionSet set;
    for (int k = first; k <= 100; ++k) {
        set.codes.push_back(k / 100.0);
        set.labels.push_back(std::to_string(k / 100) + "." + (k % 100 < 10 ? "0" : "") + std::to_string(k % 100));
    }
    return set;
}

inline DtrProblem problem() {
    DtrProblem p{SimKind::sim2, kStages, {}};
    for (int t = 1; t <= kStages; ++t) p.actions.push_back(stage_actions(t));
    return p;
}

class Patient {
public:
    Patient(double initial_toxicity, double initial_tumor, std::uint64_t id = 0)
        : W_(initial_toxicity), M_(initial_tumor), W0_(initial_toxicity), M0_(initial_tumor) {
        traj_.id = id;
        traj_.sim = SimKind::sim2;
    }

    [[nodiscard]] bool done() const noexcept { return done_; }
    [[nodiscard]] int stage() const noexcept { return stage_; }
    [[nodiscard]] const Trajectory& trajectory() const noexcept { return traj_; }

    void open_stage() {
        StageRecord rec;
        rec.state = {W_, M_};
        traj_.stages.push_back(std::move(rec));
    }

    /// `draw_death(p)` returns true when the patient dies, given the death
    /// probability p of the post-transition state.
    template <class DrawDeath>
    void advance(std::size_t action, double dose, DrawDeath&& draw_death) {
        if (done_ || traj_.stage_count() != stage_) throw InputError("sim2: advance without an open stage");
        StageRecord& rec = traj_.stages.back();
        rec.action = action;
        rec.action_code = dose;
        ++traj_.real_stages;

        const State next = transition(W_, M_, dose, M0_, W0_);
        const bool died = draw_death(death_prob(next.toxicity, next.tumor));
        rec.reward = reward(died, W_, next.toxicity, M_, next.tumor);
        W_ = next.toxicity;
        M_ = next.tumor;
        if (died) {
            traj_.terminal_state = {W_, M_};
            traj_.termination = Termination::Death;
            done_ = true;
        } else if (stage_ == kStages) {
            traj_.terminal_state = {W_, M_};
            traj_.termination = M_ == 0.0 ? Termination::Cured : Termination::StageLimit;
            done_ = true;
        } else {
            ++stage_;
        }
    }

    Trajectory release() && { return std::move(traj_); }

private:
    double W_;
    double M_;
    double W0_;
    double M0_;
    int stage_ = 1;
    bool done_ = false;
    Trajectory traj_;
};

}  // namespace dkql::sim2

#endif  // DKQL_SIM2_HPP
