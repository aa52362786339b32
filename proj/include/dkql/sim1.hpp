#ifndef DKQL_SIM1_HPP
#define DKQL_SIM1_HPP

// Flexible-stage trial with an aggressive (A) and a conservative (B)
// treatment. Wellness W and tumor size M evolve in closed form between
// treatment times; a stage ends when the tumor regrows to size 1, the
// survival clock runs out, or the 5-year window closes.
//
// Stored stage state layout: [wellness, tumor size, time in years].
// Padded stages carry zero wellness and tumor size and zero reward.

#include <algorithm>
#include <cmath>
#include <utility>

#include "dkql/trajectory.hpp"

namespace dkql::sim1 {

enum class Treatment { A = 0, B = 1 };

inline constexpr double kHorizonYears = 5.0;
inline constexpr double kDeathWellness = 0.25;
inline constexpr int kMaxStages = 3;

struct Effects {
    double wellness;
    double tumor;
};

/// Immediate post-treatment wellness and tumor size.
inline Effects immediate_effects(double W, double M, Treatment a) noexcept {
    if (a == Treatment::A) return {W - 0.5, 0.1 * M / W};
    return {W - 0.25, 0.2 * M / W};
}

/// State at time t >= t_i, starting from the post-treatment values.
inline Effects dynamics(double W_plus, double M_plus, double t_i, double t) noexcept {
    const double dt = t - t_i;
    return {W_plus + (1.0 - W_plus) * (1.0 - std::exp2(-dt / 2.0)), M_plus + 4.0 * M_plus * dt / 3.0};
}

/// Time at which the tumor regrows to size 1.
inline double critical_time(double t_i, double M_plus) noexcept { return t_i + 0.75 * (1.0 - M_plus) / M_plus; }

/// Mean of the exponential survival draw after a treatment.
inline double survival_mean(double W_plus, double M_plus) noexcept { return 0.15 * (W_plus + 2.0) / M_plus; }

inline ActionSet action_set() { return ActionSet{{1.0, 0.0}, {"A", "B"}}; }

inline DtrProblem problem() {
    return DtrProblem{SimKind::sim1, kMaxStages, std::vector<ActionSet>(kMaxStages, action_set())};
}

/// One patient moving through the trial. Each stage is opened (state
/// recorded, action pending), then advanced with the chosen action.
class Patient {
public:
    explicit Patient(double initial_wellness, std::uint64_t id = 0) : W_(initial_wellness) {
        traj_.id = id;
        traj_.sim = SimKind::sim1;
    }

    [[nodiscard]] bool done() const noexcept { return done_; }
    [[nodiscard]] int stage() const noexcept { return stage_; }
    [[nodiscard]] const Trajectory& trajectory() const noexcept { return traj_; }
    [[nodiscard]] double time() const noexcept { return t_; }

    void open_stage() {
        StageRecord rec;
        rec.state = {W_, M_, t_};
        traj_.stages.push_back(std::move(rec));
    }

    /// `draw_tau(mean)` returns the exponential survival draw; it is called
    /// only when the patient survives the immediate effects.
    template <class DrawTau>
    void advance(Treatment a, DrawTau&& draw_tau) {
        if (done_ || traj_.stage_count() != stage_) throw InputError("sim1: advance without an open stage");
        StageRecord& rec = traj_.stages.back();
        rec.action = static_cast<std::size_t>(a);
        rec.action_code = a == Treatment::A ? 1.0 : 0.0;
        ++traj_.real_stages;

        const Effects plus = immediate_effects(W_, M_, a);
        if (plus.wellness < kDeathWellness) {
            rec.reward = 0.0;
            traj_.terminal_state = {plus.wellness, plus.tumor, t_};
            finish(Termination::Death);
            return;
        }
        const double tau = draw_tau(survival_mean(plus.wellness, plus.tumor));
        rec.tau = tau;
        const double t_next = std::min({t_ + tau, critical_time(t_, plus.tumor), kHorizonYears});
        rec.reward = t_next - t_;
        const Effects next = dynamics(plus.wellness, plus.tumor, t_, t_next);
        W_ = next.wellness;
        M_ = next.tumor;
        t_ = t_next;
        if (t_next == kHorizonYears) {
            traj_.terminal_state = {W_, M_, t_};
            finish(Termination::TimeLimit);
        } else if (stage_ == kMaxStages) {
            traj_.terminal_state = {W_, M_, t_};
            finish(Termination::StageLimit);
        } else {
            ++stage_;
        }
    }

    /// Fills the remaining stages with zero wellness and reward and an
    /// action from `draw_action()`.
    template <class DrawAction>
    void pad(DrawAction&& draw_action) {
        while (traj_.stage_count() < kMaxStages) {
            StageRecord rec;
            rec.state = {0.0, 0.0, t_};
            const Treatment a = draw_action();
            rec.action = static_cast<std::size_t>(a);
            rec.action_code = a == Treatment::A ? 1.0 : 0.0;
            rec.padded = true;
            traj_.stages.push_back(std::move(rec));
        }
    }

    Trajectory release() && { return std::move(traj_); }

private:
    void finish(Termination why) {
        traj_.termination = why;
        done_ = true;
    }

    double W_;
    double M_ = 1.0;
    double t_ = 0.0;
    int stage_ = 1;
    bool done_ = false;
    Trajectory traj_;
};

}  // namespace dkql::sim1

#endif  // DKQL_SIM1_HPP
