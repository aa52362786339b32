#include <gtest/gtest.h>

#include "dkql/dkql.hpp"

using namespace dkql;
using sim1::Treatment;

namespace {

constexpr double kTol = 1e-9;

/// Runs one patient with scripted actions and survival draws.
Trajectory scripted(double w1, const std::vector<Treatment>& actions, const std::vector<double>& taus) {
    sim1::Patient p(w1);
    std::size_t k = 0;
    while (!p.done()) {
        p.open_stage();
        const std::size_t i = k++;
        p.advance(actions.at(i), [&](double) { return taus.at(i); });
    }
    p.pad([] { return Treatment::B; });
    return std::move(p).release();
}

}  // namespace

TEST(SimExampleSim1, ImmediateEffectsA) {
    const auto e = sim1::immediate_effects(1.0, 1.0, Treatment::A);
    EXPECT_NEAR(e.wellness, 0.5, kTol);
    EXPECT_NEAR(e.tumor, 0.1, kTol);
}

TEST(SimExampleSim1, ImmediateEffectsB) {
    const auto e = sim1::immediate_effects(1.0, 1.0, Treatment::B);
    EXPECT_NEAR(e.wellness, 0.75, kTol);
    EXPECT_NEAR(e.tumor, 0.2, kTol);
}

TEST(SimExampleSim1, ImmediateEffectsDeathBranch) {
    const auto e = sim1::immediate_effects(0.7, 1.0, Treatment::A);
    EXPECT_NEAR(e.wellness, 0.2, kTol);
    EXPECT_NEAR(e.tumor, 0.1 / 0.7, kTol);
    EXPECT_LT(e.wellness, sim1::kDeathWellness);
}

TEST(SimExampleSim1, DynamicsZeroElapsed) {
    const auto e = sim1::dynamics(0.5, 0.1, 1.3, 1.3);
    EXPECT_EQ(e.wellness, 0.5);
    EXPECT_EQ(e.tumor, 0.1);
}

TEST(SimExampleSim1, DynamicsWellnessRecovers) {
    EXPECT_NEAR(sim1::dynamics(0.5, 0.1, 0.0, 2.0).wellness, 0.75, kTol);
}

TEST(SimExampleSim1, DynamicsTumorGrows) {
    EXPECT_NEAR(sim1::dynamics(0.5, 0.1, 1.0, 4.0).tumor, 0.5, kTol);
}

TEST(SimExampleSim1, CriticalTime) {
    EXPECT_NEAR(sim1::critical_time(2.0, 1.0), 2.0, kTol);
    EXPECT_NEAR(sim1::critical_time(0.0, 0.1), 6.75, kTol);
    EXPECT_NEAR(sim1::critical_time(1.0, 0.2), 4.0, kTol);
}

TEST(SimExampleSim1, TumorReachesOneAtCriticalTime) {
    const double tc = sim1::critical_time(0.5, 0.3);
    EXPECT_NEAR(sim1::dynamics(0.6, 0.3, 0.5, tc).tumor, 1.0, kTol);
}

TEST(SimExampleSim1, ForcedTraceTimeLimit) {
    const Trajectory tr = scripted(1.0, {Treatment::A}, {10.0});
    EXPECT_EQ(tr.real_stages, 1);
    EXPECT_EQ(tr.stage_count(), 3);
    EXPECT_EQ(tr.termination, Termination::TimeLimit);
    EXPECT_NEAR(tr.stages[0].reward, 5.0, kTol);
    EXPECT_EQ(tr.stages[0].tau, 10.0);
    EXPECT_TRUE(tr.stages[1].padded);
    EXPECT_TRUE(tr.stages[2].padded);
    EXPECT_EQ(tr.stages[1].reward, 0.0);
    EXPECT_EQ(tr.stages[1].state[0], 0.0);
}

TEST(SimExampleSim1, ForcedTraceDeath) {
    const Trajectory tr = scripted(0.6, {Treatment::A}, {});
    EXPECT_EQ(tr.termination, Termination::Death);
    EXPECT_EQ(tr.real_stages, 1);
    EXPECT_EQ(tr.stage_count(), 3);
    EXPECT_EQ(tr.stages[0].reward, 0.0);
    EXPECT_TRUE(std::isnan(tr.stages[0].tau));
    EXPECT_TRUE(tr.stages[2].padded);
}

TEST(SimExampleSim1, ThreePatientMeanSurvival) {
    // Third patient: B with a long draw reaches the critical time 3.0, the
    // tumor is back at 1, then A with a long draw runs to the horizon.
    const std::vector<Trajectory> cohort{scripted(1.0, {Treatment::A}, {10.0}), scripted(0.6, {Treatment::A}, {}),
                                         scripted(1.0, {Treatment::B, Treatment::A}, {100.0, 100.0})};
    EXPECT_NEAR(cohort[2].stages[0].reward, 3.0, kTol);
    EXPECT_NEAR(cohort[2].stages[1].state[1], 1.0, kTol);
    EXPECT_NEAR(cohort[2].stages[1].reward, 2.0, kTol);
    EXPECT_NEAR(mean_survival_time(cohort), (5.0 + 0.0 + 5.0) / 3.0, kTol);
}

TEST(Sim1, AdvanceWithoutOpenStageThrows) {
    sim1::Patient p(0.8);
    EXPECT_THROW(p.advance(Treatment::A, [](double) { return 1.0; }), InputError);
}

TEST(Sim1, InitialStateLayout) {
    const auto data = simulate(SimKind::sim1, 50, nullptr, SplitMix64(3));
    for (const auto& tr : data) {
        ASSERT_EQ(tr.stages[0].state.size(), 3u);
        EXPECT_GE(tr.stages[0].state[0], 0.5);
        EXPECT_LT(tr.stages[0].state[0], 1.0);
        EXPECT_EQ(tr.stages[0].state[1], 1.0);
        EXPECT_EQ(tr.stages[0].state[2], 0.0);
    }
}

TEST(Sim1, UniformDesignBalancesActions) {
    const std::size_t n = 100000;
    const auto data = simulate(SimKind::sim1, n, nullptr, SplitMix64(2024));
    std::size_t a = 0;
    for (const auto& tr : data) a += tr.stages[0].action == 0 ? 1 : 0;
    const double frac = double(a) / double(n);
    EXPECT_NEAR(frac, 0.5, 4.0 * 0.5 / std::sqrt(double(n)));
}

TEST(Sim1, FixedPolicyDrivesEveryLiveStage) {
    const auto aaa = FixedPolicy::sim1_sequence("AAA");
    const auto data = rollout(aaa, SimKind::sim1, 200, SplitMix64(4));
    for (const auto& tr : data)
        for (int s = 0; s < tr.real_stages; ++s) EXPECT_EQ(tr.stages[std::size_t(s)].action, 0u);
    EXPECT_TRUE(simulate(SimKind::sim1, 0, nullptr, SplitMix64(1)).empty());
}

TEST(Sim1Invariant, ThreeStoredStagesAndBoundedSurvival) {
    const auto data = simulate(SimKind::sim1, 5000, nullptr, SplitMix64(5));
    for (const auto& tr : data) {
        ASSERT_EQ(tr.stage_count(), 3);
        double real = 0.0;
        for (int s = 0; s < 3; ++s) {
            const auto& st = tr.stages[std::size_t(s)];
            if (s < tr.real_stages) {
                EXPECT_FALSE(st.padded);
                real += st.reward;
            } else {
                EXPECT_TRUE(st.padded);
                EXPECT_EQ(st.reward, 0.0);
            }
            EXPECT_GE(st.reward, 0.0);
        }
        EXPECT_EQ(real, tr.total_reward());
        EXPECT_LE(real, 5.0 + 1e-12);
        EXPECT_NEAR(real, tr.terminal_state[2], 1e-12);
    }
}

TEST(Sim1Invariant, NextTimeIsMinOfDrawCriticalAndHorizon) {
    const auto data = simulate(SimKind::sim1, 5000, nullptr, SplitMix64(6));
    std::size_t checked = 0;
    for (const auto& tr : data) {
        for (int s = 0; s < tr.real_stages; ++s) {
            const auto& st = tr.stages[std::size_t(s)];
            if (s + 1 == tr.real_stages && tr.termination == Termination::Death) {
                EXPECT_TRUE(std::isnan(st.tau));
                continue;
            }
            const double t_i = st.state[2];
            const auto plus = sim1::immediate_effects(st.state[0], st.state[1], static_cast<Treatment>(st.action));
            const double expected = std::min({t_i + st.tau, sim1::critical_time(t_i, plus.tumor), sim1::kHorizonYears});
            const double t_next = s + 1 < tr.real_stages ? tr.stages[std::size_t(s + 1)].state[2] : tr.terminal_state[2];
            EXPECT_EQ(t_next, expected);
            EXPECT_EQ(st.reward, expected - t_i);
            ++checked;
        }
    }
    EXPECT_GT(checked, 5000u);
}

TEST(Sim1Invariant, DeterministicReplay) {
    const auto a = simulate(SimKind::sim1, 1000, nullptr, SplitMix64(77));
    const auto b = simulate(SimKind::sim1, 1000, nullptr, SplitMix64(77));
    EXPECT_EQ(trajectories_to_ndjson(a), trajectories_to_ndjson(b));
    const auto c = simulate(SimKind::sim1, 1000, nullptr, SplitMix64(78));
    EXPECT_NE(trajectories_to_ndjson(a), trajectories_to_ndjson(c));
}

TEST(Sim1Invariant, PatientStreamsIndependentOfCohortSize) {
    const auto small = simulate(SimKind::sim1, 10, nullptr, SplitMix64(8));
    const auto large = simulate(SimKind::sim1, 100, nullptr, SplitMix64(8));
    for (std::size_t i = 0; i < small.size(); ++i)
        EXPECT_EQ(trajectory_to_line(small[i]), trajectory_to_line(large[i]));
}
