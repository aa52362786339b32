#ifndef DKQL_SIMULATE_HPP
#define DKQL_SIMULATE_HPP

#include <span>
#include <string>
#include <vector>

#include "dkql/rng.hpp"
#include "dkql/sim1.hpp"
#include "dkql/sim2.hpp"

namespace dkql {

/// A decision rule queried once per stage for a batch of patients. Each
/// history holds the stages so far; the last stage is open (state recorded,
/// action not yet chosen). Returns one action index per history.
class TreatmentPolicy {
public:
    virtual ~TreatmentPolicy() = default;

    virtual std::vector<std::size_t> decide(int stage, std::span<const Trajectory* const> histories) const = 0;

    /// Throws InputError when the policy cannot drive the given simulator.
    virtual void check_compatible(const DtrProblem& problem) const { (void)problem; }
};

inline DtrProblem problem_for(SimKind sim) { return sim == SimKind::sim1 ? sim1::problem() : sim2::problem(); }

namespace detail {

template <class Patient>
std::vector<Patient*> open_live(std::vector<Patient>& patients) {
    std::vector<Patient*> live;
    for (auto& p : patients)
        if (!p.done()) {
            p.open_stage();
            live.push_back(&p);
        }
    return live;
}

template <class Patient>
std::vector<std::size_t> choose(const TreatmentPolicy* policy, int stage, const std::vector<Patient*>& live,
                                std::vector<SplitMix64>& streams, std::size_t n_actions) {
    std::vector<std::size_t> actions(live.size());
    if (policy) {
        std::vector<const Trajectory*> hist;
        hist.reserve(live.size());
        for (auto* p : live) hist.push_back(&p->trajectory());
        actions = policy->decide(stage, hist);
        if (actions.size() != live.size()) throw InputError("policy returned the wrong number of actions");
        for (std::size_t a : actions)
            if (a >= n_actions) throw InputError("policy returned an action outside the action set");
    } else {
        for (std::size_t k = 0; k < live.size(); ++k)
            actions[k] = static_cast<std::size_t>(streams[live[k]->trajectory().id].below(n_actions));
    }
    return actions;
}

}  // namespace detail

/// Generates `n` trajectories of the given trial. With `policy == nullptr`
/// actions are uniform over the stage's action set (the data-collection
/// design); otherwise the policy picks the action at every live stage.
/// Patient i draws only from `rng.split(i)`, so results do not depend on
/// batching or thread count.
inline std::vector<Trajectory> simulate(SimKind sim, std::size_t n, const TreatmentPolicy* policy, const SplitMix64& rng) {
    const DtrProblem problem = problem_for(sim);
    if (policy) policy->check_compatible(problem);
    std::vector<SplitMix64> streams;
    streams.reserve(n);
    for (std::size_t i = 0; i < n; ++i) streams.push_back(rng.split(i));

    std::vector<Trajectory> out;
    out.reserve(n);
    if (sim == SimKind::sim1) {
        std::vector<sim1::Patient> patients;
        patients.reserve(n);
        for (std::size_t i = 0; i < n; ++i) patients.emplace_back(streams[i].uniform(0.5, 1.0), i);
        for (int t = 1; t <= sim1::kMaxStages; ++t) {
            auto live = detail::open_live(patients);
            if (live.empty()) break;
            const auto actions = detail::choose(policy, t, live, streams, 2);
            for (std::size_t k = 0; k < live.size(); ++k) {
                auto& s = streams[live[k]->trajectory().id];
                live[k]->advance(static_cast<sim1::Treatment>(actions[k]), [&s](double mean) { return s.exponential(mean); });
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            auto& s = streams[i];
            patients[i].pad([&s] { return static_cast<sim1::Treatment>(s.below(2)); });
            out.push_back(std::move(patients[i]).release());
        }
    } else {
        std::vector<sim2::Patient> patients;
        patients.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = 2.0 * streams[i].uniform_open();
            const double m = 2.0 * streams[i].uniform_open();
            patients.emplace_back(w, m, i);
        }
        for (int t = 1; t <= sim2::kStages; ++t) {
            auto live = detail::open_live(patients);
            if (live.empty()) break;
            const ActionSet& set = problem.action_set(t);
            const auto actions = detail::choose(policy, t, live, streams, set.size());
            for (std::size_t k = 0; k < live.size(); ++k) {
                auto& s = streams[live[k]->trajectory().id];
                live[k]->advance(actions[k], set.codes[actions[k]], [&s](double p) { return s.bernoulli(p); });
            }
        }
        for (auto& p : patients) out.push_back(std::move(p).release());
    }
    return out;
}

inline std::vector<Trajectory> sim1_generate(std::size_t n, const TreatmentPolicy* policy, const SplitMix64& rng) {
    return simulate(SimKind::sim1, n, policy, rng);
}

inline std::vector<Trajectory> sim2_generate(std::size_t n, const TreatmentPolicy* policy, const SplitMix64& rng) {
    return simulate(SimKind::sim2, n, policy, rng);
}

}  // namespace dkql

#endif  // DKQL_SIMULATE_HPP
