#ifndef DKQL_TEST_FIXTURES_HPP
#define DKQL_TEST_FIXTURES_HPP

#include <vector>

#include "dkql/dkql.hpp"
#include "oracles.hpp"

namespace fixture {

struct Step {
    std::vector<double> state;
    std::size_t action;
    double reward;
};

/// Two-stage problem on the sim2 state layout with a two-dose action set.
inline dkql::DtrProblem two_dose_problem(int horizon = 2) {
    dkql::ActionSet set{{0.25, 0.75}, {"low", "high"}};
    return dkql::DtrProblem{dkql::SimKind::sim2, horizon, std::vector<dkql::ActionSet>(std::size_t(horizon), set)};
}

inline dkql::Trajectory make(dkql::SimKind sim, std::uint64_t id, const std::vector<Step>& steps,
                             const dkql::ActionSet& set) {
    dkql::Trajectory tr;
    tr.id = id;
    tr.sim = sim;
    for (const auto& s : steps) {
        dkql::StageRecord r;
        r.state = s.state;
        r.action = s.action;
        r.action_code = set.codes[s.action];
        r.reward = s.reward;
        tr.stages.push_back(r);
    }
    tr.real_stages = static_cast<int>(steps.size());
    tr.terminal_state = steps.back().state;
    tr.termination = dkql::Termination::StageLimit;
    return tr;
}

/// Six patients, T = 2; patient 3 dies at stage 1 and has no stage 2.
inline std::vector<dkql::Trajectory> six_patients() {
    const auto set = two_dose_problem().actions[0];
    const auto S = dkql::SimKind::sim2;
    std::vector<dkql::Trajectory> d;
    d.push_back(make(S, 0, {{{0.2, 1.1}, 0, 0.5}, {{0.6, 0.9}, 1, 1.0}}, set));
    d.push_back(make(S, 1, {{{0.9, 0.4}, 1, 0.0}, {{1.3, 0.2}, 0, 2.0}}, set));
    d.push_back(make(S, 2, {{{1.5, 1.6}, 0, -0.5}, {{1.2, 1.4}, 0, 0.0}}, set));
    d.push_back(make(S, 3, {{{1.8, 1.9}, 1, -6.0}}, set));
    d.push_back(make(S, 4, {{{0.4, 0.7}, 1, 0.5}, {{0.5, 0.3}, 1, 1.5}}, set));
    d.push_back(make(S, 5, {{{1.1, 0.8}, 0, 0.0}, {{0.8, 1.0}, 1, -0.5}}, set));
    d[3].termination = dkql::Termination::Death;
    return d;
}

inline std::vector<oracle::Traj> to_oracle(const std::vector<dkql::Trajectory>& data) {
    std::vector<oracle::Traj> out;
    for (const auto& tr : data) {
        oracle::Traj o;
        for (const auto& st : tr.stages) o.stages.push_back({st.state, st.action_code, st.reward});
        out.push_back(o);
    }
    return out;
}

inline oracle::Mat to_rows(const dkql::Matrix& X) {
    oracle::Mat out(static_cast<std::size_t>(X.rows()), oracle::Vec(static_cast<std::size_t>(X.cols())));
    for (Eigen::Index r = 0; r < X.rows(); ++r)
        for (Eigen::Index c = 0; c < X.cols(); ++c) out[std::size_t(r)][std::size_t(c)] = X(r, c);
    return out;
}

inline dkql::Matrix from_rows(const oracle::Mat& X) {
    dkql::Matrix out(static_cast<Eigen::Index>(X.size()), X.empty() ? 0 : static_cast<Eigen::Index>(X[0].size()));
    for (std::size_t r = 0; r < X.size(); ++r)
        for (std::size_t c = 0; c < X[r].size(); ++c) out(Eigen::Index(r), Eigen::Index(c)) = X[r][c];
    return out;
}

inline double max_abs_diff(const dkql::Vector& a, const oracle::Vec& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) d = std::max(d, std::abs(a(Eigen::Index(i)) - b[i]));
    return a.size() == Eigen::Index(b.size()) ? d : INFINITY;
}

}  // namespace fixture

#endif  // DKQL_TEST_FIXTURES_HPP
