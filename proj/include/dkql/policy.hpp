#ifndef DKQL_POLICY_HPP
#define DKQL_POLICY_HPP

#include <cmath>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dkql/features.hpp"
#include "dkql/kernel.hpp"
#include "dkql/linear.hpp"
#include "dkql/simulate.hpp"

namespace dkql {

using Regressor = std::variant<KernelModel, LinearModel>;

struct WeightedModel {
    Regressor model;
    double weight = 1.0;
};

/// Q-function of one stage. Joint cases have one component list scoring
/// every action; separate cases have one list per action. A list with more
/// than one entry is a distributed ensemble whose prediction is the
/// weighted sum of its members.
struct StagePolicy {
    int stage = 1;
    ActionSet actions;
    std::vector<std::vector<WeightedModel>> components;
};

/// Scores of every action for each context row, (rows x |actions|).
inline Matrix stage_q_values(const StagePolicy& sp, FeatureCase c, const Matrix& contexts, OpCounter* counter = nullptr) {
    const auto rows = contexts.rows();
    const auto ell = static_cast<Eigen::Index>(sp.actions.size());
    if (ell == 0) throw InputError("stage " + std::to_string(sp.stage) + " has an empty action set");
    Matrix q = Matrix::Zero(rows, ell);
    if (is_joint(c)) {
        if (sp.components.size() != 1) throw InputError("joint stage model must have one component list");
        for (const auto& wm : sp.components[0]) {
            if (const auto* km = std::get_if<KernelModel>(&wm.model)) {
                q += wm.weight * krr_predict_actions(*km, contexts, sp.actions.codes, counter);
            } else {
                const auto& lm = std::get<LinearModel>(wm.model);
                const Eigen::Index d = lm.dim() - 1;
                if (contexts.cols() != d) throw InputError("linear stage model: context dimension mismatch");
                const Vector base = (contexts * lm.slopes.head(d)).array() + lm.intercept;
                for (Eigen::Index a = 0; a < ell; ++a)
                    q.col(a) += wm.weight * (base.array() + lm.slopes(d) * sp.actions.codes[static_cast<std::size_t>(a)]).matrix();
            }
        }
    } else {
        if (sp.components.size() != sp.actions.size())
            throw InputError("separate stage model must have one component list per action");
        for (Eigen::Index a = 0; a < ell; ++a) {
            for (const auto& wm : sp.components[static_cast<std::size_t>(a)]) {
                if (const auto* km = std::get_if<KernelModel>(&wm.model))
                    q.col(a) += wm.weight * krr_predict(*km, contexts, counter);
                else
                    q.col(a) += wm.weight * linear_predict(std::get<LinearModel>(wm.model), contexts);
            }
        }
    }
    return q;
}

/// Row-wise maximum over actions.
inline Vector max_over_actions(const Matrix& q) {
    if (q.cols() == 0) throw InputError("max over an empty action set");
    return q.rowwise().maxCoeff();
}

/// Row-wise argmax; ties go to the lowest action index.
inline std::vector<std::size_t> argmax_actions(const Matrix& q) {
    if (q.cols() == 0) throw InputError("argmax over an empty action set");
    std::vector<std::size_t> best(static_cast<std::size_t>(q.rows()), 0);
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
        Eigen::Index b = 0;
        for (Eigen::Index a = 1; a < q.cols(); ++a)
            if (q(r, a) > q(r, b)) b = a;
        best[static_cast<std::size_t>(r)] = static_cast<std::size_t>(b);
    }
    return best;
}

/// Greedy treatment rule backed by per-stage Q-functions.
class DtrPolicy : public TreatmentPolicy {
public:
    DtrPolicy() = default;
    DtrPolicy(DtrProblem problem, FeatureCase fcase, std::string learner)
        : problem_(std::move(problem)), case_(fcase), learner_(std::move(learner)) {}

    [[nodiscard]] const DtrProblem& problem() const noexcept { return problem_; }
    [[nodiscard]] FeatureCase feature_case() const noexcept { return case_; }
    [[nodiscard]] const std::string& learner() const noexcept { return learner_; }
    void set_learner(std::string name) { learner_ = std::move(name); }
    [[nodiscard]] int horizon() const noexcept { return problem_.horizon; }
    [[nodiscard]] const std::vector<StagePolicy>& stages() const noexcept { return stages_; }
    [[nodiscard]] const StagePolicy& stage(int t) const { return stages_.at(static_cast<std::size_t>(t - 1)); }

    /// Stages are added from T down to 1 during training; stored by index.
    void set_stage(StagePolicy sp) {
        if (stages_.size() != static_cast<std::size_t>(problem_.horizon)) stages_.resize(static_cast<std::size_t>(problem_.horizon));
        stages_.at(static_cast<std::size_t>(sp.stage - 1)) = std::move(sp);
    }

    [[nodiscard]] Matrix q_values(int t, const Matrix& contexts, OpCounter* counter = nullptr) const {
        if (t < 1 || t > horizon()) throw InputError("stage " + std::to_string(t) + " outside the policy horizon");
        return stage_q_values(stage(t), case_, contexts, counter);
    }

    [[nodiscard]] Matrix q_values(int t, std::span<const Trajectory* const> histories) const {
        return q_values(t, build_contexts(histories, t, problem_.sim, case_));
    }

    std::vector<std::size_t> decide(int t, std::span<const Trajectory* const> histories) const override {
        if (histories.empty()) return {};
        return argmax_actions(q_values(t, histories));
    }

    void check_compatible(const DtrProblem& p) const override {
        if (p.sim != problem_.sim || p.horizon != problem_.horizon)
            throw InputError("policy was trained for " + std::string(to_string(problem_.sim)) + " with horizon " +
                             std::to_string(problem_.horizon));
        if (p.actions != problem_.actions) throw InputError("policy action sets do not match the simulator");
        check_case(p.sim, case_);
    }

    /// Weights of each component list sum to one.
    [[nodiscard]] bool weights_normalized(double tol = 1e-12) const {
        for (const auto& sp : stages_)
            for (const auto& list : sp.components) {
                double s = 0.0;
                for (const auto& wm : list) s += wm.weight;
                if (std::abs(s - 1.0) > tol) return false;
            }
        return true;
    }

private:
    DtrProblem problem_;
    FeatureCase case_ = FeatureCase::MJ;
    std::string learner_;
    std::vector<StagePolicy> stages_;
};

/// Greedy action at stage t for a single history.
inline std::size_t greedy_action(const DtrPolicy& policy, int t, const Trajectory& history) {
    const Trajectory* h = &history;
    return policy.decide(t, std::span<const Trajectory* const>(&h, 1)).front();
}

}  // namespace dkql

#endif  // DKQL_POLICY_HPP
