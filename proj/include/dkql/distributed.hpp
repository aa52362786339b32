#ifndef DKQL_DISTRIBUTED_HPP
#define DKQL_DISTRIBUTED_HPP

// Divide-and-conquer Q-learning. The data is split once into m disjoint
// subsets held by in-process workers. At each stage (backward), every
// worker fits a local KRR model, scores every worker's rows for every
// action, and the weighted sum of those score vectors becomes the
// continuation value for the previous stage's labels.

#include <algorithm>
#include <chrono>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dkql/complexity.hpp"
#include "dkql/learners.hpp"
#include "dkql/parallel.hpp"
#include "dkql/rng.hpp"

namespace dkql {

/// Uniform random permutation of 0..n-1 dealt round-robin to m workers.
/// Subsets are disjoint, cover every index, differ in size by at most one,
/// and are sorted.
inline std::vector<std::vector<std::size_t>> random_partition(std::size_t n, std::size_t m, SplitMix64 rng) {
    if (m < 1) throw InputError("worker count must be >= 1");
    if (m > n) throw InputError("worker count " + std::to_string(m) + " exceeds sample count " + std::to_string(n));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    std::vector<std::vector<std::size_t>> parts(m);
    for (std::size_t i = 0; i < n; ++i) parts[i % m].push_back(perm[i]);
    for (auto& p : parts) std::sort(p.begin(), p.end());
    return parts;
}

class WorkerPool {
public:
    WorkerPool(std::vector<std::vector<std::size_t>> partitions, unsigned threads = 1)
        : parts_(std::move(partitions)), threads_(std::max(1u, threads)) {
        if (parts_.empty()) throw InputError("worker pool needs at least one worker");
        for (const auto& p : parts_)
            if (p.empty()) throw InputError("worker pool has an empty subset");
    }

    static WorkerPool random(std::size_t n, std::size_t m, const SplitMix64& rng, unsigned threads = 1) {
        return WorkerPool(random_partition(n, m, rng), threads);
    }

    [[nodiscard]] std::size_t m() const noexcept { return parts_.size(); }
    [[nodiscard]] unsigned threads() const noexcept { return threads_; }
    [[nodiscard]] const std::vector<std::vector<std::size_t>>& partitions() const noexcept { return parts_; }
    [[nodiscard]] const std::vector<WorkerStats>& stats() const noexcept { return stats_; }
    void record(const WorkerStats& s) { stats_.push_back(s); }
    void clear_stats() { stats_.clear(); }

private:
    std::vector<std::vector<std::size_t>> parts_;
    unsigned threads_;
    std::vector<WorkerStats> stats_;
};

struct StageInputs {
    int stage = 1;
    std::span<const Trajectory> data;
    const DtrProblem* problem = nullptr;
    FeatureCase fcase = FeatureCase::MJ;
    KernelParams params;
    std::span<const double> continuation;  ///< per trajectory: max_a Q_{t+1}, zero past the end
    bool cross_predict = true;             ///< produce continuation values for stage t-1
};

struct StageResult {
    int stage = 1;
    StagePolicy synthesized;
    std::vector<StagePolicy> local;                 ///< per worker, unit weights; missing actions have empty lists
    std::vector<std::vector<std::size_t>> rows;     ///< per worker: trajectory ids active at this stage
    std::vector<Vector> labels;                     ///< per worker: labels of the local fit
    std::vector<std::vector<Matrix>> local_h;       ///< [j][k]: worker j's scores of worker k's rows
    std::vector<Matrix> global_h;                   ///< [k]: synthesized scores of worker k's rows
    std::vector<double> continuation;               ///< per trajectory: row max of global_h, else 0
    double entries_exchanged = 0.0;
};

/// One backward stage of the distributed training flow: local fits,
/// cross-worker scoring, weighted synthesis, next labels.
inline StageResult run_stage_distributed(WorkerPool& pool, const StageInputs& in) {
    if (!in.problem) throw InputError("stage inputs need a problem");
    const DtrProblem& problem = *in.problem;
    const int t = in.stage;
    const ActionSet& actions = problem.action_set(t);
    const std::size_t m = pool.m();
    const std::size_t ell = actions.size();
    if (in.continuation.size() != in.data.size()) throw InputError("continuation must have one value per trajectory");

    StageResult res;
    res.stage = t;
    res.local.resize(m);
    res.rows.resize(m);
    res.labels.resize(m);
    std::vector<StageDataset> ds(m);
    std::vector<WorkerStats> stats(m);

    // Local processing: fit on the worker's own rows.
    parallel_for(m, pool.threads(), [&](std::size_t j) {
        const auto start = std::chrono::steady_clock::now();
        ds[j] = build_features(in.data, t, in.fcase, problem.sim, pool.partitions()[j]);
        res.rows[j] = ds[j].row_ids;
        Vector cont(static_cast<Eigen::Index>(ds[j].row_ids.size()));
        for (std::size_t r = 0; r < ds[j].row_ids.size(); ++r)
            cont(static_cast<Eigen::Index>(r)) = in.continuation[ds[j].row_ids[r]];
        ds[j].labels = stage_labels(ds[j].rewards, cont);
        res.labels[j] = ds[j].labels;

        StagePolicy sp;
        sp.stage = t;
        sp.actions = actions;
        OpCounter ops;
        if (!ds[j].row_ids.empty()) {
            if (is_joint(in.fcase)) {
                sp.components.push_back({WeightedModel{krr_fit(ds[j].inputs, ds[j].labels, in.params, &ops), 1.0}});
            } else {
                const auto by = detail::rows_by_action(ds[j], ell);
                sp.components.resize(ell);
                for (std::size_t a = 0; a < ell; ++a)
                    if (!by[a].empty())
                        sp.components[a].push_back({WeightedModel{
                            krr_fit(detail::select_rows(ds[j].inputs, by[a]), detail::select_rows(ds[j].labels, by[a]),
                                    in.params, &ops),
                            1.0}});
            }
        } else {
            sp.components.resize(is_joint(in.fcase) ? 1 : ell);
        }
        res.local[j] = std::move(sp);
        stats[j].stage = t;
        stats[j].worker = static_cast<int>(j);
        stats[j].ops = ops;
        stats[j].fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });

    // Synthesis weights: share of the stage's fitted samples, per component list.
    const std::size_t lists = is_joint(in.fcase) ? 1 : ell;
    std::vector<std::vector<double>> counts(lists, std::vector<double>(m, 0.0));
    for (std::size_t j = 0; j < m; ++j) {
        if (is_joint(in.fcase)) {
            counts[0][j] = static_cast<double>(ds[j].row_ids.size());
        } else {
            for (std::size_t a : ds[j].actions) counts[a][j] += 1.0;
        }
    }
    res.synthesized.stage = t;
    res.synthesized.actions = actions;
    res.synthesized.components.resize(lists);
    std::vector<std::vector<double>> weight(lists, std::vector<double>(m, 0.0));
    for (std::size_t l = 0; l < lists; ++l) {
        double total = 0.0;
        for (double c : counts[l]) total += c;
        if (total == 0.0) {
            if (is_joint(in.fcase)) throw InputError("no trajectory reaches stage " + std::to_string(t));
            throw InputError("no samples took action " + actions.labels[l] + " at stage " + std::to_string(t));
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (counts[l][j] == 0.0) continue;
            weight[l][j] = counts[l][j] / total;
            WeightedModel wm = res.local[j].components[l].front();
            wm.weight = weight[l][j];
            res.synthesized.components[l].push_back(std::move(wm));
        }
    }

    res.continuation.assign(in.data.size(), 0.0);
    std::vector<Matrix> contexts(m);
    if (in.cross_predict) {
        for (std::size_t k = 0; k < m; ++k) {
            std::vector<const Trajectory*> ptrs;
            for (std::size_t i : res.rows[k]) ptrs.push_back(&in.data[i]);
            contexts[k] = build_contexts(ptrs, t, problem.sim, in.fcase);
        }
        // Each worker scores every worker's rows for every action.
        res.local_h.assign(m, std::vector<Matrix>(m));
        parallel_for(m, pool.threads(), [&](std::size_t j) {
            const auto start = std::chrono::steady_clock::now();
            OpCounter ops;
            double sent = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                res.local_h[j][k] = stage_q_values(res.local[j], in.fcase, contexts[k], &ops);
                sent += static_cast<double>(res.local_h[j][k].size());
            }
            stats[j].ops += ops;
            stats[j].entries_sent = sent;
            stats[j].predict_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        });

        // Synthesis in fixed worker order.
        res.global_h.resize(m);
        double rows_total = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            Matrix h = Matrix::Zero(static_cast<Eigen::Index>(res.rows[k].size()), static_cast<Eigen::Index>(ell));
            for (std::size_t j = 0; j < m; ++j) {
                if (is_joint(in.fcase)) {
                    if (weight[0][j] != 0.0) h += weight[0][j] * res.local_h[j][k];
                } else {
                    for (std::size_t a = 0; a < ell; ++a)
                        if (weight[a][j] != 0.0)
                            h.col(static_cast<Eigen::Index>(a)) += weight[a][j] * res.local_h[j][k].col(static_cast<Eigen::Index>(a));
                }
            }
            res.global_h[k] = std::move(h);
            rows_total += static_cast<double>(res.rows[k].size());
        }

        // Each worker's next labels come from the synthesized row maxima.
        for (std::size_t k = 0; k < m; ++k) {
            if (res.rows[k].empty()) continue;
            const Vector mx = max_over_actions(res.global_h[k]);
            for (std::size_t r = 0; r < res.rows[k].size(); ++r)
                res.continuation[res.rows[k][r]] = mx(static_cast<Eigen::Index>(r));
            stats[k].ops.predict_flops += static_cast<double>(res.rows[k].size() * ell);
        }

        res.entries_exchanged = static_cast<double>(m) * rows_total * static_cast<double>(ell);
    }

    for (auto& s : stats) {
        s.flops = s.ops.total();
        pool.record(s);
    }
    if (in.cross_predict) {
        WorkerStats global;
        global.stage = t;
        global.worker = -1;
        global.flops = res.entries_exchanged;  // one multiply-add per exchanged entry
        pool.record(global);
    }
    return res;
}

struct DkrrResult {
    DtrPolicy policy;
    std::vector<StageResult> trace;  ///< filled when requested, stage T first
};

/// Distributed training over a fixed pool. Stage results are kept when
/// `keep_trace` is set.
inline DkrrResult dkrr_dtr_run(std::span<const Trajectory> data, const DtrProblem& problem, FeatureCase c,
                               const KernelParams& params, WorkerPool& pool, bool keep_trace = false) {
    params.validate();
    detail::check_training_input(data, problem, c);
    for (const auto& p : pool.partitions())
        for (std::size_t i : p)
            if (i >= data.size()) throw InputError("partition index outside the data");

    DkrrResult out{DtrPolicy(problem, c, "dkrr"), {}};
    std::vector<double> continuation(data.size(), 0.0);
    for (int t = problem.horizon; t >= 1; --t) {
        StageInputs in;
        in.stage = t;
        in.data = data;
        in.problem = &problem;
        in.fcase = c;
        in.params = params;
        in.continuation = continuation;
        in.cross_predict = t > 1;
        StageResult res = run_stage_distributed(pool, in);
        continuation = res.continuation;
        out.policy.set_stage(res.synthesized);
        if (keep_trace) out.trace.push_back(std::move(res));
    }
    return out;
}

inline DtrPolicy dkrr_dtr_train(std::span<const Trajectory> data, const DtrProblem& problem, FeatureCase c,
                                const KernelParams& params, std::size_t m, const SplitMix64& rng, unsigned threads = 1) {
    if (data.empty()) throw InputError("training data is empty");
    WorkerPool pool = WorkerPool::random(data.size(), m, rng, threads);
    return dkrr_dtr_run(data, problem, c, params, pool).policy;
}

/// Work along the critical path: per stage, the busiest worker plus the
/// synthesis step.
inline double critical_path_flops(const std::vector<WorkerStats>& stats) {
    double total = 0.0;
    std::vector<int> stages;
    for (const auto& s : stats)
        if (std::find(stages.begin(), stages.end(), s.stage) == stages.end()) stages.push_back(s.stage);
    for (int t : stages) {
        double worst = 0.0;
        for (const auto& s : stats) {
            if (s.stage != t) continue;
            if (s.worker < 0)
                total += s.flops;
            else
                worst = std::max(worst, s.flops);
        }
        total += worst;
    }
    return total;
}

}  // namespace dkql

#endif  // DKQL_DISTRIBUTED_HPP
