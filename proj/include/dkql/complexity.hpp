#ifndef DKQL_COMPLEXITY_HPP
#define DKQL_COMPLEXITY_HPP

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "dkql/features.hpp"
#include "dkql/trajectory.hpp"

namespace dkql {

/// Inputs of the analytic training-cost model of distributed Q-learning.
struct ComplexityInputs {
    int T = 1;
    std::vector<double> ell;    ///< actions per stage
    std::vector<double> kappa;  ///< kernel evaluation cost per stage
    double N = 1.0;             ///< total sample count

    void validate() const {
        if (T < 1) throw InputError("complexity: horizon must be positive");
        if (ell.size() != static_cast<std::size_t>(T) || kappa.size() != static_cast<std::size_t>(T))
            throw InputError("complexity: need one action count and one kappa per stage");
        for (std::size_t t = 0; t < ell.size(); ++t)
            if (!(ell[t] > 0.0) || !(kappa[t] > 0.0)) throw InputError("complexity: ell and kappa must be positive");
        if (!(N > 0.0)) throw InputError("complexity: N must be positive");
    }

    [[nodiscard]] double sum_ell() const { return std::accumulate(ell.begin(), ell.end(), 0.0); }

    [[nodiscard]] double sum_ell_kappa() const {
        double s = 0.0;
        for (std::size_t t = 0; t < ell.size(); ++t) s += ell[t] * (1.0 + kappa[t]);
        return s;
    }
};

/// Omega(m) = T N^3/m^3 + (sum ell_t (1 + kappa_t)) N^2/m + (sum ell_t) N m
inline double training_complexity(const ComplexityInputs& in, double m) {
    in.validate();
    if (!(m >= 1.0)) throw InputError("complexity: m must be >= 1");
    const double N = in.N;
    return in.T * N * N * N / (m * m * m) + in.sum_ell_kappa() * N * N / m + in.sum_ell() * N * m;
}

/// Closed-form estimate of the worker count minimizing Omega.
inline double optimal_workers(const ComplexityInputs& in) {
    in.validate();
    const double a = in.sum_ell_kappa();
    const double b = in.sum_ell();
    return std::sqrt((std::sqrt(a * a + 12.0 * in.T * b) + a) / (2.0 * b)) * std::sqrt(in.N);
}

/// Cost-model inputs for a problem: kappa_t is the regression input
/// dimension at stage t.
inline ComplexityInputs complexity_inputs(const DtrProblem& problem, FeatureCase c, double N) {
    ComplexityInputs in;
    in.T = problem.horizon;
    in.N = N;
    for (int t = 1; t <= problem.horizon; ++t) {
        in.ell.push_back(static_cast<double>(problem.action_set(t).size()));
        in.kappa.push_back(static_cast<double>(input_dim(problem.sim, c, t)));
    }
    return in;
}

}  // namespace dkql

#endif  // DKQL_COMPLEXITY_HPP
