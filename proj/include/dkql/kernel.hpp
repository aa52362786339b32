#ifndef DKQL_KERNEL_HPP
#define DKQL_KERNEL_HPP

#include <cmath>
#include <span>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "dkql/errors.hpp"

namespace dkql {

/// Points are stored one per row.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct KernelParams {
    double sigma = 1.0;   ///< Gaussian width
    double lambda = 1.0;  ///< ridge coefficient

    void validate() const {
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw InputError("kernel width sigma must be positive, got " + std::to_string(sigma));
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw InputError("ridge coefficient lambda must be positive, got " + std::to_string(lambda));
    }

    friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

/// Representer form of a fitted KRR function: f(x) = sum_i alphas[i] k(support_i, x).
struct KernelModel {
    Matrix support;
    Vector alphas;
    KernelParams params;

    [[nodiscard]] Eigen::Index size() const noexcept { return support.rows(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return support.cols(); }
};

/// Nominal operation counts used to check the cost model. A kernel value
/// costs `dim` flops, a Cholesky factorization n^3/3 and a pair of
/// triangular solves 2 n^2 per right-hand side.
struct OpCounter {
    double kernel_flops = 0.0;
    double factor_flops = 0.0;
    double solve_flops = 0.0;
    double predict_flops = 0.0;

    [[nodiscard]] double fit_flops() const noexcept { return kernel_flops + factor_flops + solve_flops; }
    [[nodiscard]] double total() const noexcept { return fit_flops() + predict_flops; }

    OpCounter& operator+=(const OpCounter& o) noexcept {
        kernel_flops += o.kernel_flops;
        factor_flops += o.factor_flops;
        solve_flops += o.solve_flops;
        predict_flops += o.predict_flops;
        return *this;
    }
};

namespace detail {

inline void check_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw InputError("kernel width sigma must be positive");
}

/// exp(e) for e <= 0, with values below e^-40 (about 4e-18) set to zero.
/// Such entries are below rounding next to the unit diagonal, and keeping
/// them lets the Cholesky update underflow into subnormals, which made
/// small-width fits roughly ten times slower.
inline double gaussian_from_exponent(double e) noexcept { return e < -40.0 ? 0.0 : std::exp(e); }

}  // namespace detail

/// exp(-|x - x2|^2 / (2 sigma^2))
template <class A, class B>
double gaussian_kernel(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& x2, double sigma) {
    detail::check_sigma(sigma);
    if (x.size() != x2.size())
        throw InputError("gaussian_kernel: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                         std::to_string(x2.size()) + ")");
    double d2 = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double d = x(k) - x2(k);
        d2 += d * d;
    }
    const double scale = -1.0 / (2.0 * sigma * sigma);
    return detail::gaussian_from_exponent(d2 * scale);
}

inline double gaussian_kernel(std::span<const double> x, std::span<const double> x2, double sigma) {
    using Map = Eigen::Map<const Eigen::VectorXd>;
    return gaussian_kernel(Map(x.data(), static_cast<Eigen::Index>(x.size())),
                           Map(x2.data(), static_cast<Eigen::Index>(x2.size())), sigma);
}

/// K(i, j) = k(X.row(i), X2.row(j)). Squared distances are accumulated
/// coordinate by coordinate in a fixed order, so K(X, X) has an exact unit
/// diagonal and K(X, X2) == K(X2, X)^T bit for bit.
inline Matrix kernel_matrix(const Matrix& X, const Matrix& X2, double sigma, OpCounter* counter = nullptr) {
    detail::check_sigma(sigma);
    if (X.cols() != X2.cols())
        throw InputError("kernel_matrix: dimension mismatch (" + std::to_string(X.cols()) + " vs " +
                         std::to_string(X2.cols()) + ")");
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X2.rows();
    const Eigen::Index d = X.cols();
    const double scale = -1.0 / (2.0 * sigma * sigma);
    // Column-major copies so every point is contiguous.
    const Matrix A = X.transpose();
    const Matrix B = X2.transpose();
    Matrix K(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double* b = B.col(j).data();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double* a = A.col(i).data();
            double d2 = 0.0;
            for (Eigen::Index k = 0; k < d; ++k) {
                const double diff = a[k] - b[k];
                d2 += diff * diff;
            }
            K(i, j) = detail::gaussian_from_exponent(d2 * scale);
        }
    }
    if (counter) counter->kernel_flops += static_cast<double>(n) * static_cast<double>(p) * static_cast<double>(d);
    return K;
}

/// Solves (K + n lambda I) alpha = y. Cholesky first; one retry with a
/// diagonal jitter of 1e-10 trace(K) before giving up.
inline KernelModel krr_fit(Matrix X, const Vector& y, KernelParams params, OpCounter* counter = nullptr) {
    params.validate();
    const Eigen::Index n = X.rows();
    if (n < 1) throw InputError("krr_fit: need at least one sample");
    if (y.size() != n)
        throw InputError("krr_fit: " + std::to_string(n) + " inputs but " + std::to_string(y.size()) + " labels");
    if (!X.allFinite() || !y.allFinite()) throw InputError("krr_fit: non-finite inputs or labels");

    Matrix K = kernel_matrix(X, X, params.sigma, counter);
    const double trace = K.trace();
    K.diagonal().array() += static_cast<double>(n) * params.lambda;

    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success) {
        K.diagonal().array() += 1e-10 * trace;
        llt.compute(K);
        if (llt.info() != Eigen::Success)
            throw NumericalError("krr_fit: kernel system is not positive definite (n=" + std::to_string(n) + ")");
    }
    Vector alphas = llt.solve(y);
    if (!alphas.allFinite()) throw NumericalError("krr_fit: non-finite dual coefficients");

    if (counter) {
        const auto nd = static_cast<double>(n);
        counter->factor_flops += nd * nd * nd / 3.0;
        counter->solve_flops += 2.0 * nd * nd;
    }
    return KernelModel{std::move(X), std::move(alphas), params};
}

inline Vector krr_predict(const KernelModel& model, const Matrix& Xq, OpCounter* counter = nullptr) {
    if (Xq.rows() > 0 && Xq.cols() != model.dim())
        throw InputError("krr_predict: query dimension " + std::to_string(Xq.cols()) + " != model dimension " +
                         std::to_string(model.dim()));
    if (Xq.rows() == 0) return Vector(0);
    const Matrix K = kernel_matrix(Xq, model.support, model.params.sigma);
    if (counter)
        counter->predict_flops += static_cast<double>(Xq.rows()) * static_cast<double>(model.size()) *
                                  static_cast<double>(model.dim() + 1);
    return K * model.alphas;
}

/// Predictions of a joint state-action model whose last input coordinate
/// is the action code. Returns a (contexts.rows() x codes.size()) matrix
/// with entry (k, a) = f([contexts.row(k), codes[a]]).
///
/// The Gaussian kernel factorizes over the context and action coordinates,
/// so all actions are scored with one context kernel block and a product.
inline Matrix krr_predict_actions(const KernelModel& model, const Matrix& contexts, std::span<const double> codes,
                                  OpCounter* counter = nullptr) {
    const Eigen::Index ctx_dim = model.dim() - 1;
    if (ctx_dim < 0) throw InputError("krr_predict_actions: model has no action coordinate");
    if (contexts.rows() > 0 && contexts.cols() != ctx_dim)
        throw InputError("krr_predict_actions: context dimension " + std::to_string(contexts.cols()) +
                         " != model context dimension " + std::to_string(ctx_dim));
    const auto ell = static_cast<Eigen::Index>(codes.size());
    const Eigen::Index n = model.size();
    const double sigma = model.params.sigma;
    const double scale = -1.0 / (2.0 * sigma * sigma);

    Matrix weighted(n, ell);  // alpha_i * k_action(code_a, support_i)
    for (Eigen::Index a = 0; a < ell; ++a)
        for (Eigen::Index i = 0; i < n; ++i) {
            const double diff = codes[static_cast<std::size_t>(a)] - model.support(i, ctx_dim);
            weighted(i, a) = model.alphas(i) * detail::gaussian_from_exponent(diff * diff * scale);
        }

    Matrix out;
    if (ctx_dim == 0) {
        out = Matrix::Ones(contexts.rows(), n) * weighted;
    } else {
        const Matrix E = kernel_matrix(contexts, model.support.leftCols(ctx_dim), sigma);
        out = E * weighted;
    }
    if (counter)
        counter->predict_flops += static_cast<double>(contexts.rows()) * static_cast<double>(ell) *
                                  static_cast<double>(n) * static_cast<double>(model.dim() + 1);
    return out;
}

}  // namespace dkql

#endif  // DKQL_KERNEL_HPP
