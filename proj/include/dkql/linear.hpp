#ifndef DKQL_LINEAR_HPP
#define DKQL_LINEAR_HPP

#include <string>

#include <Eigen/QR>

#include "dkql/kernel.hpp"

namespace dkql {

/// f(x) = intercept + slopes . x
struct LinearModel {
    Vector slopes;
    double intercept = 0.0;

    [[nodiscard]] Eigen::Index dim() const noexcept { return slopes.size(); }
};

/// Least squares with an unpenalized intercept. Slopes are the minimum-norm
/// solution on the centered design, so rank-deficient designs (duplicated
/// columns, constant columns) are handled without a ridge term.
inline LinearModel linear_fit(const Matrix& X, const Vector& y) {
    const Eigen::Index n = X.rows();
    if (n < 1) throw InputError("linear_fit: need at least one sample");
    if (y.size() != n) throw InputError("linear_fit: input/label count mismatch");
    if (!X.allFinite() || !y.allFinite()) throw InputError("linear_fit: non-finite inputs or labels");

    const Eigen::RowVectorXd x_mean = X.colwise().mean();
    const double y_mean = y.mean();
    const Matrix Xc = X.rowwise() - x_mean;
    const Vector yc = y.array() - y_mean;

    LinearModel model;
    if (X.cols() == 0) {
        model.slopes = Vector(0);
    } else {
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Xc);
        // Columns that are constant after centering must get zero weight; the
        // default threshold is relative to the largest pivot.
        cod.setThreshold(1e-12);
        model.slopes = cod.solve(yc);
    }
    model.intercept = y_mean - x_mean.dot(model.slopes);
    return model;
}

inline Vector linear_predict(const LinearModel& model, const Matrix& Xq) {
    if (Xq.rows() > 0 && Xq.cols() != model.dim())
        throw InputError("linear_predict: query dimension " + std::to_string(Xq.cols()) + " != model dimension " +
                         std::to_string(model.dim()));
    if (Xq.rows() == 0) return Vector(0);
    return (Xq * model.slopes).array() + model.intercept;
}

}  // namespace dkql

#endif  // DKQL_LINEAR_HPP
