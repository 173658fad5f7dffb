#include "pcarecon/diagnostics.hpp"

#include <cmath>
#include <numbers>

#include "pcarecon/kernels.hpp"
#include "pcarecon/linalg.hpp"

namespace pcarecon {

namespace {

void require_same_columns(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw Error(ErrorKind::DimensionMismatch, "models have different variable counts (" +
                                                      std::to_string(a.cols()) + " vs " + std::to_string(b.cols()) + ")");
}

}  // namespace

double alpha_metric(const Matrix& estimated, const Matrix& truth) {
    require_same_columns(estimated, truth);
    const Matrix q = linalg::row_space_basis(truth);
    double alpha = 0.0;
    for (Eigen::Index i = 0; i < estimated.rows(); ++i) {
        const double norm = estimated.row(i).norm();
        if (norm == 0.0) continue;
        const Eigen::RowVectorXd row = estimated.row(i) / norm;
        const Eigen::RowVectorXd off = row - (row * q.transpose()) * q;
        alpha += off.norm();
    }
    return alpha;
}

double alpha_metric(const ConstraintModel& estimated, const ConstraintModel& truth) {
    return alpha_metric(estimated.matrix(), truth.matrix());
}

double subspace_angle(const Matrix& estimated, const Matrix& truth) {
    require_same_columns(estimated, truth);
    Matrix qa = linalg::row_space_basis(estimated);
    Matrix qb = linalg::row_space_basis(truth);
    if (qa.rows() == 0 || qb.rows() == 0) return 0.0;
    if (qa.rows() > qb.rows()) std::swap(qa, qb);
    // Sines of the principal angles from the part of the smaller space
    // outside the larger one; cosines from the overlap.
    const Matrix outside = qa - (qa * qb.transpose()) * qb;
    const double max_sine = std::min(1.0, linalg::singular_values(outside)(0));
    double angle;
    if (max_sine < std::sqrt(0.5)) {
        angle = std::asin(max_sine);
    } else {
        const Vector cosines = linalg::singular_values(Matrix(qa * qb.transpose()));
        angle = std::acos(std::clamp(cosines.minCoeff(), 0.0, 1.0));
    }
    return angle * 180.0 / std::numbers::pi;
}

double subspace_angle(const ConstraintModel& estimated, const ConstraintModel& truth) {
    return subspace_angle(estimated.matrix(), truth.matrix());
}

Matrix regression_matrix(const ConstraintModel& model, const Names& dependent) {
    const int m = model.constraints();
    if (static_cast<int>(dependent.size()) != m)
        throw Error(ErrorKind::DimensionMismatch, std::to_string(dependent.size()) + " dependent variables for " +
                                                      std::to_string(m) + " constraints");
    std::vector<Eigen::Index> d_idx, i_idx;
    for (const auto& name : dependent) d_idx.push_back(model.index_of(name));
    for (int j = 0; j < model.variables(); ++j)
        if (std::find(d_idx.begin(), d_idx.end(), j) == d_idx.end()) i_idx.push_back(j);
    if (static_cast<int>(d_idx.size() + i_idx.size()) != model.variables())
        throw Error(ErrorKind::InvalidInput, "duplicate dependent variable");
    const Matrix a_d = model.matrix()(Eigen::all, d_idx);
    const Matrix a_i = model.matrix()(Eigen::all, i_idx);
    Eigen::FullPivLU<Matrix> lu(a_d);
    if (m > 0 && (!lu.isInvertible() || !(lu.rcond() >= 1e-12)))
        throw Error(ErrorKind::SingularDependentBlock, "dependent block of the constraint matrix is singular");
    return -lu.solve(a_i);
}

RegressionComparison regression_compare(const ConstraintModel& estimated, const ConstraintModel& truth,
                                        const Names& dependent) {
    require_same_columns(estimated.matrix(), truth.matrix());
    if (estimated.constraints() != truth.constraints())
        throw Error(ErrorKind::DimensionMismatch, "models have different constraint counts");
    if (estimated.variable_names() != truth.variable_names())
        throw Error(ErrorKind::InvalidInput, "models use different variable names");
    RegressionComparison out;
    out.truth = regression_matrix(truth, dependent);
    out.estimated = regression_matrix(estimated, dependent);
    out.max_abs_difference = out.truth.size() ? (out.truth - out.estimated).cwiseAbs().maxCoeff() : 0.0;
    out.dependent = dependent;
    for (const auto& name : truth.variable_names())
        if (std::find(dependent.begin(), dependent.end(), name) == dependent.end()) out.independent.push_back(name);
    return out;
}

Vector rmse_report(const Matrix& estimates, const Matrix& truth) {
    if (estimates.rows() != truth.rows() || estimates.cols() != truth.cols())
        throw Error(ErrorKind::DimensionMismatch, "estimate and truth shapes differ");
    return kernels::row_mean_square(estimates - truth).cwiseSqrt();
}

double max_constraint_residual(const Matrix& a, const Matrix& x) {
    if (a.rows() == 0 || x.size() == 0) return 0.0;
    const double scale = x.cwiseAbs().maxCoeff();
    const Matrix r = kernels::multiply_columns(a, x);
    return r.cwiseAbs().maxCoeff() / (scale > 0.0 ? scale : 1.0);
}

}  // namespace pcarecon
