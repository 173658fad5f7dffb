#pragma once

// Quality metrics comparing an estimated constraint model with the true one.
// Estimated models are only defined up to A_hat = Q A, so every metric
// compares row spaces rather than entries.

#include "pcarecon/model.hpp"

namespace pcarecon {

/// Sum over estimated rows (normalized to unit length) of the distance to
/// their orthogonal projection onto row(truth).
double alpha_metric(const ConstraintModel& estimated, const ConstraintModel& truth);
double alpha_metric(const Matrix& estimated, const Matrix& truth);

/// Largest principal angle between the row spaces, in degrees.
double subspace_angle(const ConstraintModel& estimated, const ConstraintModel& truth);
double subspace_angle(const Matrix& estimated, const Matrix& truth);

struct RegressionComparison {
    Matrix truth;      // R = -A_D^-1 A_I
    Matrix estimated;  // R_hat = -A_hat_D^-1 A_hat_I
    double max_abs_difference = 0.0;
    Names dependent;
    Names independent;
};

/// Throws DimensionMismatch, SingularDependentBlock.
RegressionComparison regression_compare(const ConstraintModel& estimated, const ConstraintModel& truth,
                                        const Names& dependent);

/// R = -A_D^-1 A_I for one model. Throws SingularDependentBlock.
Matrix regression_matrix(const ConstraintModel& model, const Names& dependent);

/// Per-variable sqrt(mean((estimate - truth)^2)). Throws DimensionMismatch.
Vector rmse_report(const Matrix& estimates, const Matrix& truth);

/// Max |A X| relative to max |X|.
double max_constraint_residual(const Matrix& a, const Matrix& x);

}  // namespace pcarecon
