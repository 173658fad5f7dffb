#pragma once

// Constraint identification and denoising by PCA.
//
// Data are never mean-centered: constraints are homogeneous (A x = 0), and
// the second-moment matrix Y Y^T / N is what carries them.

#include <optional>

#include "pcarecon/model.hpp"

namespace pcarecon {

inline constexpr double kDefaultOrderTolerance = 0.1;

/// Largest m whose trailing m values each lie in [1-tol, 1+tol] and whose
/// mean lies in [1-tol/2, 1+tol/2]. Zero when no m qualifies.
int detect_order(const Vector& spectrum, double tolerance = kDefaultOrderTolerance);

/// Result of one Cholesky-scaled PCA pass; shared by the PCA, IPCA and
/// known-constraint identifiers.
struct ScaledPca {
    Matrix a_hat;     // order x n, U2s^T L^-1
    Matrix x_hat;     // n x N, L U1s U1s^T L^-1 Y
    Vector spectrum;  // singular values of L^-1 Y / sqrt(N)
    Matrix u;         // left singular vectors in the scaled space
};

/// Scaled PCA with `order` trailing directions as constraints.
ScaledPca scaled_pca(const Matrix& y, const NoiseModel& noise, int order);

/// PCA identification with a known covariance. When `order` is absent it is
/// detected from the scaled spectrum with `tolerance`.
/// Throws CholeskyFailure, OrderOutOfRange.
IdentificationResult pca_identify(const DataSet& data, const NoiseModel& noise, std::optional<int> order = std::nullopt,
                                  double tolerance = kDefaultOrderTolerance);

/// Rank-p reconstruction sqrt(N) U1 S1 V1^T of Y.
Matrix pca_denoise(const DataSet& data, int p);

}  // namespace pcarecon
