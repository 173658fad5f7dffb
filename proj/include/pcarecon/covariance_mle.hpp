#pragma once

// Maximum-likelihood estimation of the measurement error covariance from
// constraint residuals r(k) = A y(k):
//
//   f(S) = N log|A S A^T| + sum_k r(k)^T (A S A^T)^-1 r(k)
//
// minimised over diagonal or full S with an unconstrained parameterization
// (log-variance(s), or a log-diagonal Cholesky factor) and a BFGS minimizer.

#include <functional>

#include "pcarecon/model.hpp"

namespace pcarecon {

enum class CovarianceStructure { ScaledIdentity, Diagonal, Full };

/// Number of free parameters of a covariance with this structure.
int covariance_parameters(CovarianceStructure s, int n);

/// Residual covariance of m constraints carries at most m(m+1)/2 elements.
bool covariance_identifiable(CovarianceStructure s, int n, int m);

/// Objective and gradient for fixed A and data second moment.
class CovarianceObjective {
public:
    /// `second_moment` is Y Y^T / N; `samples` is N.
    CovarianceObjective(Matrix a_hat, const Matrix& second_moment, int samples, CovarianceStructure structure);

    double value(const Matrix& sigma) const;
    /// df/dS as a symmetric n x n matrix.
    Matrix gradient(const Matrix& sigma) const;

    Vector pack(const Matrix& sigma) const;
    Matrix unpack(const Vector& theta) const;
    double value_at(const Vector& theta) const { return value(unpack(theta)); }
    Vector gradient_at(const Vector& theta) const;

    const Matrix& residual_moment() const { return s_r_; }
    int variables() const { return static_cast<int>(a_.cols()); }

private:
    Matrix a_;
    Matrix s_r_;
    double samples_;
    CovarianceStructure structure_;
};

struct MinimizerOptions {
    double relative_tolerance = 1e-8;
    int max_iterations = 2000;
};

struct MinimizerResult {
    Vector x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    bool used_fallback = false;
};

/// Quasi-Newton (BFGS, Armijo backtracking). Falls back to a coordinate
/// pattern search when the gradient is unusable or the line search stalls.
MinimizerResult minimize_bfgs(const std::function<double(const Vector&)>& f,
                              const std::function<Vector(const Vector&)>& grad, Vector x0,
                              const MinimizerOptions& options = {});

struct CovarianceFit {
    NoiseModel noise;
    double objective = 0.0;
    int iterations = 0;
};

/// Throws NotIdentifiable, OptimizerDiverged.
CovarianceFit fit_covariance(const Matrix& a_hat, const Matrix& second_moment, int samples,
                             CovarianceStructure structure, const NoiseModel& init,
                             const MinimizerOptions& options = {});

NoiseModel estimate_covariance_mle(const ConstraintModel& model, const DataSet& data, CovarianceStructure structure,
                                   const NoiseModel& init, const MinimizerOptions& options = {});

}  // namespace pcarecon
