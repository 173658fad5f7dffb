#include "pcarecon/covariance_mle.hpp"

#include <cmath>
#include <limits>

#include "pcarecon/kernels.hpp"

namespace pcarecon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Residual second moment below this (relative to the data) means the
// residuals are exactly zero and the log-det term is unbounded below.
constexpr double kDegenerateResidual = 1e-20;

}  // namespace

int covariance_parameters(CovarianceStructure s, int n) {
    switch (s) {
        case CovarianceStructure::ScaledIdentity: return 1;
        case CovarianceStructure::Diagonal: return n;
        case CovarianceStructure::Full: return n * (n + 1) / 2;
    }
    return n * (n + 1) / 2;
}

bool covariance_identifiable(CovarianceStructure s, int n, int m) {
    return m >= 1 && covariance_parameters(s, n) <= m * (m + 1) / 2;
}

CovarianceObjective::CovarianceObjective(Matrix a_hat, const Matrix& second_moment, int samples,
                                         CovarianceStructure structure)
    : a_(std::move(a_hat)), samples_(static_cast<double>(samples)), structure_(structure) {
    if (second_moment.rows() != a_.cols() || second_moment.cols() != a_.cols())
        throw Error(ErrorKind::DimensionMismatch, "second moment size differs from constraint columns");
    s_r_ = a_ * second_moment * a_.transpose();
    s_r_ = 0.5 * (s_r_ + s_r_.transpose());
}

double CovarianceObjective::value(const Matrix& sigma) const {
    const Matrix v = a_ * sigma * a_.transpose();
    Eigen::LLT<Matrix> llt(v);
    if (llt.info() != Eigen::Success) return kInf;
    const Matrix l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    const double quad = llt.solve(s_r_).trace();
    return samples_ * (log_det + quad);
}

Matrix CovarianceObjective::gradient(const Matrix& sigma) const {
    const Matrix v = a_ * sigma * a_.transpose();
    Eigen::LLT<Matrix> llt(v);
    const Eigen::Index m = v.rows();
    if (llt.info() != Eigen::Success)
        return Matrix::Constant(sigma.rows(), sigma.cols(), std::numeric_limits<double>::quiet_NaN());
    const Matrix v_inv = llt.solve(Matrix::Identity(m, m));
    const Matrix inner = v_inv - v_inv * s_r_ * v_inv;
    Matrix g = samples_ * a_.transpose() * inner * a_;
    return 0.5 * (g + g.transpose());
}

Vector CovarianceObjective::pack(const Matrix& sigma) const {
    const Eigen::Index n = sigma.rows();
    if (structure_ == CovarianceStructure::ScaledIdentity)
        return Vector::Constant(1, std::log(sigma.diagonal().mean()));
    if (structure_ == CovarianceStructure::Diagonal) return sigma.diagonal().array().log().matrix();
    Eigen::LLT<Matrix> llt(sigma);
    const Matrix l = llt.matrixL();
    Vector theta(n * (n + 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = j; i < n; ++i) theta(k++) = i == j ? std::log(l(i, i)) : l(i, j);
    return theta;
}

Matrix CovarianceObjective::unpack(const Vector& theta) const {
    const Eigen::Index n = a_.cols();
    if (structure_ == CovarianceStructure::ScaledIdentity) return std::exp(theta(0)) * Matrix::Identity(n, n);
    if (structure_ == CovarianceStructure::Diagonal) return theta.array().exp().matrix().asDiagonal();
    Matrix l = Matrix::Zero(n, n);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = j; i < n; ++i) l(i, j) = i == j ? std::exp(theta(k++)) : theta(k++);
    return l * l.transpose();
}

Vector CovarianceObjective::gradient_at(const Vector& theta) const {
    const Eigen::Index n = a_.cols();
    const Matrix sigma = unpack(theta);
    const Matrix g = gradient(sigma);
    if (structure_ == CovarianceStructure::ScaledIdentity) return Vector::Constant(1, g.trace() * sigma(0, 0));
    if (structure_ == CovarianceStructure::Diagonal) return g.diagonal().cwiseProduct(sigma.diagonal());

    // S = L L^T: df/dL = 2 G L on the lower triangle; diagonal is exp-parameterized.
    Matrix l = Matrix::Zero(n, n);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = j; i < n; ++i) l(i, j) = i == j ? std::exp(theta(k++)) : theta(k++);
    const Matrix dl = 2.0 * g * l;
    Vector out(theta.size());
    k = 0;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = j; i < n; ++i) out(k++) = i == j ? dl(i, i) * l(i, i) : dl(i, j);
    return out;
}

namespace {

// Coordinate pattern search used when gradient steps fail.
MinimizerResult pattern_search(const std::function<double(const Vector&)>& f, Vector x, double fx,
                               const MinimizerOptions& options) {
    double step = 0.5;
    int it = 0;
    while (step > 1e-10 && it < options.max_iterations) {
        bool improved = false;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            for (double dir : {1.0, -1.0}) {
                Vector trial = x;
                trial(i) += dir * step;
                const double ft = f(trial);
                if (std::isfinite(ft) && ft < fx) {
                    x = trial;
                    fx = ft;
                    improved = true;
                    break;
                }
            }
        }
        ++it;
        if (!improved) step *= 0.5;
    }
    return {x, fx, it, step <= 1e-10, true};
}

}  // namespace

MinimizerResult minimize_bfgs(const std::function<double(const Vector&)>& f,
                              const std::function<Vector(const Vector&)>& grad, Vector x0,
                              const MinimizerOptions& options) {
    const Eigen::Index d = x0.size();
    Vector x = std::move(x0);
    double fx = f(x);
    if (!std::isfinite(fx)) return {x, fx, 0, false, false};
    Vector g = grad(x);
    Matrix h = Matrix::Identity(d, d);
    int small_steps = 0;
    for (int it = 1; it <= options.max_iterations; ++it) {
        if (!g.allFinite()) {
            auto r = pattern_search(f, x, fx, options);
            r.iterations += it;
            return r;
        }
        if (g.lpNorm<Eigen::Infinity>() == 0.0) return {x, fx, it, true, false};
        Vector dir = -h * g;
        double slope = g.dot(dir);
        if (!(slope < 0.0)) {
            h.setIdentity();
            dir = -g;
            slope = -g.squaredNorm();
        }
        double step = 1.0;
        Vector x_new;
        double f_new = kInf;
        bool accepted = false;
        for (int k = 0; k < 60; ++k) {
            x_new = x + step * dir;
            f_new = f(x_new);
            if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // No descent along the quasi-Newton direction: either stationary
            // to rounding, or the gradient is misleading.
            auto r = pattern_search(f, x, fx, options);
            r.iterations += it;
            if (r.value >= fx - options.relative_tolerance * std::max(1.0, std::abs(fx))) {
                r.x = x;
                r.value = fx;
                r.converged = true;
            }
            return r;
        }
        const Vector g_new = grad(x_new);
        const Vector s = x_new - x;
        const Vector y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (it == 1) h *= sy / y.squaredNorm();
            const double rho = 1.0 / sy;
            const Matrix eye = Matrix::Identity(d, d);
            h = (eye - rho * s * y.transpose()) * h * (eye - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        const double decrease = (fx - f_new) / std::max(1.0, std::abs(fx));
        x = x_new;
        fx = f_new;
        g = g_new;
        small_steps = decrease < options.relative_tolerance ? small_steps + 1 : 0;
        if (small_steps >= 2) return {x, fx, it, true, false};
    }
    return {x, fx, options.max_iterations, false, false};
}

CovarianceFit fit_covariance(const Matrix& a_hat, const Matrix& second_moment, int samples,
                             CovarianceStructure structure, const NoiseModel& init, const MinimizerOptions& options) {
    const int n = static_cast<int>(a_hat.cols());
    const int m = static_cast<int>(a_hat.rows());
    if (!covariance_identifiable(structure, n, m)) {
        throw Error(ErrorKind::NotIdentifiable,
                    std::to_string(covariance_parameters(structure, n)) + " covariance parameters exceed m(m+1)/2 = " +
                        std::to_string(m * (m + 1) / 2));
    }
    if (init.size() != n) throw Error(ErrorKind::DimensionMismatch, "initial covariance size differs from model");

    CovarianceObjective objective(a_hat, second_moment, samples, structure);
    const Matrix& s_r = objective.residual_moment();
    const double scale = second_moment.trace() * a_hat.squaredNorm();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s_r, Eigen::EigenvaluesOnly);
    if (!(scale > 0.0) || eig.eigenvalues().minCoeff() <= kDegenerateResidual * scale) {
        throw Error(ErrorKind::OptimizerDiverged,
                    "residual covariance is singular (noise-free data?); log-det objective is unbounded below");
    }

    Matrix start = init.sigma();
    if (structure != CovarianceStructure::Full) start = Matrix(start.diagonal().asDiagonal());
    const auto res = minimize_bfgs([&](const Vector& t) { return objective.value_at(t); },
                                   [&](const Vector& t) { return objective.gradient_at(t); },
                                   objective.pack(start), options);
    if (!std::isfinite(res.value) || !res.x.allFinite())
        throw Error(ErrorKind::OptimizerDiverged, "covariance objective became non-finite");
    Matrix sigma = objective.unpack(res.x);
    try {
        NoiseModel noise = structure == CovarianceStructure::Full ? NoiseModel::full(sigma)
                           : structure == CovarianceStructure::Diagonal
                               ? NoiseModel::from_variances(sigma.diagonal())
                               : NoiseModel::scaled_identity(n, sigma(0, 0));
        return {std::move(noise), res.value, res.iterations};
    } catch (const Error&) {
        throw Error(ErrorKind::OptimizerDiverged, "estimated covariance lost positive definiteness");
    }
}

NoiseModel estimate_covariance_mle(const ConstraintModel& model, const DataSet& data, CovarianceStructure structure,
                                   const NoiseModel& init, const MinimizerOptions& options) {
    if (model.variables() != data.variables())
        throw Error(ErrorKind::DimensionMismatch, "model and data variable counts differ");
    const Matrix s_y = kernels::second_moment(data.measurements());
    return fit_covariance(model.matrix(), s_y, data.samples(), structure, init, options).noise;
}

}  // namespace pcarecon
