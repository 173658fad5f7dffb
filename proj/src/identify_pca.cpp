#include "pcarecon/identify_pca.hpp"

#include <cmath>

#include "pcarecon/kernels.hpp"
#include "pcarecon/linalg.hpp"

namespace pcarecon {

int detect_order(const Vector& spectrum, double tolerance) {
    const Eigen::Index n = spectrum.size();
    int best = 0;
    double sum = 0.0;
    for (Eigen::Index m = 1; m <= n; ++m) {
        const double v = spectrum(n - m);
        if (v < 1.0 - tolerance || v > 1.0 + tolerance) break;
        sum += v;
        const double mean = sum / static_cast<double>(m);
        if (std::abs(mean - 1.0) <= tolerance / 2.0) best = static_cast<int>(m);
    }
    return best;
}

ScaledPca scaled_pca(const Matrix& y, const NoiseModel& noise, int order) {
    const Eigen::Index n = y.rows();
    if (noise.size() != n) throw Error(ErrorKind::DimensionMismatch, "noise size differs from data rows");
    if (order < 0 || order >= n)
        throw Error(ErrorKind::OrderOutOfRange, "order " + std::to_string(order) + " outside [0, n)");
    const auto l = noise.cholesky_factor().triangularView<Eigen::Lower>();
    const Matrix y_s = l.solve(y);
    const double sqrt_n = std::sqrt(static_cast<double>(y.cols()));
    auto svd = linalg::left_svd(y_s / sqrt_n);

    ScaledPca out;
    out.spectrum = svd.s;
    const Matrix u2 = svd.u.rightCols(order);
    // A_hat = U2^T L^-1, i.e. the transpose of L^-T U2.
    out.a_hat = noise.cholesky_factor().transpose().triangularView<Eigen::Upper>().solve(u2).transpose();
    const Matrix projector = Matrix::Identity(n, n) - u2 * u2.transpose();
    out.x_hat = l * kernels::multiply_columns(projector, y_s);
    out.u = std::move(svd.u);
    return out;
}

IdentificationResult pca_identify(const DataSet& data, const NoiseModel& noise, std::optional<int> order,
                                  double tolerance) {
    const int n = data.variables();
    if (noise.size() != n) throw Error(ErrorKind::DimensionMismatch, "noise size differs from data rows");
    if (order && (*order < 1 || *order >= n))
        throw Error(ErrorKind::OrderOutOfRange, "order must satisfy 1 <= order < n");

    int m = 0;
    if (order) {
        m = *order;
    } else {
        const auto l = noise.cholesky_factor().triangularView<Eigen::Lower>();
        const Matrix y_s = l.solve(data.measurements());
        const Vector s = linalg::singular_values(y_s / std::sqrt(static_cast<double>(data.samples())));
        m = detect_order(s, tolerance);
        if (m < 1 || m >= n)
            throw Error(ErrorKind::OrderOutOfRange, "no unity singular values found in the scaled spectrum");
    }
    ScaledPca pca = scaled_pca(data.measurements(), noise, m);
    return IdentificationResult{ConstraintModel(pca.a_hat, data.variable_names(), Provenance::PCAEstimated), noise,
                                std::move(pca.x_hat), std::move(pca.spectrum), 1, true};
}

Matrix pca_denoise(const DataSet& data, int p) {
    const int n = data.variables();
    if (p < 1 || p > n) throw Error(ErrorKind::OrderOutOfRange, "retained components must satisfy 1 <= p <= n");
    if (p == n) return data.measurements();
    const double sqrt_n = std::sqrt(static_cast<double>(data.samples()));
    const auto d = SpectralDecomposition::compute(data.measurements() / sqrt_n, p, true);
    return sqrt_n * d.u1 * d.s1.asDiagonal() * d.v1.transpose();
}

}  // namespace pcarecon
