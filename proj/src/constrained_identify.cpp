#include "pcarecon/constrained_identify.hpp"

#include <cmath>

#include "pcarecon/kernels.hpp"
#include "pcarecon/linalg.hpp"
#include "pcarecon/reconcile.hpp"

namespace pcarecon {

namespace {

struct ProjectedPass {
    Matrix a_hat;
    Matrix x_hat;
    Vector spectrum;
    Matrix u;
};

ProjectedPass projected_pass(const DataSet& data, const NoiseModel& noise, const Matrix& known, int m_total) {
    const Eigen::Index n = data.variables();
    const Eigen::Index m_g = known.rows();
    const Matrix& l = noise.cholesky_factor();
    Matrix y_s = l.triangularView<Eigen::Lower>().solve(data.measurements());
    if (m_g > 0) {
        // Known rows in the scaled space: A_g x = A_g L x_s.
        const Matrix b = known * l;
        const Matrix projector = Matrix::Identity(n, n) - b.transpose() * linalg::spd_solve(b * b.transpose(), b);
        y_s = kernels::multiply_columns(projector, y_s);
    }
    auto svd = linalg::left_svd(y_s / std::sqrt(static_cast<double>(data.samples())));

    const Eigen::Index estimated = m_total - m_g;
    const Matrix u_est = svd.u.middleCols(n - m_total, estimated);
    Matrix a_hat(m_total, n);
    a_hat.topRows(estimated) =
        l.transpose().triangularView<Eigen::Upper>().solve(u_est).transpose();
    a_hat.bottomRows(m_g) = known;

    ProjectedPass out;
    out.x_hat = reconcile_matrix(ConstraintModel(a_hat, data.variable_names(), Provenance::Composite), noise,
                                 data.measurements());
    out.a_hat = std::move(a_hat);
    out.spectrum = std::move(svd.s);
    out.u = std::move(svd.u);
    return out;
}

void fill_zero_block(KnownConstraintResult& r, const Matrix& u) {
    const Vector& s = r.projected_spectrum;
    const double lead = s.size() ? s(0) : 0.0;
    r.zero_count = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) < kProjectionZeroTolerance * lead) ++r.zero_count;
    r.zero_directions = u.rightCols(r.zero_count);
}

}  // namespace

KnownConstraintResult identify_with_known(const DataSet& data, const Matrix& known,
                                          const std::optional<NoiseModel>& noise, std::optional<int> order_total,
                                          const IpcaConfig& config, double order_tolerance) {
    const int n = data.variables();
    const int m_g = static_cast<int>(known.rows());
    if (known.cols() != n)
        throw Error(ErrorKind::DimensionMismatch, "known constraints have " + std::to_string(known.cols()) +
                                                      " columns for " + std::to_string(n) + " variables");
    if (!known.allFinite()) throw Error(ErrorKind::InvalidInput, "known constraints contain non-finite entries");
    if (m_g >= n || (m_g > 0 && linalg::numerical_rank(known) < m_g))
        throw Error(ErrorKind::KnownRankDeficient,
                    "known constraints must be linearly independent with fewer rows than variables");
    if (order_total && *order_total < m_g)
        throw Error(ErrorKind::OrderConflict, "total order " + std::to_string(*order_total) + " is below the " +
                                                  std::to_string(m_g) + " known constraints");
    if (order_total && *order_total >= n)
        throw Error(ErrorKind::OrderOutOfRange, "total order must be below the variable count");
    if (noise && noise->size() != n) throw Error(ErrorKind::DimensionMismatch, "noise size differs from data rows");

    KnownConstraintResult out{IdentificationResult{ConstraintModel(Matrix(0, n), data.variable_names()),
                                                   noise ? *noise : NoiseModel::scaled_identity(n, 1.0), Matrix(),
                                                   Vector(), 0, false},
                              {}, Vector(), m_g, 0, 0, Matrix()};

    if (noise) {
        int m = 0;
        if (order_total) {
            m = *order_total;
        } else {
            // The projected spectrum's trailing m_g values are the exact zeros.
            const ProjectedPass probe = projected_pass(data, *noise, known, m_g);
            m = m_g + detect_order(probe.spectrum.head(n - m_g), order_tolerance);
            if (m < 1 || m >= n)
                throw Error(ErrorKind::OrderOutOfRange, "no unity singular values found in the projected spectrum");
        }
        ProjectedPass p = projected_pass(data, *noise, known, m);
        out.estimated_rows = m - m_g;
        out.projected_spectrum = p.spectrum;
        fill_zero_block(out, p.u);
        out.result = IdentificationResult{ConstraintModel(std::move(p.a_hat), data.variable_names(),
                                                          m_g > 0 ? Provenance::Composite : Provenance::PCAEstimated),
                                          *noise, std::move(p.x_hat), std::move(p.spectrum), 1, true};
        return out;
    }

    const int m = order_total ? *order_total : config.assumed_order;
    if (m < m_g)
        throw Error(ErrorKind::OrderConflict,
                    "total order " + std::to_string(m) + " is below the " + std::to_string(m_g) + " known constraints");
    if (m < 1 || m >= n) throw Error(ErrorKind::OrderOutOfRange, "total order must satisfy 1 <= m < n");
    IpcaResult r = run_ipca_multistart(
        data, config, m,
        [&data, &known, n, m, m_g](const NoiseModel& sigma) {
            ProjectedPass p = projected_pass(data, sigma, known, m);
            Vector trailing = p.spectrum.segment(n - m, m - m_g);
            return IpcaPass{std::move(p.a_hat), std::move(p.x_hat), std::move(p.spectrum), std::move(trailing)};
        },
        m_g > 0 ? Provenance::Composite : Provenance::IPCAEstimated);
    out.estimated_rows = m - m_g;
    out.projected_spectrum = r.result.spectrum;
    fill_zero_block(out, projected_pass(data, r.result.noise, known, m).u);
    out.result = std::move(r.result);
    out.trace = std::move(r.trace);
    return out;
}

}  // namespace pcarecon
