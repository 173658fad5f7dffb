#include "pcarecon/identify_ipca.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <utility>

#include "pcarecon/diagnostics.hpp"
#include "pcarecon/kernels.hpp"
#include "pcarecon/linalg.hpp"
#include "pcarecon/simulate.hpp"

namespace pcarecon {

namespace {

// Rows of a_hat replaced by an orthonormal basis of the same row space. The
// covariance objective changes under A -> QA by a log|det Q|^2 constant, so
// comparing objectives across passes needs a fixed normalization.
Matrix orthonormal_rows(const Matrix& a_hat) {
    Eigen::HouseholderQR<Matrix> qr(a_hat.transpose());
    return (qr.householderQ() * Matrix::Identity(a_hat.cols(), a_hat.rows())).transpose();
}

}  // namespace

IpcaResult run_ipca_loop(const DataSet& data, const IpcaConfig& config, int total_constraints,
                         const std::function<IpcaPass(const NoiseModel&)>& pass, Provenance provenance) {
    const int n = data.variables();
    if (!covariance_identifiable(config.structure, n, total_constraints)) {
        throw Error(ErrorKind::NotIdentifiable,
                    std::to_string(covariance_parameters(config.structure, n)) +
                        " covariance parameters cannot be estimated from " + std::to_string(total_constraints) +
                        " constraints");
    }
    if (config.max_iterations < 1) throw Error(ErrorKind::InvalidInput, "max_iterations must be positive");

    NoiseModel noise = config.initial_noise ? *config.initial_noise : NoiseModel::scaled_identity(n, 1.0);
    if (noise.size() != n) throw Error(ErrorKind::DimensionMismatch, "initial covariance size differs from data");

    const Matrix s_y = kernels::second_moment(data.measurements());
    const MinimizerOptions inner{config.inner_tolerance, 2000};

    IpcaResult out{IdentificationResult{ConstraintModel(Matrix(0, n), data.variable_names(), provenance), noise,
                                        Matrix(), Vector(), 0, false},
                   {}, 0, {}, {}};
    for (int k = 1; k <= config.max_iterations; ++k) {
        IpcaPass p = pass(noise);
        const Matrix q = orthonormal_rows(p.a_hat);
        const CovarianceFit fit = fit_covariance(q, s_y, data.samples(), config.structure, noise, inner);
        const double trailing_mean = p.trailing.size() ? p.trailing.mean() : 1.0;
        out.trace.records.push_back(
            {CovarianceObjective(q, s_y, data.samples(), config.structure).value(noise.sigma()), fit.objective, trailing_mean, noise.sigma()});

        const bool unity = std::abs(trailing_mean - 1.0) <= config.spectrum_tolerance;
        const bool settled = linalg::relative_difference(fit.noise.sigma(), noise.sigma()) < config.covariance_tolerance;
        out.result = IdentificationResult{ConstraintModel(std::move(p.a_hat), data.variable_names(), provenance),
                                          noise, std::move(p.x_hat), std::move(p.spectrum), k, unity && settled};
        if (unity && settled) return out;
        noise = fit.noise;
    }
    return out;
}

std::vector<NoiseModel> ipca_starts(const IpcaConfig& config, int n) {
    if (config.restarts < 1) throw Error(ErrorKind::InvalidInput, "restarts must be positive");
    const NoiseModel base = config.initial_noise ? *config.initial_noise : NoiseModel::scaled_identity(n, 1.0);
    if (base.size() != n) throw Error(ErrorKind::DimensionMismatch, "initial covariance size differs from data");
    std::vector<NoiseModel> starts{base};
    GaussianStream rng(config.seed);
    const Vector sd = base.standard_deviations();
    for (int s = 1; s < config.restarts; ++s) {
        Vector v(n);
        for (int i = 0; i < n; ++i) v(i) = sd(i) * std::exp(config.restart_spread * rng.normal());
        starts.push_back(NoiseModel::from_standard_deviations(v));
    }
    return starts;
}

IpcaResult run_ipca_multistart(const DataSet& data, const IpcaConfig& config, int total_constraints,
                               const std::function<IpcaPass(const NoiseModel&)>& pass, Provenance provenance) {
    const std::vector<NoiseModel> starts = ipca_starts(config, data.variables());
    const int count = static_cast<int>(starts.size());
    std::vector<std::optional<IpcaResult>> runs(starts.size());
    std::vector<std::exception_ptr> errors(starts.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int s = 0; s < count; ++s) {
        IpcaConfig c = config;
        c.initial_noise = starts[static_cast<std::size_t>(s)];
        try {
            runs[static_cast<std::size_t>(s)] = run_ipca_loop(data, c, total_constraints, pass, provenance);
        } catch (...) {
            errors[static_cast<std::size_t>(s)] = std::current_exception();
        }
    }
    // Start 0 is the reference start; its failure (degenerate data, say) is
    // the caller's. A perturbed start that fails is dropped.
    if (errors.front()) std::rethrow_exception(errors.front());

    // Converged runs first, then lowest final objective, then start index.
    int best = 0;
    auto key = [&](int s) {
        const IpcaResult& r = *runs[static_cast<std::size_t>(s)];
        return std::pair(!r.result.converged, r.trace.records.back().objective);
    };
    for (int s = 1; s < count; ++s)
        if (runs[static_cast<std::size_t>(s)] && key(s) < key(best)) best = s;
    std::vector<double> objectives;
    std::vector<bool> converged;
    for (const auto& r : runs) {
        objectives.push_back(r ? r->trace.records.back().objective : std::numeric_limits<double>::quiet_NaN());
        converged.push_back(r && r->result.converged);
    }
    IpcaResult out = std::move(*runs[static_cast<std::size_t>(best)]);
    out.selected_start = best;
    out.start_objectives = std::move(objectives);
    out.start_converged = std::move(converged);
    return out;
}

IpcaResult ipca(const DataSet& data, const IpcaConfig& config) {
    const int n = data.variables();
    const int m = config.assumed_order;
    if (m < 1 || m >= n) throw Error(ErrorKind::OrderOutOfRange, "assumed order must satisfy 1 <= m < n");
    return run_ipca_multistart(
        data, config, m,
        [&data, m](const NoiseModel& noise) {
            ScaledPca pca = scaled_pca(data.measurements(), noise, m);
            Vector trailing = pca.spectrum.tail(m);
            return IpcaPass{std::move(pca.a_hat), std::move(pca.x_hat), std::move(pca.spectrum), std::move(trailing)};
        },
        Provenance::IPCAEstimated);
}

int smallest_identifiable_order(CovarianceStructure structure, int n) {
    for (int m = 1; m < n; ++m)
        if (covariance_identifiable(structure, n, m)) return m;
    return 0;
}

namespace {

OrderScanRow scan_one(const DataSet& data, IpcaConfig config, int order,
                      const std::optional<ConstraintModel>& truth_model, double unity_tolerance) {
    OrderScanRow row;
    row.order = order;
    config.assumed_order = order;
    row.identifiable = order >= 1 && order < data.variables() && config.identifiable(data.variables());
    if (!row.identifiable) {
        row.note = "not identifiable";
        return row;
    }
    try {
        IpcaResult r = ipca(data, config);
        row.converged = r.result.converged;
        row.iterations = r.result.iterations;
        row.spectrum = r.result.spectrum;
        row.standard_deviations = r.result.noise.standard_deviations();
        if (truth_model) row.alpha = alpha_metric(r.result.model, *truth_model);
        if (data.truth()) row.rmse = rmse_report(r.result.x_hat, *data.truth());
        if (!row.converged) row.note = "not converged";
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::OptimizerDiverged) throw;
        row.degenerate = true;
        row.note = "degenerate spectrum: residuals vanish";
        row.spectrum = linalg::singular_values(data.measurements() / std::sqrt(static_cast<double>(data.samples())));
        return row;
    }
    for (Eigen::Index i = 0; i < row.spectrum.size(); ++i)
        if (std::abs(row.spectrum(i) - 1.0) <= unity_tolerance) ++row.unity_count;
    row.consistent = true;
    for (Eigen::Index i = row.spectrum.size() - order; i < row.spectrum.size(); ++i)
        if (std::abs(row.spectrum(i) - 1.0) > unity_tolerance) row.consistent = false;
    return row;
}

}  // namespace

OrderScanReport order_scan(const DataSet& data, const IpcaConfig& config, int m_min, int m_max,
                           const std::optional<ConstraintModel>& truth_model, double unity_tolerance) {
    if (m_min < 1 || m_max < m_min || m_max >= data.variables())
        throw Error(ErrorKind::OrderOutOfRange, "order range must satisfy 1 <= m_min <= m_max < n");
    if (truth_model && truth_model->variables() != data.variables())
        throw Error(ErrorKind::DimensionMismatch, "truth model and data variable counts differ");

    const int count = m_max - m_min + 1;
    OrderScanReport report;
    report.rows.resize(static_cast<std::size_t>(count));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < count; ++i) {
        try {
            report.rows[static_cast<std::size_t>(i)] = scan_one(data, config, m_min + i, truth_model, unity_tolerance);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    for (const auto& row : report.rows) {
        if (!row.identifiable) continue;
        if (!row.consistent) {
            report.violation_found = true;
            break;
        }
        report.estimated_order = row.order;
    }
    return report;
}

}  // namespace pcarecon
