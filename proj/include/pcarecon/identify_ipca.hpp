#pragma once

// Iterative PCA: alternate scaled PCA (given the covariance) with the
// covariance MLE (given the constraints) until the trailing scaled singular
// values settle at one. Yields model, covariance and reconciled data at once.

#include <cstdint>
#include <functional>
#include <optional>

#include "pcarecon/covariance_mle.hpp"
#include "pcarecon/identify_pca.hpp"

namespace pcarecon {

struct IpcaConfig {
    int assumed_order = 1;
    CovarianceStructure structure = CovarianceStructure::Diagonal;
    int max_iterations = 100;
    /// Allowed |mean(trailing values) - 1| at convergence.
    double spectrum_tolerance = 0.05;
    /// Relative objective decrease that stops the inner optimizer.
    double inner_tolerance = 1e-8;
    /// Relative Frobenius change of the covariance between outer iterations.
    double covariance_tolerance = 1e-4;
    /// Starting covariance; identity when absent.
    std::optional<NoiseModel> initial_noise;
    /// Number of starts. Start 0 uses initial_noise; the others perturb its
    /// standard deviations by exp(restart_spread * z), z standard normal.
    /// The loop can stop at different fixed points (notably when the order is
    /// too low), so the run with the lowest final objective is kept.
    int restarts = 32;
    double restart_spread = 1.5;
    std::uint64_t seed = 0;

    bool identifiable(int n) const { return covariance_identifiable(structure, n, assumed_order); }
};

/// Objectives use A_k with orthonormalized rows, which makes them invariant
/// to the rotation ambiguity A -> QA.
struct TraceRecord {
    /// Covariance objective at (A_k, S_k), before the covariance update.
    double objective_before = 0.0;
    /// Covariance objective at (A_k, S_{k+1}): constraints from this pass,
    /// covariance re-estimated for them.
    double objective = 0.0;
    double trailing_mean = 0.0;
    Matrix sigma;  // covariance used for this pass
};

struct ConvergenceTrace {
    std::vector<TraceRecord> records;
};

struct IpcaResult {
    IdentificationResult result;
    ConvergenceTrace trace;  // of the selected start
    int selected_start = 0;
    std::vector<double> start_objectives;  // final objective per start, NaN if it failed
    std::vector<bool> start_converged;
};

/// One scaled-PCA pass as seen by the outer loop.
struct IpcaPass {
    Matrix a_hat;    // all constraints, estimated and known
    Matrix x_hat;
    Vector spectrum;
    Vector trailing;  // values expected to equal one at convergence
};

/// Shared outer loop from one starting covariance. `pass` performs the PCA
/// step for a covariance. Throws NotIdentifiable, OptimizerDiverged.
IpcaResult run_ipca_loop(const DataSet& data, const IpcaConfig& config, int total_constraints,
                         const std::function<IpcaPass(const NoiseModel&)>& pass, Provenance provenance);

/// run_ipca_loop from every start in `config`; keeps the converged run with
/// the lowest final objective (any run if none converged). Errors from start
/// 0 propagate; failed later starts are skipped. `pass` must be safe to call
/// concurrently.
IpcaResult run_ipca_multistart(const DataSet& data, const IpcaConfig& config, int total_constraints,
                               const std::function<IpcaPass(const NoiseModel&)>& pass, Provenance provenance);

/// Starting covariances used by run_ipca_multistart.
std::vector<NoiseModel> ipca_starts(const IpcaConfig& config, int n);

/// Throws NotIdentifiable (config), OptimizerDiverged (noise-free data).
/// Non-convergence is reported through result.converged, never thrown.
IpcaResult ipca(const DataSet& data, const IpcaConfig& config);

struct OrderScanRow {
    int order = 0;
    bool identifiable = false;
    bool degenerate = false;  // residuals vanish: no noise to estimate
    bool converged = false;
    bool consistent = false;  // trailing `order` values all near one
    int unity_count = 0;      // trailing values within tolerance of one
    int iterations = 0;
    Vector spectrum;
    Vector standard_deviations;
    std::optional<double> alpha;
    std::optional<Vector> rmse;
    std::string note;
};

struct OrderScanReport {
    std::vector<OrderScanRow> rows;
    /// Last consistent order before the first inconsistent one.
    std::optional<int> estimated_order;
    /// False when every scanned order was consistent (estimate is a lower bound).
    bool violation_found = false;
};

/// Runs IPCA for each order in [m_min, m_max] using `config` as template.
/// `truth_model` enables the alpha column, data truth the RMSE column.
OrderScanReport order_scan(const DataSet& data, const IpcaConfig& config, int m_min, int m_max,
                           const std::optional<ConstraintModel>& truth_model = std::nullopt,
                           double unity_tolerance = kDefaultOrderTolerance);

/// Smallest order whose residual covariance identifies `structure` on n variables.
int smallest_identifiable_order(CovarianceStructure structure, int n);

}  // namespace pcarecon
