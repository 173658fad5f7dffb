#pragma once

// Classical linear data reconciliation against a known constraint model,
// for fully and partially measured systems.

#include <map>
#include <optional>

#include "pcarecon/model.hpp"

namespace pcarecon {

/// W = I - S A^T (A S A^T)^-1 A. Reconciled estimates are W y.
class ReconciliationGain {
public:
    ReconciliationGain(const ConstraintModel& model, const NoiseModel& noise);

    const Matrix& matrix() const { return w_; }

    /// Covariance of the reconciled estimates, W S W^T.
    Matrix estimate_covariance() const { return w_ * sigma_ * w_.transpose(); }

private:
    Matrix w_;
    Matrix sigma_;
};

/// X_hat = W Y. Throws SingularInnerMatrix, DimensionMismatch.
Matrix reconcile_full(const ConstraintModel& model, const NoiseModel& noise, const DataSet& data);

/// Same as reconcile_full for a raw data matrix (n x N).
Matrix reconcile_matrix(const ConstraintModel& model, const NoiseModel& noise, const Matrix& y);

struct ClassificationReport {
    Names measured;    // in model order
    Names unmeasured;  // in model order
    std::map<std::string, bool> measured_redundant;
    std::map<std::string, bool> unmeasured_observable;
    ConstraintModel reduced_model;  // over measured variables only
    int projection_rank = 0;        // t = rank(A_u)
    Matrix projection;              // P with P A_u = 0, orthonormal rows
};

/// Projects unmeasured variables out of the model and classifies variables.
ClassificationReport project_unmeasured(const ConstraintModel& model, const std::vector<bool>& measured_mask);

/// Variable graph cross-check for flow networks: every column holds at most
/// one +1 and one -1 (a missing endpoint is the environment node). Returns
/// nullopt when the model is not of that form.
struct GraphClassification {
    std::map<std::string, bool> measured_redundant;
    std::map<std::string, bool> unmeasured_observable;
    int reduced_constraints = 0;
};
std::optional<GraphClassification> classify_flow_network(const ConstraintModel& model,
                                                         const std::vector<bool>& measured_mask);

struct PartialReconciliation {
    ClassificationReport classification;
    Matrix measured_estimates;  // n_measured x N, rows in classification.measured order
    /// One entry per unmeasured variable; nullopt marks an unobservable variable.
    std::map<std::string, std::optional<Vector>> unmeasured_estimates;
};

/// Reconciles measured variables against the reduced model and solves the
/// observable unmeasured variables from the reconciled values.
PartialReconciliation reconcile_partial(const ConstraintModel& model, const NoiseModel& noise_measured,
                                        const DataSet& data_measured, const std::vector<bool>& measured_mask);

/// Mask over model variables from a list of measured names.
std::vector<bool> mask_from_names(const Names& all, const Names& measured);

}  // namespace pcarecon
