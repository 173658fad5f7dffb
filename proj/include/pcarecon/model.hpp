#pragma once

// Core domain types shared by every module: constraint models, error
// covariances, measurement data sets and spectral decompositions.
//
// Conventions: data matrices are n x N (one column per sample, one row per
// variable). Constraint matrices are m x n and describe A x = 0.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "pcarecon/error.hpp"

namespace pcarecon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Names = std::vector<std::string>;

/// Singular values below this fraction of the largest count as zero.
inline constexpr double kRankTolerance = 1e-10;

enum class Provenance { FirstPrinciples, PCAEstimated, IPCAEstimated, Composite };

std::string_view to_string(Provenance p);

struct Violation {
    enum class Kind {
        RankDeficient,
        ConstraintCountNotLessThanVariables,
        NameCountMismatch,
        DuplicateName,
        EmptyName,
        NonFinite,
    };
    Kind kind;
    std::string detail;
    int rank = 0;  // RankDeficient only
    int m = 0;     // RankDeficient only

    bool operator==(const Violation& o) const { return kind == o.kind; }
};

std::string_view to_string(Violation::Kind k);

/// Reports every broken ConstraintModel invariant; empty means valid.
std::vector<Violation> validate_model(const Matrix& a, const Names& names);

/// m x n matrix of homogeneous linear constraints with variable labels.
/// Rows are linearly independent and m < n. An empty model (m = 0) is legal.
class ConstraintModel {
public:
    /// Throws Error{InvalidModel} listing violations.
    ConstraintModel(Matrix a, Names names, Provenance provenance = Provenance::FirstPrinciples);

    const Matrix& matrix() const { return a_; }
    const Names& variable_names() const { return names_; }
    Provenance provenance() const { return provenance_; }
    int constraints() const { return static_cast<int>(a_.rows()); }
    int variables() const { return static_cast<int>(a_.cols()); }

    /// Index of a variable by name; throws InvalidInput if absent.
    int index_of(const std::string& name) const;

private:
    Matrix a_;
    Names names_;
    Provenance provenance_;
};

/// Measurement error covariance, symmetric positive definite.
class NoiseModel {
public:
    enum class Structure { ScaledIdentity, Diagonal, Full };

    static NoiseModel scaled_identity(int n, double variance);
    static NoiseModel from_standard_deviations(const Vector& sd);
    static NoiseModel from_variances(const Vector& var);
    /// Throws CholeskyFailure when not positive definite, InvalidInput when asymmetric.
    static NoiseModel full(const Matrix& sigma);

    const Matrix& sigma() const { return sigma_; }
    /// Lower-triangular Cholesky factor with positive diagonal.
    const Matrix& cholesky_factor() const { return chol_; }
    Structure structure() const { return structure_; }
    int size() const { return static_cast<int>(sigma_.rows()); }
    Vector standard_deviations() const { return sigma_.diagonal().cwiseSqrt(); }

    /// Covariance restricted to the variables flagged in `keep`.
    NoiseModel subset(const std::vector<bool>& keep) const;

private:
    NoiseModel(Matrix sigma, Structure s);
    Matrix sigma_;
    Matrix chol_;
    Structure structure_;
};

/// n x N measurements, optional simulator truth, unique variable labels.
class DataSet {
public:
    /// Throws InvalidInput for non-finite entries, label problems or truth shape mismatch.
    DataSet(Matrix y, Names names, std::optional<Matrix> x_true = std::nullopt);

    const Matrix& measurements() const { return y_; }
    const std::optional<Matrix>& truth() const { return x_true_; }
    const Names& variable_names() const { return names_; }
    int variables() const { return static_cast<int>(y_.rows()); }
    int samples() const { return static_cast<int>(y_.cols()); }

    /// Fewer samples than variables. Reported, not rejected: reconciliation
    /// against a known model works for any N >= 1.
    bool too_few_samples() const { return samples() < variables(); }

    /// Rows selected by mask, in order.
    DataSet subset(const std::vector<bool>& keep) const;

private:
    Matrix y_;
    Names names_;
    std::optional<Matrix> x_true_;
};

/// SVD of a (scaled) n x N data matrix split after p retained components.
struct SpectralDecomposition {
    Matrix u1, u2;
    Vector s1, s2;
    Matrix v1, v2;
    int p = 0;

    Vector spectrum() const;
    Matrix reconstruct() const;

    /// Full thin SVD of `m` with the first p components retained.
    static SpectralDecomposition compute(const Matrix& m, int p, bool with_right_vectors = true);
};

struct IdentificationResult {
    ConstraintModel model;
    NoiseModel noise;
    Matrix x_hat;
    Vector spectrum;
    int iterations = 0;
    bool converged = true;
};

/// A * Y, one column per sample (r(k) = A y(k)).
Matrix residuals(const ConstraintModel& model, const DataSet& data);

void check_unique_names(const Names& names);

}  // namespace pcarecon
