#include "pcarecon/model.hpp"

#include <cmath>
#include <set>

#include "pcarecon/kernels.hpp"
#include "pcarecon/linalg.hpp"

namespace pcarecon {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::InvalidModel: return "InvalidModel";
        case ErrorKind::SingularInnerMatrix: return "SingularInnerMatrix";
        case ErrorKind::CholeskyFailure: return "CholeskyFailure";
        case ErrorKind::OrderOutOfRange: return "OrderOutOfRange";
        case ErrorKind::NotIdentifiable: return "NotIdentifiable";
        case ErrorKind::OptimizerDiverged: return "OptimizerDiverged";
        case ErrorKind::KnownRankDeficient: return "KnownRankDeficient";
        case ErrorKind::OrderConflict: return "OrderConflict";
        case ErrorKind::SingularDependentBlock: return "SingularDependentBlock";
    }
    return "Unknown";
}

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::FirstPrinciples: return "first-principles";
        case Provenance::PCAEstimated: return "pca";
        case Provenance::IPCAEstimated: return "ipca";
        case Provenance::Composite: return "composite";
    }
    return "unknown";
}

std::string_view to_string(Violation::Kind k) {
    switch (k) {
        case Violation::Kind::RankDeficient: return "RankDeficient";
        case Violation::Kind::ConstraintCountNotLessThanVariables:
            return "ConstraintCountNotLessThanVariables";
        case Violation::Kind::NameCountMismatch: return "NameCountMismatch";
        case Violation::Kind::DuplicateName: return "DuplicateName";
        case Violation::Kind::EmptyName: return "EmptyName";
        case Violation::Kind::NonFinite: return "NonFinite";
    }
    return "Unknown";
}

void check_unique_names(const Names& names) {
    std::set<std::string> seen;
    for (const auto& name : names) {
        if (name.empty()) throw Error(ErrorKind::InvalidInput, "empty variable name");
        if (!seen.insert(name).second)
            throw Error(ErrorKind::InvalidInput, "duplicate variable name '" + name + "'");
    }
}

std::vector<Violation> validate_model(const Matrix& a, const Names& names) {
    std::vector<Violation> out;
    const int m = static_cast<int>(a.rows());
    const int n = static_cast<int>(a.cols());
    if (static_cast<int>(names.size()) != n) {
        out.push_back({Violation::Kind::NameCountMismatch,
                       std::to_string(names.size()) + " names for " + std::to_string(n) + " columns"});
    }
    std::set<std::string> seen;
    for (const auto& name : names) {
        if (name.empty()) out.push_back({Violation::Kind::EmptyName, "empty variable name"});
        else if (!seen.insert(name).second)
            out.push_back({Violation::Kind::DuplicateName, "duplicate name '" + name + "'"});
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            if (!std::isfinite(a(i, j)))
                out.push_back({Violation::Kind::NonFinite,
                               "row " + std::to_string(i) + " column " + std::to_string(j)});
    if (m > 0 && m >= n) {
        out.push_back({Violation::Kind::ConstraintCountNotLessThanVariables,
                       std::to_string(m) + " constraints on " + std::to_string(n) + " variables"});
    }
    if (m > 0 && a.allFinite()) {
        const int r = linalg::numerical_rank(a);
        if (r < m) {
            Violation v{Violation::Kind::RankDeficient,
                        "rank " + std::to_string(r) + " < " + std::to_string(m) + " rows"};
            v.rank = r;
            v.m = m;
            out.push_back(v);
        }
    }
    return out;
}

ConstraintModel::ConstraintModel(Matrix a, Names names, Provenance provenance)
    : a_(std::move(a)), names_(std::move(names)), provenance_(provenance) {
    const auto violations = validate_model(a_, names_);
    if (!violations.empty()) {
        std::string msg;
        for (const auto& v : violations) {
            if (!msg.empty()) msg += "; ";
            msg += std::string(to_string(v.kind)) + " (" + v.detail + ")";
        }
        throw Error(ErrorKind::InvalidModel, msg);
    }
}

int ConstraintModel::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    throw Error(ErrorKind::InvalidInput, "unknown variable '" + name + "'");
}

NoiseModel::NoiseModel(Matrix sigma, Structure s) : sigma_(std::move(sigma)), structure_(s) {
    const Eigen::Index n = sigma_.rows();
    if (n == 0 || sigma_.cols() != n) throw Error(ErrorKind::InvalidInput, "covariance must be square and nonempty");
    if (!sigma_.allFinite()) throw Error(ErrorKind::InvalidInput, "covariance has non-finite entries");
    const double scale = sigma_.cwiseAbs().maxCoeff();
    if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw Error(ErrorKind::InvalidInput, "covariance is not symmetric");
    sigma_ = 0.5 * (sigma_ + sigma_.transpose());
    Eigen::LLT<Matrix> llt(sigma_);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorKind::CholeskyFailure, "covariance is not positive definite");
    chol_ = llt.matrixL();
    if ((chol_.diagonal().array() <= 0.0).any())
        throw Error(ErrorKind::CholeskyFailure, "covariance has a non-positive Cholesky pivot");
}

NoiseModel NoiseModel::scaled_identity(int n, double variance) {
    if (!(variance > 0.0)) throw Error(ErrorKind::CholeskyFailure, "variance must be positive");
    return NoiseModel(variance * Matrix::Identity(n, n), Structure::ScaledIdentity);
}

NoiseModel NoiseModel::from_variances(const Vector& var) {
    if ((var.array() <= 0.0).any() || !var.allFinite())
        throw Error(ErrorKind::CholeskyFailure, "variances must be positive and finite");
    return NoiseModel(var.asDiagonal().toDenseMatrix(), Structure::Diagonal);
}

NoiseModel NoiseModel::from_standard_deviations(const Vector& sd) {
    return from_variances(sd.array().square().matrix());
}

NoiseModel NoiseModel::full(const Matrix& sigma) { return NoiseModel(sigma, Structure::Full); }

NoiseModel NoiseModel::subset(const std::vector<bool>& keep) const {
    if (static_cast<int>(keep.size()) != size())
        throw Error(ErrorKind::DimensionMismatch, "mask length differs from covariance size");
    std::vector<int> idx;
    for (int i = 0; i < size(); ++i)
        if (keep[static_cast<std::size_t>(i)]) idx.push_back(i);
    Matrix s(idx.size(), idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < idx.size(); ++c) s(r, c) = sigma_(idx[r], idx[c]);
    return NoiseModel(s, structure_);
}

DataSet::DataSet(Matrix y, Names names, std::optional<Matrix> x_true)
    : y_(std::move(y)), names_(std::move(names)), x_true_(std::move(x_true)) {
    if (static_cast<Eigen::Index>(names_.size()) != y_.rows())
        throw Error(ErrorKind::InvalidInput, "variable name count differs from data rows");
    check_unique_names(names_);
    if (!y_.allFinite()) throw Error(ErrorKind::InvalidInput, "measurements contain non-finite values");
    if (x_true_) {
        if (x_true_->rows() != y_.rows() || x_true_->cols() != y_.cols())
            throw Error(ErrorKind::InvalidInput, "truth matrix shape differs from measurements");
        if (!x_true_->allFinite()) throw Error(ErrorKind::InvalidInput, "truth contains non-finite values");
    }
}

DataSet DataSet::subset(const std::vector<bool>& keep) const {
    if (static_cast<int>(keep.size()) != variables())
        throw Error(ErrorKind::DimensionMismatch, "mask length differs from variable count");
    std::vector<Eigen::Index> idx;
    Names names;
    for (int i = 0; i < variables(); ++i) {
        if (keep[static_cast<std::size_t>(i)]) {
            idx.push_back(i);
            names.push_back(names_[static_cast<std::size_t>(i)]);
        }
    }
    Matrix y = y_(idx, Eigen::all);
    std::optional<Matrix> x;
    if (x_true_) x = (*x_true_)(idx, Eigen::all);
    return DataSet(std::move(y), std::move(names), std::move(x));
}

Vector SpectralDecomposition::spectrum() const {
    Vector s(s1.size() + s2.size());
    s << s1, s2;
    return s;
}

Matrix SpectralDecomposition::reconstruct() const {
    return u1 * s1.asDiagonal() * v1.transpose() + u2 * s2.asDiagonal() * v2.transpose();
}

SpectralDecomposition SpectralDecomposition::compute(const Matrix& m, int p, bool with_right_vectors) {
    const Eigen::Index n = m.rows();
    if (p < 0 || p > n) throw Error(ErrorKind::OrderOutOfRange, "retained component count out of range");
    SpectralDecomposition d;
    d.p = p;
    Matrix u;
    Vector s;
    Matrix v;
    if (with_right_vectors) {
        Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeThinV);
        u = svd.matrixU();
        const Eigen::Index k = svd.singularValues().size();
        s = Vector::Zero(n);
        s.head(k) = svd.singularValues();
        v = Matrix::Zero(m.cols(), n);
        v.leftCols(k) = svd.matrixV();
    } else {
        auto l = linalg::left_svd(m);
        u = std::move(l.u);
        s = std::move(l.s);
    }
    d.u1 = u.leftCols(p);
    d.u2 = u.rightCols(n - p);
    d.s1 = s.head(p);
    d.s2 = s.tail(n - p);
    if (with_right_vectors) {
        d.v1 = v.leftCols(p);
        d.v2 = v.rightCols(n - p);
    }
    return d;
}

Matrix residuals(const ConstraintModel& model, const DataSet& data) {
    if (model.variables() != data.variables())
        throw Error(ErrorKind::DimensionMismatch,
                    "model has " + std::to_string(model.variables()) + " variables, data has " +
                        std::to_string(data.variables()));
    return kernels::multiply_columns(model.matrix(), data.measurements());
}

}  // namespace pcarecon
