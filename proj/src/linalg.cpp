#include "pcarecon/linalg.hpp"

#include <algorithm>
#include <limits>

namespace pcarecon::linalg {

namespace {

int rank_from_singular_values(const Vector& s) {
    if (s.size() == 0 || s(0) <= 0.0) return 0;
    const double cut = kRankTolerance * s(0);
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cut) ++r;
    return r;
}

}  // namespace

int numerical_rank(const Matrix& m) {
    if (m.size() == 0) return 0;
    return rank_from_singular_values(singular_values(m));
}

Matrix row_space_basis(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return Matrix(0, m.cols());
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const int r = rank_from_singular_values(svd.singularValues());
    return svd.matrixV().leftCols(r).transpose();
}

Matrix left_null_space(const Matrix& m) {
    const Eigen::Index rows = m.rows();
    if (rows == 0) return Matrix(0, 0);
    if (m.cols() == 0) return Matrix::Identity(rows, rows);
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
    const int r = rank_from_singular_values(svd.singularValues());
    return svd.matrixU().rightCols(rows - r).transpose();
}

LeftSvd left_svd(const Matrix& m) {
    const Eigen::Index n = m.rows();
    LeftSvd out;
    if (n == 0) return out;
    if (m.cols() >= n) {
        // m = R^T Q^T with R n x n; the left factor of m equals that of R^T.
        Eigen::HouseholderQR<Matrix> qr(m.transpose());
        Matrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
        Eigen::JacobiSVD<Matrix> svd(r.transpose(), Eigen::ComputeFullU);
        out.u = svd.matrixU();
        out.s = svd.singularValues();
    } else {
        Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
        out.u = svd.matrixU();
        out.s = Vector::Zero(n);
        out.s.head(svd.singularValues().size()) = svd.singularValues();
    }
    return out;
}

Vector singular_values(const Matrix& m) {
    if (m.rows() <= m.cols()) {
        if (m.rows() == 0) return Vector(0);
        return left_svd(m).s;
    }
    return left_svd(m.transpose()).s.head(m.cols());
}

Matrix spd_solve(const Matrix& v, const Matrix& b) {
    if (v.rows() == 0) return Matrix(0, b.cols());
    Eigen::LLT<Matrix> llt(v);
    const double scale = v.diagonal().cwiseAbs().maxCoeff();
    if (llt.info() != Eigen::Success || !(scale > 0.0)) {
        throw Error(ErrorKind::SingularInnerMatrix, "A Sigma A^T is not positive definite");
    }
    const Vector d = llt.matrixL().toDenseMatrix().diagonal();
    const double min_pivot = d.minCoeff();
    if (min_pivot * min_pivot <= 1e-13 * scale) {
        throw Error(ErrorKind::SingularInnerMatrix,
                    "A Sigma A^T is numerically singular (rank-deficient model?)");
    }
    return llt.solve(b);
}

double relative_difference(const Matrix& a, const Matrix& b) {
    const double denom = std::max(b.norm(), std::numeric_limits<double>::min());
    return (a - b).norm() / denom;
}

}  // namespace pcarecon::linalg
