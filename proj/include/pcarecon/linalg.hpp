#pragma once

#include "pcarecon/model.hpp"

namespace pcarecon::linalg {

/// Number of singular values above kRankTolerance * largest.
int numerical_rank(const Matrix& m);

/// Orthonormal rows spanning row(m); r x cols where r = numerical rank.
Matrix row_space_basis(const Matrix& m);

/// Orthonormal rows spanning the left null space of m: P m = 0, P P^T = I.
/// For a matrix with zero columns the result is the identity.
Matrix left_null_space(const Matrix& m);

/// Singular values (descending) of a possibly very wide matrix.
Vector singular_values(const Matrix& m);

/// Thin left singular vectors and values of a wide matrix (rows <= cols).
struct LeftSvd {
    Matrix u;
    Vector s;
};
LeftSvd left_svd(const Matrix& m);

/// Solves V X = B for symmetric positive definite V via Cholesky.
/// Throws SingularInnerMatrix if V is numerically singular.
Matrix spd_solve(const Matrix& v, const Matrix& b);

/// ||a - b||_F / max(||b||_F, tiny).
double relative_difference(const Matrix& a, const Matrix& b);

}  // namespace pcarecon::linalg
