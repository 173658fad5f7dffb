#pragma once

// Data-parallel kernels over the sample axis of n x N matrices.
//
// Two implementations live side by side. `reference` is plain serial code
// kept as the test oracle and benchmark baseline. The default functions are
// OpenMP-parallel over samples. Column-wise kernels compute every column with
// the same instruction sequence as the reference, so they are bitwise equal
// to it. Reductions sum fixed-size sample chunks and then combine the chunk
// partials in chunk order, so their result does not depend on the number of
// threads (it may differ from the reference in the last bits).

#include "pcarecon/model.hpp"

namespace pcarecon::kernels {

/// Samples per reduction chunk. Part of the determinism contract.
inline constexpr int kReductionChunk = 256;

namespace reference {

Matrix multiply_columns(const Matrix& a, const Matrix& y);
Vector row_mean_square(const Matrix& e);
Vector row_mean(const Matrix& e);
Matrix second_moment(const Matrix& y);

}  // namespace reference

/// a * y computed column by column.
Matrix multiply_columns(const Matrix& a, const Matrix& y);

/// Per-row mean of squared entries (RMSE squared when e is an error matrix).
Vector row_mean_square(const Matrix& e);

/// Per-row mean.
Vector row_mean(const Matrix& e);

/// y * y^T / N, symmetric.
Matrix second_moment(const Matrix& y);

}  // namespace pcarecon::kernels
