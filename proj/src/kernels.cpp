#include "pcarecon/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <vector>

namespace pcarecon::kernels {

namespace {

void check_inner(const Matrix& a, const Matrix& y) {
    if (a.cols() != y.rows()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "operand has " + std::to_string(a.cols()) + " columns, data has " +
                        std::to_string(y.rows()) + " rows");
    }
}

inline void column_product(const Matrix& a, const Matrix& y, Matrix& out, Eigen::Index j) {
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    for (Eigen::Index i = 0; i < m; ++i) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) acc += a(i, k) * y(k, j);
        out(i, j) = acc;
    }
}

Eigen::Index chunk_count(Eigen::Index samples) {
    return (samples + kReductionChunk - 1) / kReductionChunk;
}

// Runs `body(chunk, begin, end, partial)` for each chunk in parallel and sums
// the per-chunk partials in chunk order.
template <typename Body>
Matrix chunked_sum(Eigen::Index samples, Eigen::Index rows, Eigen::Index cols, Body body) {
    const Eigen::Index chunks = chunk_count(samples);
    std::vector<Matrix> partial(static_cast<std::size_t>(chunks), Matrix::Zero(rows, cols));
#pragma omp parallel for schedule(static)
    for (Eigen::Index c = 0; c < chunks; ++c) {
        const Eigen::Index begin = c * kReductionChunk;
        const Eigen::Index end = std::min(samples, begin + kReductionChunk);
        body(begin, end, partial[static_cast<std::size_t>(c)]);
    }
    Matrix total = Matrix::Zero(rows, cols);
    for (const auto& p : partial) total += p;
    return total;
}

}  // namespace

namespace reference {

Matrix multiply_columns(const Matrix& a, const Matrix& y) {
    check_inner(a, y);
    Matrix out(a.rows(), y.cols());
    for (Eigen::Index j = 0; j < y.cols(); ++j) column_product(a, y, out, j);
    return out;
}

Vector row_mean_square(const Matrix& e) {
    Vector out = Vector::Zero(e.rows());
    if (e.cols() == 0) return out;
    for (Eigen::Index i = 0; i < e.rows(); ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < e.cols(); ++j) acc += e(i, j) * e(i, j);
        out(i) = acc / static_cast<double>(e.cols());
    }
    return out;
}

Vector row_mean(const Matrix& e) {
    Vector out = Vector::Zero(e.rows());
    if (e.cols() == 0) return out;
    for (Eigen::Index i = 0; i < e.rows(); ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < e.cols(); ++j) acc += e(i, j);
        out(i) = acc / static_cast<double>(e.cols());
    }
    return out;
}

Matrix second_moment(const Matrix& y) {
    const Eigen::Index n = y.rows();
    Matrix out = Matrix::Zero(n, n);
    if (y.cols() == 0) return out;
    for (Eigen::Index j = 0; j < y.cols(); ++j)
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c <= r; ++c) out(r, c) += y(r, j) * y(c, j);
    out /= static_cast<double>(y.cols());
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = r + 1; c < n; ++c) out(r, c) = out(c, r);
    return out;
}

}  // namespace reference

Matrix multiply_columns(const Matrix& a, const Matrix& y) {
    check_inner(a, y);
    Matrix out(a.rows(), y.cols());
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < y.cols(); ++j) column_product(a, y, out, j);
    return out;
}

Vector row_mean_square(const Matrix& e) {
    if (e.cols() == 0) return Vector::Zero(e.rows());
    Matrix sum = chunked_sum(e.cols(), e.rows(), 1, [&](Eigen::Index b, Eigen::Index end, Matrix& p) {
        for (Eigen::Index j = b; j < end; ++j)
            for (Eigen::Index i = 0; i < e.rows(); ++i) p(i, 0) += e(i, j) * e(i, j);
    });
    return sum.col(0) / static_cast<double>(e.cols());
}

Vector row_mean(const Matrix& e) {
    if (e.cols() == 0) return Vector::Zero(e.rows());
    Matrix sum = chunked_sum(e.cols(), e.rows(), 1, [&](Eigen::Index b, Eigen::Index end, Matrix& p) {
        for (Eigen::Index j = b; j < end; ++j)
            for (Eigen::Index i = 0; i < e.rows(); ++i) p(i, 0) += e(i, j);
    });
    return sum.col(0) / static_cast<double>(e.cols());
}

Matrix second_moment(const Matrix& y) {
    const Eigen::Index n = y.rows();
    if (y.cols() == 0) return Matrix::Zero(n, n);
    Matrix out = chunked_sum(y.cols(), n, n, [&](Eigen::Index b, Eigen::Index end, Matrix& p) {
        for (Eigen::Index j = b; j < end; ++j)
            for (Eigen::Index r = 0; r < n; ++r)
                for (Eigen::Index c = 0; c <= r; ++c) p(r, c) += y(r, j) * y(c, j);
    });
    out /= static_cast<double>(y.cols());
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = r + 1; c < n; ++c) out(r, c) = out(c, r);
    return out;
}

}  // namespace pcarecon::kernels
