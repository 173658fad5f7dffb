#pragma once

// Identification when some constraints A_g are known in advance. Data are
// projected orthogonally to the known rows (in the Cholesky-scaled space),
// only the remaining constraints are estimated from the projected spectrum,
// and the full model stacks the estimated rows over the known ones.

#include <optional>

#include "pcarecon/identify_ipca.hpp"

namespace pcarecon {

struct KnownConstraintResult {
    IdentificationResult result;  // model rows: estimated first, then known
    ConvergenceTrace trace;       // empty for the known-covariance variant
    /// Spectrum of the projected scaled data; the last m_g values are zero.
    Vector projected_spectrum;
    int known_rows = 0;
    int estimated_rows = 0;
    /// Projected-spectrum values below the zero threshold.
    int zero_count = 0;
    /// Left singular vectors of the zero block, in the scaled space (n x zero_count).
    Matrix zero_directions;
};

/// Projected values below this fraction of the leading value count as exact zeros.
inline constexpr double kProjectionZeroTolerance = 1e-10;

/// `known` is m_g x n with columns ordered as the data variables.
///
/// With `noise`, the covariance is fixed and `order_total` may be omitted
/// (the remaining order is then detected from the non-zero projected values).
/// Without `noise`, the IPCA variant runs with `config`, whose assumed_order
/// is the total order m.
///
/// Throws KnownRankDeficient, OrderConflict, OrderOutOfRange, NotIdentifiable,
/// OptimizerDiverged.
KnownConstraintResult identify_with_known(const DataSet& data, const Matrix& known,
                                          const std::optional<NoiseModel>& noise, std::optional<int> order_total,
                                          const IpcaConfig& config = {},
                                          double order_tolerance = kDefaultOrderTolerance);

}  // namespace pcarecon
