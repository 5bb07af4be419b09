#pragma once

#include "dnr/feeder.hpp"

#include <Eigen/Dense>

namespace dnr {

// Consumed complex power at voltage magnitude vmag (system base).
[[nodiscard]] Eigen::Vector2d zip_power(const ZipLoadParams& load, double vmag);

// Load current in the dq frame, draw convention: I = conj(S / V).
[[nodiscard]] Eigen::Vector2d zip_current(const ZipLoadParams& load, const Eigen::Vector2d& v);

// Exact Jacobian dI/dV of the draw-convention load current at v0.  For a pure
// constant-impedance load this is the 2x2 expansion of (p0 - j q0) / v_nom^2.
// Requires |v0| > 0.5 pu; de-energized nodes must be excluded upstream.
[[nodiscard]] Eigen::Matrix2d linearize_zip(const ZipLoadParams& load, const Eigen::Vector2d& v0);

} // namespace dnr
