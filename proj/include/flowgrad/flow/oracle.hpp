#pragma once

#include <cstdint>
#include <stdexcept>

#include "flowgrad/field/grid.hpp"

namespace flowgrad {

/// Settings of the analytic flow stand-in. `seed` enables a reproducible
/// +-0.5% multiplicative perturbation outside the solid when nonzero; zero
/// (the default) keeps the field fully deterministic in the SDF alone.
struct OracleConfig {
  Vec3 freestream{100.0, 0.0, 0.0};
  double decay_length = 0.5;
  double wake_factor = 0.3;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(decay_length > 0.0))
      throw std::invalid_argument("OracleConfig: decay_length must be > 0");
    if (!(wake_factor >= 0.0))
      throw std::invalid_argument("OracleConfig: wake_factor must be >= 0");
  }
};

/// Analytic velocity field built from an SDF grid:
///
///   U(p) = 0                                          where s(p) <= 0
///   U(p) = freestream * (1 - exp(-s/decay_length))
///                     * (1 - wake_factor * w(p))      where s(p) > 0
///
/// with the wake deficit accumulated along +x per (y,z) column,
///
///   w(p) = 1 - exp( -(1/kappa) * sum_{x' <= x} sigma(-s(x',y,z)/tau) dx ),
///
/// sigma the logistic function, tau = decay_length/2 the occupancy softness
/// and kappa = 4*decay_length the wake saturation chord. The field vanishes
/// on and inside the solid, tends to the freestream far away, stays bounded
/// by |freestream| for wake_factor <= 1, and is smooth in the SDF values.
/// The saturating exponential makes the total deficit of a column grow
/// sub-additively with chord length, so at fixed volume an obstacle aligned
/// with +x (few long chords) costs less than a tilted one (many short
/// chords) — the property the optimization landscape relies on.
VectorField3 synth_flow(const ScalarField3& sdf, const OracleConfig& cfg);

}  // namespace flowgrad
