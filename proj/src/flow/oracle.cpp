#include "flowgrad/flow/oracle.hpp"

#include <cmath>
#include <random>

namespace flowgrad {

VectorField3 synth_flow(const ScalarField3& sdf, const OracleConfig& cfg) {
  cfg.validate();
  const GridSpec& spec = sdf.spec;
  const double tau = 0.5 * cfg.decay_length;
  const double kappa = 4.0 * cfg.decay_length;
  const double dx = spec.spacing[0];

  VectorField3 out(spec);
  // March each (y,z) column downstream, accumulating the soft occupancy
  // that feeds the wake deficit.
  for (int k = 0; k < spec.dims[2]; ++k)
    for (int j = 0; j < spec.dims[1]; ++j) {
      double occupancy = 0.0;
      for (int i = 0; i < spec.dims[0]; ++i) {
        const double s = sdf.at(i, j, k);
        occupancy += dx / (1.0 + std::exp(s / tau));
        if (s <= 0.0) continue;  // no-slip: exact zero on and inside
        const double boundary = 1.0 - std::exp(-s / cfg.decay_length);
        const double wake = 1.0 - std::exp(-occupancy / kappa);
        out.at(i, j, k) =
            cfg.freestream * (boundary * (1.0 - cfg.wake_factor * wake));
      }
    }

  if (cfg.seed != 0) {
    std::mt19937_64 rng(cfg.seed);
    for (std::int64_t n = 0; n < out.values.cols(); ++n) {
      const double u =
          static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
      if (sdf.values[n] > 0.0)
        out.values.col(n) *= 1.0 + 0.005 * (2.0 * u - 1.0);
    }
  }
  return out;
}

}  // namespace flowgrad
