#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include "flowgrad/field/component.hpp"

namespace flowgrad {

struct GradCheckOptions {
  double step_rel = 1e-4;   // h = step_rel * max(1, |x_i|)
  double rel_tol = 1e-3;
  double abs_floor = 1e-9;  // both sides below this count as a match
  int probes = 20;
  std::uint64_t seed = 0x9e3779b97f4a7c15ull;
  /// Optional veto: given (input, coordinate index, step), return false to
  /// resample the probe. Used to skip probes whose +/-h evaluations would
  /// fall on different branches of a piecewise-constant choice (e.g. a
  /// quantized crop window).
  std::function<bool(const Signal&, std::int64_t, double)> probe_ok;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::int64_t worst_coord = -1;
  int probes_run = 0;
  bool passed(double tol) const { return probes_run > 0 && max_rel_err < tol; }
};

/// Central-difference check of one coordinate against the vjp-backed
/// directional derivative <cotangent, df/dx_i>.
double fd_directional(const DiffComponent& comp, const Signal& input,
                      const Signal& cotangent, std::int64_t coord, double h);

/// Probes `opt.probes` random (coordinate, cotangent) pairs and reports the
/// worst relative disagreement between vjp and central differences.
GradCheckReport grad_check(const DiffComponent& comp, const Signal& input,
                           const GradCheckOptions& opt = {});

}  // namespace flowgrad
