#include "flowgrad/field/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace flowgrad {

double fd_directional(const DiffComponent& comp, const Signal& input,
                      const Signal& cotangent, std::int64_t coord, double h) {
  Signal plus = input;
  Signal minus = input;
  plus.values[coord] += h;
  minus.values[coord] -= h;
  const Signal fp = comp.forward(plus);
  const Signal fm = comp.forward(minus);
  return (cotangent.values.dot(fp.values) - cotangent.values.dot(fm.values)) /
         (2.0 * h);
}

GradCheckReport grad_check(const DiffComponent& comp, const Signal& input,
                           const GradCheckOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::int64_t> coord_dist(0, input.size() - 1);
  std::normal_distribution<double> unit(0.0, 1.0);

  const std::int64_t out_n = shape_numel(comp.output_shape());
  GradCheckReport report;
  int attempts = 0;
  while (report.probes_run < opt.probes && attempts < opt.probes * 50) {
    ++attempts;
    const std::int64_t coord = coord_dist(rng);
    Signal cot(comp.output_shape(), Eigen::VectorXd::NullaryExpr(
                                        out_n, [&](Eigen::Index) { return unit(rng); }));
    const double h = opt.step_rel * std::max(1.0, std::abs(input.values[coord]));
    if (opt.probe_ok && !opt.probe_ok(input, coord, h)) continue;

    const Signal g = comp.vjp(input, cot);
    const double analytic = g.values[coord];
    const double fd = fd_directional(comp, input, cot, coord, h);

    const double scale = std::max(std::abs(analytic), std::abs(fd));
    if (scale < opt.abs_floor) {
      ++report.probes_run;
      continue;
    }
    const double rel = std::abs(analytic - fd) / scale;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_coord = coord;
    }
    ++report.probes_run;
  }
  return report;
}

}  // namespace flowgrad
