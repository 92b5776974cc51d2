#include "flowgrad/opt/mma.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace flowgrad {

namespace {

// Svanberg-style constants. The first two iterations bracket x with
// kAsymInit of the bound range per side; afterwards the gap shrinks when a
// coordinate's last two steps changed sign and widens otherwise, clamped to
// [kGapMin, kGapMax] times the range. Each step may use at most kMoveFrac
// of the gap to the asymptote it moves toward.
constexpr double kAsymInit = 0.5;
constexpr double kShrink = 0.7;
constexpr double kExpand = 1.2;
constexpr double kGapMin = 0.01;
constexpr double kGapMax = 10.0;
constexpr double kMoveFrac = 0.5;

// Subproblem weights: kCross mixes a sliver of the gradient into the
// opposite-side term, and kDamping (scaled by 1/range) keeps both terms
// strictly positive. The damping also sets the step law near stationarity:
// once |grad|*range falls below it, steps shrink proportionally to the
// gradient instead of the gap, so the asymptote adaptation settles into
// smooth, non-overshooting convergence.
constexpr double kCross = 0.001;
constexpr double kDamping = 0.2;

}  // namespace

void StopCriteria::validate() const {
  if (max_iters < 1)
    throw std::invalid_argument("StopCriteria: max_iters must be >= 1");
  if (!(rel_change_tol > 0.0))
    throw std::invalid_argument("StopCriteria: rel_change_tol must be > 0");
}

MMAState make_mma_state(const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& x_min,
                        const Eigen::VectorXd& x_max) {
  const Eigen::Index n = x0.size();
  if (n == 0) throw std::invalid_argument("make_mma_state: empty start point");
  if (x_min.size() != n || x_max.size() != n)
    throw std::invalid_argument("make_mma_state: bound size mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(x_min[i] < x_max[i]))
      throw std::invalid_argument(
          "make_mma_state: bounds need positive range at coordinate " +
          std::to_string(i));
    if (x0[i] < x_min[i] || x0[i] > x_max[i])
      throw std::invalid_argument(
          "make_mma_state: start point outside bounds at coordinate " +
          std::to_string(i));
  }
  MMAState st;
  st.x = x0;
  st.x_prev = x0;
  st.x_prev2 = x0;
  st.x_min = x_min;
  st.x_max = x_max;
  const Eigen::VectorXd range = x_max - x_min;
  st.l = x0 - kAsymInit * range;
  st.u = x0 + kAsymInit * range;
  st.iter = 0;
  return st;
}

MMACoordProblem mma_coord_problem(double x, double l, double u, double dg,
                                  double x_min, double x_max, double range) {
  const double dgp = std::max(dg, 0.0);
  const double dgm = std::max(-dg, 0.0);
  const double damp = kDamping / range;
  MMACoordProblem prob;
  prob.x = x;
  prob.l = l;
  prob.u = u;
  prob.cp = (1.0 + kCross) * dgp + kCross * dgm + damp;
  prob.cq = kCross * dgp + (1.0 + kCross) * dgm + damp;
  prob.lo = std::max(x - kMoveFrac * (x - l), x_min);
  prob.hi = std::min(x + kMoveFrac * (u - x), x_max);
  return prob;
}

double mma_coord_solve(const MMACoordProblem& prob) {
  // d/dy [p/(u-y) + q/(y-l)] = p/(u-y)^2 - q/(y-l)^2 = 0 where
  // (y-l)/(u-y) = sqrt(q/p), i.e. y = (l sqrt(p) + u sqrt(q)) /
  // (sqrt(p) + sqrt(q)). Written as a correction to x so the cq == cp
  // case cancels exactly.
  const double gu = prob.u - prob.x;
  const double gl = prob.x - prob.l;
  const double sp = gu * std::sqrt(prob.cp);
  const double sq = gl * std::sqrt(prob.cq);
  const double y =
      prob.x + gl * gu * (std::sqrt(prob.cq) - std::sqrt(prob.cp)) / (sp + sq);
  return std::clamp(y, prob.lo, prob.hi);
}

void mma_step(MMAState& state, double f, const Eigen::VectorXd& grad) {
  const Eigen::Index n = state.x.size();
  if (grad.size() != n)
    throw std::invalid_argument(
        "mma_step: gradient size " + std::to_string(grad.size()) +
        " does not match design size " + std::to_string(n));
  if (!std::isfinite(f))
    throw std::invalid_argument("mma_step: objective is not finite");
  if (!grad.allFinite())
    throw std::invalid_argument("mma_step: gradient is not finite");

  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = state.x[i];
    const double range = state.x_max[i] - state.x_min[i];
    if (state.iter < 2) {
      state.l[i] = x - kAsymInit * range;
      state.u[i] = x + kAsymInit * range;
    } else {
      const double osc =
          (x - state.x_prev[i]) * (state.x_prev[i] - state.x_prev2[i]);
      const double gamma = osc < 0.0 ? kShrink : kExpand;
      const double l = x - gamma * (state.x_prev[i] - state.l[i]);
      const double u = x + gamma * (state.u[i] - state.x_prev[i]);
      state.l[i] = std::clamp(l, x - kGapMax * range, x - kGapMin * range);
      state.u[i] = std::clamp(u, x + kGapMin * range, x + kGapMax * range);
    }
  }

  // Maximization: descend on -f.
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const MMACoordProblem prob = mma_coord_problem(
        state.x[i], state.l[i], state.u[i], -grad[i], state.x_min[i],
        state.x_max[i], state.x_max[i] - state.x_min[i]);
    y[i] = mma_coord_solve(prob);
  }
  state.x_prev2 = std::move(state.x_prev);
  state.x_prev = state.x;
  state.x = std::move(y);
  ++state.iter;
}

std::vector<TrajectoryPoint> optimize(const DiffComponent& objective,
                                      const Eigen::VectorXd& x0,
                                      const Eigen::VectorXd& x_min,
                                      const Eigen::VectorXd& x_max,
                                      const StopCriteria& stop) {
  stop.validate();
  const std::vector<int> in_shape = objective.input_shape();
  if (shape_numel(in_shape) != x0.size())
    throw std::invalid_argument(
        "optimize: component input shape " + shape_to_string(in_shape) +
        " does not hold " + std::to_string(x0.size()) + " parameters");
  if (shape_numel(objective.output_shape()) != 1)
    throw std::invalid_argument("optimize: component output shape " +
                                shape_to_string(objective.output_shape()) +
                                " is not scalar");

  MMAState st = make_mma_state(x0, x_min, x_max);
  const Eigen::VectorXd range = x_max - x_min;
  std::vector<TrajectoryPoint> trajectory;
  trajectory.reserve(static_cast<size_t>(stop.max_iters));
  for (int it = 1; it <= stop.max_iters; ++it) {
    TrajectoryPoint point;
    point.iter = it;
    point.x = st.x;
    try {
      const Signal out = objective.forward(Signal(in_shape, st.x));
      point.objective = out.values[0];
      const Signal grad = objective.vjp(Signal(in_shape, st.x),
                                        Signal::scalar(1.0));
      point.grad_norm = grad.values.norm();
      mma_step(st, point.objective, grad.values);
    } catch (const std::exception& err) {
      throw std::runtime_error("optimize: iteration " + std::to_string(it) +
                               ": " + err.what());
    }
    point.rel_change =
        ((st.x - point.x).cwiseAbs().cwiseQuotient(range)).maxCoeff();
    trajectory.push_back(std::move(point));
    if (trajectory.back().rel_change < stop.rel_change_tol) break;
  }
  return trajectory;
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<TrajectoryPoint>& trajectory) {
  for (const TrajectoryPoint& point : trajectory)
    if (point.x.size() != 4)
      throw std::invalid_argument(
          "write_trajectory_csv: expected 4-parameter designs, got " +
          std::to_string(point.x.size()));
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("write_trajectory_csv: cannot open " +
                             path.string());
  out << "iter,r_a,r_b,L,theta_z,objective,grad_norm,rel_change\n";
  char buf[64];
  for (const TrajectoryPoint& point : trajectory) {
    out << point.iter;
    const double cols[] = {point.x[0],      point.x[1],      point.x[2],
                           point.x[3],      point.objective, point.grad_norm,
                           point.rel_change};
    for (double v : cols) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out)
    throw std::runtime_error("write_trajectory_csv: write failed for " +
                             path.string());
}

Signal EmbedDesignComponent::forward(const Signal& in) const {
  check_input(in);
  Eigen::VectorXd out(6);
  out << in.values[0], in.values[1], in.values[2], 0.0, 0.0, in.values[3];
  return Signal(output_shape(), std::move(out));
}

Signal EmbedDesignComponent::vjp(const Signal& in, const Signal& cotangent) const {
  check_input(in);
  check_cotangent(cotangent);
  Eigen::VectorXd grad(4);
  grad << cotangent.values[0], cotangent.values[1], cotangent.values[2],
      cotangent.values[5];
  return Signal(input_shape(), std::move(grad));
}

}  // namespace flowgrad
