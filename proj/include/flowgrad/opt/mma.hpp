#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <vector>

#include "flowgrad/field/component.hpp"

namespace flowgrad {

/// Termination rule for the optimizer loop: a hard iteration cap plus a
/// relative-step tolerance, measured as the largest per-coordinate move
/// divided by that coordinate's bound range.
struct StopCriteria {
  int max_iters = 20;
  double rel_change_tol = 0.01;

  void validate() const;
};

/// Method-of-moving-asymptotes iterate for box-constrained maximization.
/// The moving asymptotes l, u bracket x strictly and adapt to the step
/// history; x_min, x_max are inclusive bounds with positive range per
/// coordinate. Dimension is fixed by the starting point.
struct MMAState {
  Eigen::VectorXd x;
  Eigen::VectorXd x_prev;
  Eigen::VectorXd x_prev2;
  Eigen::VectorXd l;
  Eigen::VectorXd u;
  Eigen::VectorXd x_min;
  Eigen::VectorXd x_max;
  int iter = 0;
};

/// Validates bounds and starting point and brackets x0 with the initial
/// half-range asymptotes.
MMAState make_mma_state(const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& x_min,
                        const Eigen::VectorXd& x_max);

/// One coordinate's convex subproblem: minimize p/(u-y) + q/(y-l) over
/// [lo, hi], where [lo, hi] is the move-limit window intersected with the
/// box bounds. The numerators are kept factored as p = (u-x)^2 cp and
/// q = (x-l)^2 cq so that a zero gradient (cp == cq bitwise) makes the
/// stationary point land on x exactly instead of up to rounding.
struct MMACoordProblem {
  double x = 0.0;
  double cp = 0.0;
  double cq = 0.0;
  double l = 0.0;
  double u = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  double p() const { return (u - x) * (u - x) * cp; }
  double q() const { return (x - l) * (x - l) * cq; }
};

/// Builds the coordinate subproblem around x for descent gradient dg (the
/// derivative of the minimized objective), with asymptotes l < x < u, box
/// bounds, and bound range for the damping term.
MMACoordProblem mma_coord_problem(double x, double l, double u, double dg,
                                  double x_min, double x_max, double range);

/// Closed-form minimizer of the subproblem: the interior stationary point
/// of p/(u-y) + q/(y-l) clamped to [lo, hi]. Exact because the objective is
/// strictly convex on (l, u).
double mma_coord_solve(const MMACoordProblem& prob);

/// Advances the state by one MMA iteration toward maximizing f: updates the
/// asymptotes from the oscillation history, then solves the separable
/// approximation of -f coordinate by coordinate. A zero gradient leaves x
/// unchanged. Throws std::invalid_argument on non-finite f or grad or on a
/// gradient size mismatch.
void mma_step(MMAState& state, double f, const Eigen::VectorXd& grad);

/// One optimizer iteration record: the evaluated design, its objective and
/// gradient norm, and the relative size of the step taken from it.
struct TrajectoryPoint {
  int iter = 0;
  Eigen::VectorXd x;
  double objective = 0.0;
  double grad_norm = 0.0;
  double rel_change = 0.0;
};

/// Maximizes the scalar output of `objective` over the box [x_min, x_max]
/// starting from x0. The component must map a flat parameter vector to a
/// one-element signal; gradients come from its vjp with unit cotangent.
/// Stops at max_iters or when the relative step drops below the tolerance.
/// Failures from the component or the step are rethrown with the iteration
/// index attached.
std::vector<TrajectoryPoint> optimize(const DiffComponent& objective,
                                      const Eigen::VectorXd& x0,
                                      const Eigen::VectorXd& x_min,
                                      const Eigen::VectorXd& x_max,
                                      const StopCriteria& stop);

// Trajectory CSV: header "iter,r_a,r_b,L,theta_z,objective,grad_norm,
// rel_change", one row per iteration, 17 significant digits. Requires
// 4-parameter designs.
void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<TrajectoryPoint>& trajectory);

/// Expands the four free design parameters (r_a, r_b, L, theta_z) into the
/// 6-vector design layout, pinning theta_x = theta_y = 0.
class EmbedDesignComponent final : public DiffComponent {
 public:
  EmbedDesignComponent() = default;

  const std::string& name() const override { return name_; }
  std::vector<int> input_shape() const override { return {4}; }
  std::vector<int> output_shape() const override { return {6}; }

  Signal forward(const Signal& in) const override;
  Signal vjp(const Signal& in, const Signal& cotangent) const override;

 private:
  std::string name_ = "embed-design";
};

}  // namespace flowgrad
