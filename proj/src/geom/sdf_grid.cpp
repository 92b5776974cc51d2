#include "flowgrad/geom/sdf_grid.hpp"

namespace flowgrad {

ScalarField3 sdf_grid(const DesignParams& params, const GridSpec& spec) {
  params.validate();
  spec.validate();
  const Eigen::Matrix3d rt =
      rotation_matrix(params.theta_x, params.theta_y, params.theta_z)
          .transpose();
  ScalarField3 out(spec);
  std::int64_t n = 0;
  for (int k = 0; k < spec.dims[2]; ++k)
    for (int j = 0; j < spec.dims[1]; ++j)
      for (int i = 0; i < spec.dims[0]; ++i, ++n) {
        const Eigen::Vector3d pb = rt * spec.position(i, j, k);
        out.values[n] = round_cone_sdf_body<double>(params.r_a, params.r_b,
                                                    params.length, pb);
      }
  return out;
}

Vec6 sdf_grid_param_vjp(const DesignParams& params, const GridSpec& spec,
                        const Eigen::ArrayXd& cotangent) {
  params.validate();
  if (cotangent.size() != spec.node_count())
    throw std::invalid_argument("sdf_grid_param_vjp: cotangent size mismatch");
  Vec6 acc = Vec6::Zero();
  SdfDerivatives grad;
  std::int64_t n = 0;
  for (int k = 0; k < spec.dims[2]; ++k)
    for (int j = 0; j < spec.dims[1]; ++j)
      for (int i = 0; i < spec.dims[0]; ++i, ++n) {
        const double c = cotangent[n];
        if (c == 0.0) continue;
        sdf_point_grad(params, spec.position(i, j, k), grad);
        acc += c * grad.params;
      }
  return acc;
}

Signal SdfGridComponent::forward(const Signal& in) const {
  check_input(in);
  const ScalarField3 f = sdf_grid(DesignParams::from_vector(in.values), spec_);
  return Signal(output_shape(), f.values.matrix());
}

Signal SdfGridComponent::vjp(const Signal& in, const Signal& cotangent) const {
  check_input(in);
  check_cotangent(cotangent);
  const Vec6 g = sdf_grid_param_vjp(DesignParams::from_vector(in.values),
                                    spec_, cotangent.values.array());
  return Signal({6}, g);
}

}  // namespace flowgrad
