#pragma once

#include "flowgrad/field/component.hpp"
#include "flowgrad/field/grid.hpp"
#include "flowgrad/geom/round_cone.hpp"

namespace flowgrad {

/// Evaluates the rounded-cone SDF at every grid node.
ScalarField3 sdf_grid(const DesignParams& params, const GridSpec& spec);

/// Accumulates <cotangent, d SDF/d params> over all nodes into a 6-vector.
Vec6 sdf_grid_param_vjp(const DesignParams& params, const GridSpec& spec,
                        const Eigen::ArrayXd& cotangent);

/// DiffComponent wrapper: design 6-vector in, SDF grid values out.
class SdfGridComponent final : public DiffComponent {
 public:
  explicit SdfGridComponent(const GridSpec& spec) : spec_(spec) {}

  const std::string& name() const override { return name_; }
  std::vector<int> input_shape() const override { return {6}; }
  std::vector<int> output_shape() const override {
    return {spec_.dims[0], spec_.dims[1], spec_.dims[2]};
  }

  Signal forward(const Signal& in) const override;
  Signal vjp(const Signal& in, const Signal& cotangent) const override;

  const GridSpec& spec() const { return spec_; }

 private:
  GridSpec spec_;
  std::string name_ = "geometry";
};

}  // namespace flowgrad
