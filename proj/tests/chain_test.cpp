#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>
#include <vector>

#include "flowgrad/field/gradcheck.hpp"
#include "flowgrad/geom/sdf_grid.hpp"
#include "flowgrad/opt/mma.hpp"
#include "flowgrad/surrogate/inference.hpp"
#include "flowgrad/surrogate/input.hpp"
#include "flowgrad/surrogate/unet.hpp"

namespace {

using namespace flowgrad;

// Desk-scale pipeline geometry: a grid wide enough to hold every admissible
// inclusion (|axis extent| <= L/2 + r = 4 after any rotation), with extra
// room downstream (+x) and an even-dimension window so two pooling levels
// divide cleanly.
GridSpec desk_grid() {
  return GridSpec(Vec3(-7.0, -5.425, -5.425), Vec3(0.35, 0.35, 0.35),
                  Vec3i(64, 32, 32));
}

const Vec3i kWindow(40, 20, 20);

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

/// All stages of the design-to-QoI chain, kept individually addressable so
/// tests can recompute the crop placement for finite-difference vetoes.
template <typename S>
struct PipelineStages {
  std::shared_ptr<EmbedDesignComponent> embed;
  std::shared_ptr<SdfGridComponent> geometry;
  std::shared_ptr<CenteredCropComponent> crop;
  std::shared_ptr<BuildInputComponent> build;
  std::shared_ptr<NetComponentT<S>> net;
  std::shared_ptr<MeanComponentQoI> qoi;
  DiffComponentPtr full;
};

template <typename S>
PipelineStages<S> make_pipeline(std::uint64_t weight_seed) {
  const GridSpec grid = desk_grid();
  PipelineStages<S> p;
  p.embed = std::make_shared<EmbedDesignComponent>();
  p.geometry = std::make_shared<SdfGridComponent>(grid);
  p.crop = std::make_shared<CenteredCropComponent>(grid.dims, kWindow);
  p.build = std::make_shared<BuildInputComponent>(kWindow, 2.0,
                                                  MaskMode::sigmoid, 0.5);
  auto net = std::make_shared<UNet<S>>(
      make_unet<S>(desk_unet_config(), weight_seed));
  p.net = std::make_shared<NetComponentT<S>>(net, kWindow, 100.0);
  p.qoi = std::make_shared<MeanComponentQoI>(kWindow, 0);
  p.full = chain({p.embed, p.geometry, p.crop, p.build, p.net, p.qoi});
  return p;
}

/// Window placement for a 4-parameter design: embed, evaluate the SDF, and
/// ask the crop stage where it would put the window.
template <typename S>
Vec3i window_origin(const PipelineStages<S>& p, const Signal& params) {
  return p.crop->window_origin_for(p.geometry->forward(p.embed->forward(params)));
}

/// Probe veto for finite differences through the chain: the crop window
/// placement is piecewise constant in the design, so a probe whose +/-h
/// evaluations land on different placements compares two different
/// functions and must be resampled.
template <typename S>
std::function<bool(const Signal&, std::int64_t, double)> same_window_veto(
    const PipelineStages<S>& p) {
  return [&p](const Signal& in, std::int64_t coord, double h) {
    Signal plus = in;
    Signal minus = in;
    plus.values[coord] += h;
    minus.values[coord] -= h;
    return window_origin(p, plus) == window_origin(p, minus);
  };
}

}  // namespace

TEST_CASE("design-to-QoI chain wires shapes and evaluates deterministically") {
  const auto p = make_pipeline<double>(7);
  CHECK(p.full->input_shape() == std::vector<int>{4});
  CHECK(p.full->output_shape() == std::vector<int>{1});

  const Signal params({4}, vec({1.0, 0.8, 3.5, 0.2}));
  const Signal a = p.full->forward(params);
  const Signal b = p.full->forward(params);
  REQUIRE(a.values.size() == 1);
  CHECK(std::isfinite(a.values[0]));
  CHECK(a.values[0] == b.values[0]);

  // A fresh pipeline from the same weight seed reproduces the value bitwise.
  const auto q = make_pipeline<double>(7);
  CHECK(q.full->forward(params).values[0] == a.values[0]);

  // Different weights give a different QoI: the network is actually in the
  // loop, not short-circuited.
  const auto r = make_pipeline<double>(8);
  CHECK(r.full->forward(params).values[0] != a.values[0]);
}

TEST_CASE("window veto matches direct placement comparison and can fire") {
  const auto p = make_pipeline<double>(7);
  const auto veto = same_window_veto(p);

  // Maximal radius asymmetry pushes the negative-region centroid ~0.15 L
  // off center along the axis, so a large rotation swings the placement by
  // several nodes while a small step leaves it put.
  const Signal params({4}, vec({1.5, 0.5, 5.0, 0.0}));
  int fired = 0;
  for (std::int64_t coord = 0; coord < 4; ++coord)
    for (double h : {1e-4, 0.05, 0.4, 1.4}) {
      Signal plus = params;
      Signal minus = params;
      plus.values[coord] += h;
      minus.values[coord] -= h;
      const bool same = window_origin(p, plus) == window_origin(p, minus);
      CAPTURE(coord);
      CAPTURE(h);
      CHECK(veto(params, coord, h) == same);
      if (!same) ++fired;
    }
  CHECK(fired > 0);
  CHECK(veto(params, 3, 1e-4));
  CHECK_FALSE(veto(params, 3, 1.4));
}

TEST_CASE("full chain gradient matches finite differences in double") {
  const auto p = make_pipeline<double>(7);
  const Signal params({4}, vec({1.0, 0.8, 3.5, 0.2}));

  GradCheckOptions opt;
  opt.probes = 20;
  opt.step_rel = 1e-4;
  opt.rel_tol = 1e-3;
  opt.probe_ok = same_window_veto(p);
  const GradCheckReport report = grad_check(*p.full, params, opt);
  CAPTURE(report.max_rel_err);
  CAPTURE(report.worst_coord);
  CHECK(report.probes_run == 20);
  CHECK(report.passed(1e-3));

  // The parameter gradient itself is finite and nonzero: the QoI genuinely
  // depends on all four design parameters through the network.
  const Signal one({1}, Eigen::VectorXd::Ones(1));
  const Signal g = p.full->vjp(params, one);
  REQUIRE(g.values.size() == 4);
  CHECK(g.values.allFinite());
  CHECK(g.values.cwiseAbs().minCoeff() > 0.0);
}

TEST_CASE("production float chain stays within its finite-difference noise") {
  const auto p = make_pipeline<float>(7);
  const Signal params({4}, vec({1.0, 0.8, 3.5, 0.2}));

  // Float32 methodology: larger step (noise part of the FD error scales as
  // 1/h) and a floor cut from the gradient's own scale so near-zero
  // coordinates are not measured against rounding noise.
  const Signal one({1}, Eigen::VectorXd::Ones(1));
  const double scale =
      p.full->vjp(params, one).values.cwiseAbs().maxCoeff();
  REQUIRE(scale > 0.0);
  GradCheckOptions opt;
  opt.probes = 20;
  opt.step_rel = 3e-2;
  opt.abs_floor = 1e-2 * scale;
  opt.probe_ok = same_window_veto(p);
  const GradCheckReport report = grad_check(*p.full, params, opt);
  CAPTURE(report.max_rel_err);
  CAPTURE(report.worst_coord);
  CHECK(report.probes_run == 20);
  CHECK(report.passed(1e-2));
}
