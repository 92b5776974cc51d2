#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "flowgrad/field/gradcheck.hpp"
#include "flowgrad/nn/checkpoint.hpp"
#include "flowgrad/surrogate/inference.hpp"
#include "flowgrad/surrogate/input.hpp"
#include "flowgrad/surrogate/metrics.hpp"
#include "flowgrad/surrogate/train.hpp"
#include "flowgrad/surrogate/unet.hpp"

namespace {

using namespace flowgrad;

GridSpec cube_spec(int n, double spacing = 0.5) {
  return GridSpec(Vec3(0.0, 0.0, 0.0), Vec3(spacing, spacing, spacing),
                  Vec3i(n, n, n));
}

/// Freestream-only corpus: positive SDF everywhere (no obstacle) and a
/// uniform velocity — the constant-function learnability target.
Dataset freestream_dataset(int count, int n, int val_count) {
  const GridSpec spec = cube_spec(n);
  Dataset ds;
  // Aperiodic positive SDF values: repeated patterns would tie pooled
  // activations exactly and put finite differences on a maxpool kink.
  std::mt19937_64 rng(2024);
  for (int s = 0; s < count; ++s) {
    Sample sample;
    sample.sdf = ScalarField3(spec);
    for (std::int64_t i = 0; i < spec.node_count(); ++i)
      sample.sdf.values[i] =
          0.5 + 1.5 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    sample.velocity = VectorField3(spec);
    sample.velocity.values.row(0).setConstant(100.0);
    ds.samples.push_back(std::move(sample));
    ds.sample_ids.push_back(s);
  }
  ds.v_max = 100.0;
  for (int s = 0; s < count - val_count; ++s) ds.train_indices.push_back(s);
  for (int s = count - val_count; s < count; ++s) ds.val_indices.push_back(s);
  return ds;
}

UNetConfig tiny_config() {
  UNetConfig cfg;
  cfg.levels = 2;
  cfg.channels = {4, 8};
  cfg.blocks_per_level = 1;
  cfg.attention = true;
  cfg.mask_mode = MaskMode::sigmoid;
  cfg.mask_temperature = 0.5;
  return cfg;
}

Signal random_sdf_signal(const Vec3i& dims, std::uint64_t seed,
                         double offset = 0.0) {
  std::mt19937_64 rng(seed);
  const std::int64_t n =
      static_cast<std::int64_t>(dims.x()) * dims.y() * dims.z();
  Eigen::VectorXd values(n);
  for (std::int64_t i = 0; i < n; ++i)
    values[i] =
        offset + 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
  return Signal({dims.x(), dims.y(), dims.z()}, std::move(values));
}

}  // namespace

TEST_CASE("mask values reproduce the sigmoid relaxation") {
  for (double k : {0.5, 0.1, 2.0}) {
    CHECK(mask_value(0.0, MaskMode::sigmoid, k) == 0.5);
    CHECK(mask_value(-k, MaskMode::sigmoid, k) ==
          doctest::Approx(0.73106).epsilon(1e-5));
    CHECK(mask_value(k, MaskMode::sigmoid, k) ==
          doctest::Approx(0.26894).epsilon(1e-5));
  }
  CHECK(mask_value(-0.3, MaskMode::hard, 0.5) == 1.0);
  CHECK(mask_value(0.0, MaskMode::hard, 0.5) == 0.0);
  CHECK(mask_value(0.3, MaskMode::hard, 0.5) == 0.0);
  CHECK(mask_derivative(0.7, MaskMode::hard, 0.5) == 0.0);
  CHECK(mask_derivative(0.0, MaskMode::sigmoid, 0.5) ==
        doctest::Approx(-0.25 / 0.5).epsilon(1e-12));
}

TEST_CASE("sigmoid mask is strictly decreasing and sharpens to the hard mask") {
  double prev = 1.0;
  for (double s = -3.0; s <= 3.0; s += 0.25) {
    const double m = mask_value(s, MaskMode::sigmoid, 0.5);
    CHECK(m < prev);
    CHECK(m >= 0.0);
    CHECK(m <= 1.0);
    prev = m;
  }
  // k -> 0+ recovers the hard threshold away from SDF = 0.
  for (double s : {-0.4, -0.05, 0.05, 0.4}) {
    const double sharp = mask_value(s, MaskMode::sigmoid, 1e-4);
    CHECK(sharp == doctest::Approx(mask_value(s, MaskMode::hard, 1.0))
                       .epsilon(1e-12));
  }
}

TEST_CASE("enriched input lays out the eight channels") {
  const Vec3i dims(4, 3, 2);
  const std::int64_t n = 4 * 3 * 2;
  Eigen::ArrayXd sdf(n);
  for (std::int64_t i = 0; i < n; ++i) sdf[i] = 0.1 * static_cast<double>(i) - 0.8;
  Eigen::ArrayXd out(8 * n);
  fill_enriched_input<double>(sdf.data(), dims, 2.0, MaskMode::sigmoid, 0.5,
                              out.data());

  const auto at = [&](int i, int j, int k) {
    return static_cast<std::int64_t>(i) + 4 * (j + 3 * k);
  };
  // Channel 0: SDF / scale.
  CHECK(out[at(2, 1, 1)] == sdf[at(2, 1, 1)] / 2.0);
  // Positional channels: x-hat = 0 gives sin 0 / cos 1; the far face wraps
  // to 2*pi, and interior nodes hit the expected phase.
  CHECK(out[1 * n + at(0, 2, 1)] == 0.0);
  CHECK(out[2 * n + at(0, 2, 1)] == 1.0);
  CHECK(std::abs(out[1 * n + at(3, 0, 0)]) < 1e-12);  // sin(2*pi)
  CHECK(out[2 * n + at(3, 0, 0)] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(out[3 * n + at(0, 1, 0)]) < 1e-12);  // sin(pi)
  CHECK(out[4 * n + at(0, 1, 0)] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(out[5 * n + at(0, 0, 1)]) < 1e-12);  // sin(2*pi)
  CHECK(out[6 * n + at(0, 0, 1)] == doctest::Approx(1.0).epsilon(1e-12));
  // Mask channel.
  CHECK(out[7 * n + at(2, 1, 1)] ==
        mask_value(sdf[at(2, 1, 1)], MaskMode::sigmoid, 0.5));
  // Positional channels stay in [-1,1].
  CHECK((out.segment(n, 6 * n).abs() <= 1.0).all());
}

TEST_CASE("build-input component shape law and sigmoid-mode gradient") {
  const Vec3i dims(5, 4, 3);
  BuildInputComponent comp(dims, 1.7, MaskMode::sigmoid, 0.5);
  CHECK(comp.input_shape() == std::vector<int>{5, 4, 3});
  CHECK(comp.output_shape() == std::vector<int>{8, 5, 4, 3});

  const Signal in = random_sdf_signal(dims, 404);
  const Signal out = comp.forward(in);
  CHECK(out.size() == 8 * in.size());

  GradCheckOptions opt;
  opt.probes = 25;
  const auto report = grad_check(comp, in, opt);
  CHECK(report.passed(1e-6));
}

TEST_CASE("build-input hard mode passes no gradient through the mask") {
  const Vec3i dims(4, 4, 4);
  BuildInputComponent comp(dims, 1.0, MaskMode::hard, 0.5);
  // Keep SDF away from zero so finite differences stay on one branch.
  const Signal in = random_sdf_signal(dims, 405, 3.0);
  GradCheckOptions opt;
  opt.probes = 25;
  CHECK(grad_check(comp, in, opt).passed(1e-6));

  // A cotangent hitting only the mask channel pulls back to exactly zero.
  const std::int64_t n = in.size();
  Signal cot({8, 4, 4, 4}, Eigen::VectorXd::Zero(8 * n));
  cot.values.tail(n).setOnes();
  const Signal pullback = comp.vjp(in, cot);
  CHECK(pullback.values.isZero(0.0));

  CHECK_THROWS_AS(BuildInputComponent(dims, 1.0, MaskMode::sigmoid, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(BuildInputComponent(dims, 0.0, MaskMode::hard, 0.5),
                  std::invalid_argument);
}

TEST_CASE("network config presets and JSON round trip") {
  const UNetConfig paper = paper_unet_config();
  CHECK(paper.levels == 3);
  CHECK(paper.channels == std::vector<int>{64, 128, 512});
  CHECK(paper.attention);
  CHECK(paper.mask_mode == MaskMode::sigmoid);
  CHECK(paper.mask_temperature == 0.5);

  nlohmann::json j = paper;
  const auto back = j.get<UNetConfig>();
  CHECK(back.levels == paper.levels);
  CHECK(back.channels == paper.channels);
  CHECK(back.attention == paper.attention);
  CHECK(back.mask_mode == paper.mask_mode);
  CHECK(back.mask_temperature == paper.mask_temperature);
  CHECK(back.blocks_per_level == paper.blocks_per_level);
  CHECK(back.input_layout == paper.input_layout);
  CHECK(nlohmann::json(back) == j);

  const UNetConfig desk = desk_unet_config();
  CHECK(desk.levels == 2);
  CHECK(desk.channels == std::vector<int>{16, 32});

  UNetConfig bad = desk;
  bad.channels = {16};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = desk;
  bad.mask_temperature = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("freshly built networks are seed-deterministic") {
  const UNetConfig cfg = tiny_config();
  const auto a = make_unet<float>(cfg, 7);
  const auto b = make_unet<float>(cfg, 7);
  const auto c = make_unet<float>(cfg, 8);
  const auto pa = a.named_parameters();
  const auto pb = b.named_parameters();
  const auto pc = c.named_parameters();
  REQUIRE(pa.size() == pb.size());
  bool any_diff = false;
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].first == pb[i].first);
    CHECK((pa[i].second->values == pb[i].second->values).all());
    if ((pa[i].second->values != pc[i].second->values).any()) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("parameter naming and attention-gate widths") {
  const auto desk = make_unet<float>(desk_unet_config(), 1);
  const auto named = desk.named_parameters();
  auto shape_of = [&](const std::string& name) -> std::vector<int> {
    for (const auto& [n, p] : named)
      if (n == name) return p->shape;
    FAIL("missing parameter " << name);
    return {};
  };
  CHECK(shape_of("enc0.0.weight") == std::vector<int>{16, 8, 3, 3, 3});
  CHECK(shape_of("enc0.1.weight") == std::vector<int>{16, 16, 3, 3, 3});
  CHECK(shape_of("enc1.0.weight") == std::vector<int>{32, 16, 3, 3, 3});
  CHECK(shape_of("dec0.0.weight") == std::vector<int>{16, 48, 3, 3, 3});
  CHECK(shape_of("gate0.w_gate") == std::vector<int>{16, 32});
  CHECK(shape_of("gate0.w_skip") == std::vector<int>{16, 16});
  CHECK(shape_of("gate0.psi_w") == std::vector<int>{1, 16});
  CHECK(shape_of("head.weight") == std::vector<int>{3, 16, 3, 3, 3});

  // The deepest paper-scale gate halves its 512 gating channels.
  const auto paper = make_unet<float>(paper_unet_config(), 1);
  const auto pn = paper.named_parameters();
  for (const auto& [n, p] : pn) {
    if (n == "gate1.w_gate") CHECK(p->shape == std::vector<int>{256, 512});
    if (n == "gate1.w_skip") CHECK(p->shape == std::vector<int>{256, 128});
  }
}

TEST_CASE("network forward obeys the shape law and rejects odd windows") {
  const UNetConfig cfg = tiny_config();
  auto net = make_unet<float>(cfg, 3);
  auto x = nn::zeros<float>({1, 8, 4, 6, 4});
  nn::Tape<float> tape;
  auto y = net.forward(tape, x);
  CHECK(y->shape == std::vector<int>{1, 3, 4, 6, 4});

  auto odd = nn::zeros<float>({1, 8, 5, 4, 4});
  CHECK_THROWS_WITH_AS(net.forward(tape, odd), doctest::Contains("level 1"),
                       std::invalid_argument);
}

TEST_CASE("load_parameters restores values and rejects mismatches") {
  const UNetConfig cfg = tiny_config();
  auto src = make_unet<float>(cfg, 11);
  std::vector<std::pair<std::string, nn::TensorPtr<float>>> stored;
  for (const auto& [name, p] : src.named_parameters())
    stored.emplace_back(name, nn::make_tensor<float>(p->shape, p->values));

  auto dst = make_unet<float>(cfg, 99);
  load_parameters(dst, stored);
  const auto a = src.named_parameters();
  const auto b = dst.named_parameters();
  for (size_t i = 0; i < a.size(); ++i)
    CHECK((a[i].second->values == b[i].second->values).all());

  auto truncated = stored;
  truncated.pop_back();
  CHECK_THROWS_AS(load_parameters(dst, truncated), std::runtime_error);
  auto renamed = stored;
  renamed[0].first = "wrong.name";
  CHECK_THROWS_WITH_AS(load_parameters(dst, renamed),
                       doctest::Contains("wrong.name"), std::runtime_error);
  auto reshaped = stored;
  reshaped[0].second = nn::zeros<float>({1, 8, 3, 3, 3});
  CHECK_THROWS_AS(load_parameters(dst, reshaped), std::runtime_error);
}

TEST_CASE("pearson correlation examples") {
  Eigen::ArrayXd x(5);
  x << 0.2, 1.4, -0.7, 3.0, 0.9;
  auto same = pearson(x, x);
  CHECK(!same.degenerate);
  CHECK(same.value == doctest::Approx(1.0).epsilon(1e-14));
  auto anti = pearson(x, (-x).eval());
  CHECK(anti.value == doctest::Approx(-1.0).epsilon(1e-14));

  auto flat = pearson(x, Eigen::ArrayXd::Constant(5, 2.0));
  CHECK(flat.degenerate);
  CHECK(flat.value == 0.0);

  CHECK_THROWS_AS(pearson(x, Eigen::ArrayXd::Zero(4)), std::invalid_argument);
  CHECK_THROWS_AS(pearson(Eigen::ArrayXd::Zero(1), Eigen::ArrayXd::Zero(1)),
                  std::invalid_argument);
}

TEST_CASE("error gradient correlation against a hand-built small case") {
  const GridSpec spec(Vec3(0.0, 0.0, 0.0), Vec3(0.5, 0.25, 1.0), Vec3i(4, 4, 4));
  VectorField3 pred(spec), target(spec);
  std::mt19937_64 rng(515);
  for (std::int64_t at = 0; at < spec.node_count(); ++at)
    for (int c = 0; c < 3; ++c) {
      pred.values(c, at) = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
      target.values(c, at) =
          2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
    }

  // Independent reference: explicit loops, forward/backward one-sided
  // differences, then the textbook Pearson formula.
  const int n = 4;
  Eigen::ArrayXd eps(spec.node_count()), gmag(spec.node_count()),
      speed(spec.node_count());
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const auto at = spec.index(i, j, k);
        eps[at] = (target.values.col(at) - pred.values.col(at)).norm();
        speed[at] = pred.values.col(at).norm();
      }
  auto diff1 = [&](int i, int j, int k, int axis) {
    const int idx[3] = {i, j, k};
    int lo[3] = {i, j, k}, hi[3] = {i, j, k};
    if (idx[axis] + 1 < n)
      hi[axis] += 1;
    else
      lo[axis] -= 1;
    return (eps[spec.index(hi[0], hi[1], hi[2])] -
            eps[spec.index(lo[0], lo[1], lo[2])]) /
           spec.spacing[axis];
  };
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double gx = diff1(i, j, k, 0);
        const double gy = diff1(i, j, k, 1);
        const double gz = diff1(i, j, k, 2);
        gmag[spec.index(i, j, k)] = std::sqrt(gx * gx + gy * gy + gz * gz);
      }
  const double ma = gmag.mean(), mb = speed.mean();
  const double cov = ((gmag - ma) * (speed - mb)).sum();
  const double expected =
      cov / std::sqrt(((gmag - ma).square().sum()) *
                      ((speed - mb).square().sum()));

  const CorrResult got = error_gradient_corr(pred, target);
  CHECK(!got.degenerate);
  CHECK(got.value == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(got.value) <= 1.0);
}

TEST_CASE("error gradient correlation flags constant fields") {
  const GridSpec spec = cube_spec(3);
  VectorField3 pred(spec), target(spec);
  pred.values.row(0).setConstant(1.0);   // constant prediction
  target.values.row(0).setConstant(2.0); // constant error too
  const CorrResult r = error_gradient_corr(pred, target);
  CHECK(r.degenerate);
  CHECK(r.value == 0.0);

  VectorField3 other(cube_spec(4));
  CHECK_THROWS_AS(error_gradient_corr(pred, other), std::invalid_argument);
}

TEST_CASE("net component shape law, de-normalization, and receptive field") {
  UNetConfig cfg;
  cfg.levels = 1;
  cfg.channels = {4};
  cfg.blocks_per_level = 1;
  auto net = std::make_shared<UNet<float>>(make_unet<float>(cfg, 5));
  for (const auto& p : net->parameters()) p->requires_grad = false;
  const Vec3i dims(8, 8, 8);

  NetComponent unit_comp(net, dims, 1.0);
  NetComponent scaled_comp(net, dims, 128.6749);
  CHECK(unit_comp.input_shape() == std::vector<int>{8, 8, 8, 8});
  CHECK(unit_comp.output_shape() == std::vector<int>{8, 8, 8, 3});

  Signal enriched({8, 8, 8, 8}, Eigen::VectorXd::Zero(8 * 512));
  {
    std::mt19937_64 rng(606);
    for (std::int64_t i = 0; i < enriched.size(); ++i)
      enriched.values[i] =
          2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
  }
  const Signal raw = unit_comp.forward(enriched);
  const Signal scaled = scaled_comp.forward(enriched);
  CHECK(raw.shape == std::vector<int>{8, 8, 8, 3});
  CHECK(((scaled.values - 128.6749 * raw.values).array().abs() < 1e-10).all());

  // Two 3x3x3 convolutions give a receptive-field radius of 2: a cotangent
  // concentrated at node (0,0,0) cannot reach an SDF perturbation at the
  // far corner, so that vjp entry is exactly zero in every channel.
  Signal cot({8, 8, 8, 3}, Eigen::VectorXd::Zero(3 * 512));
  cot.values.segment(0, 3).setOnes();
  const Signal pull = unit_comp.vjp(enriched, cot);
  const GridSpec spec = cube_spec(8);
  const std::int64_t far_node = spec.index(7, 7, 7);
  const std::int64_t near_node = spec.index(1, 0, 0);
  bool near_touched = false;
  for (int c = 0; c < 8; ++c) {
    CHECK(pull.values[c * 512 + far_node] == 0.0);
    if (pull.values[c * 512 + near_node] != 0.0) near_touched = true;
  }
  CHECK(near_touched);
}

TEST_CASE("net component vjp is exact in 64-bit mode") {
  UNetConfig cfg = tiny_config();
  auto net = std::make_shared<UNet<double>>(make_unet<double>(cfg, 6));
  for (const auto& p : net->parameters()) p->requires_grad = false;
  const Vec3i dims(4, 4, 4);
  NetComponentT<double> comp(net, dims, 100.0);
  const Signal in = random_sdf_signal(Vec3i(4, 4, 4), 808);
  Signal wide({8, 4, 4, 4}, Eigen::VectorXd::Zero(8 * 64));
  std::mt19937_64 rng(707);
  for (std::int64_t i = 0; i < wide.size(); ++i)
    wide.values[i] = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;

  GradCheckOptions opt;
  opt.probes = 20;
  CHECK(grad_check(comp, wide, opt).passed(1e-6));
}

TEST_CASE("net component vjp matches finite differences in 32-bit mode") {
  UNetConfig cfg = tiny_config();
  auto net = std::make_shared<UNet<float>>(make_unet<float>(cfg, 6));
  for (const auto& p : net->parameters()) p->requires_grad = false;
  const Vec3i dims(4, 4, 4);
  NetComponent comp(net, dims, 100.0);

  Signal in({8, 4, 4, 4}, Eigen::VectorXd::Zero(8 * 64));
  std::mt19937_64 rng(707);
  for (std::int64_t i = 0; i < in.size(); ++i)
    in.values[i] = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;

  // float32 forward passes leave ~1e-3 absolute noise in the difference
  // quotients, so step wide and treat coordinates carrying under 1% of the
  // peak gradient as unresolvable rather than comparing them relatively.
  Signal ones(comp.output_shape(),
              Eigen::VectorXd::Ones(shape_numel(comp.output_shape())));
  const double scale = comp.vjp(in, ones).values.cwiseAbs().maxCoeff();
  GradCheckOptions opt;
  opt.probes = 20;
  opt.step_rel = 1e-2;
  opt.abs_floor = 1e-2 * scale;
  CHECK(grad_check(comp, in, opt).passed(1e-2));

  // A frozen-weight network is a constructor requirement.
  auto live = std::make_shared<UNet<float>>(make_unet<float>(cfg, 6));
  CHECK_THROWS_AS(NetComponent(live, dims, 100.0), std::invalid_argument);
}

TEST_CASE("training learns the freestream constant and logs metrics") {
  const Dataset ds = freestream_dataset(8, 4, 1);
  UNetConfig ucfg = tiny_config();
  TrainConfig tcfg;
  tcfg.batch_size = 2;
  tcfg.learning_rate = 1e-2;
  tcfg.epochs = 40;
  tcfg.seed = 0;

  const TrainResult result = train(ds, ucfg, tcfg);
  REQUIRE(static_cast<int>(result.history.size()) == tcfg.epochs);
  CHECK(result.v_max == 100.0);
  CHECK(result.sdf_scale > 0.0);
  CHECK(result.history.back().val_mse < 1e-3);
  CHECK(result.best_val_mse <= result.history.front().val_mse);
  CHECK(result.best_epoch >= 1);
  for (const auto& m : result.history) {
    CHECK(std::isfinite(m.train_mse));
    CHECK(std::isfinite(m.val_mse));
    CHECK(std::abs(m.corr_grad_err) <= 1.0);
  }

  // Deterministic reruns reproduce the whole metric history bit for bit.
  const TrainResult rerun = train(ds, ucfg, tcfg);
  for (size_t e = 0; e < result.history.size(); ++e) {
    CHECK(rerun.history[e].train_mse == result.history[e].train_mse);
    CHECK(rerun.history[e].val_mse == result.history[e].val_mse);
  }
}

TEST_CASE("training aborts on a non-finite loss with a located report") {
  Dataset ds = freestream_dataset(4, 4, 1);
  ds.samples[1].velocity.values(0, 5) =
      std::numeric_limits<double>::quiet_NaN();
  UNetConfig ucfg = tiny_config();
  TrainConfig tcfg;
  tcfg.batch_size = 4;
  tcfg.learning_rate = 1e-3;
  tcfg.epochs = 2;
  CHECK_THROWS_WITH_AS(train(ds, ucfg, tcfg), doctest::Contains("epoch 1"),
                       std::runtime_error);
}

TEST_CASE("metrics CSV format round-trips through text") {
  std::vector<EpochMetrics> history = {
      {1, 0.125, 0.25, -0.1101}, {2, 0.0625, 0.125, -0.1217}};
  auto path = std::filesystem::temp_directory_path() / "fg_metrics.csv";
  write_metrics_csv(path, history);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,train_mse,val_mse,corr_grad_err");
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    CHECK(std::stoi(field) == rows + 1);
    std::getline(ss, field, ',');
    CHECK(std::stod(field) == history[static_cast<size_t>(rows)].train_mse);
    std::getline(ss, field, ',');
    CHECK(std::stod(field) == history[static_cast<size_t>(rows)].val_mse);
    std::getline(ss, field, ',');
    CHECK(std::stod(field) ==
          history[static_cast<size_t>(rows)].corr_grad_err);
    ++rows;
  }
  CHECK(rows == 2);
  std::filesystem::remove(path);
}

TEST_CASE("saved checkpoints reload into an equivalent inference component") {
  const Dataset ds = freestream_dataset(8, 4, 1);
  UNetConfig ucfg = tiny_config();
  TrainConfig tcfg;
  tcfg.batch_size = 2;
  tcfg.learning_rate = 1e-2;
  tcfg.epochs = 6;

  const TrainResult result = train(ds, ucfg, tcfg);
  auto path = std::filesystem::temp_directory_path() / "fg_model.unw1";
  save_model(path, result.best_weights, ucfg, result.v_max, result.sdf_scale,
             42);

  const LoadedSurrogate loaded = load_surrogate(path);
  CHECK(loaded.v_max == result.v_max);
  CHECK(loaded.sdf_scale == result.sdf_scale);
  CHECK(loaded.split_seed == 42);
  CHECK(loaded.config.channels == ucfg.channels);

  // Stored tensors round-trip exactly.
  const auto ckpt = nn::read_checkpoint(path);
  REQUIRE(ckpt.tensors.size() == result.best_weights.size());
  for (size_t i = 0; i < ckpt.tensors.size(); ++i) {
    CHECK(ckpt.tensors[i].first == result.best_weights[i].first);
    CHECK((ckpt.tensors[i].second->values ==
           result.best_weights[i].second->values)
              .all());
  }

  // The reloaded chain reproduces the recorded best validation MSE.
  const Vec3i dims = ds.samples.front().sdf.spec.dims;
  const auto chain = inference_component(loaded, dims);
  CHECK(chain->input_shape() == std::vector<int>{4, 4, 4});
  CHECK(chain->output_shape() == std::vector<int>{4, 4, 4, 3});
  double mse_sum = 0.0;
  for (int idx : ds.val_indices) {
    const Sample& s = ds.samples[static_cast<size_t>(idx)];
    const Signal out = chain->forward(
        Signal({4, 4, 4}, s.sdf.values.matrix()));
    double acc = 0.0;
    for (std::int64_t at = 0; at < s.sdf.spec.node_count(); ++at)
      for (int c = 0; c < 3; ++c) {
        const double d =
            (out.values[3 * at + c] - s.velocity.values(c, at)) / loaded.v_max;
        acc += d * d;
      }
    mse_sum += acc / static_cast<double>(3 * s.sdf.spec.node_count());
  }
  const double reload_mse = mse_sum / static_cast<double>(ds.val_indices.size());
  CHECK(reload_mse ==
        doctest::Approx(result.best_val_mse).epsilon(1e-4));

  // End to end: SDF signal through builder + network matches gradcheck,
  // with the same float32 noise floor as the bare network stage but a
  // larger step: the chained forward accumulates more rounding noise, and
  // the noise part of the FD error scales as 1/h (verified by step sweep).
  const Signal sdf_in({4, 4, 4}, ds.samples[0].sdf.values.matrix());
  Signal ones(chain->output_shape(),
              Eigen::VectorXd::Ones(shape_numel(chain->output_shape())));
  const double scale =
      chain->vjp(sdf_in, ones).values.cwiseAbs().maxCoeff();
  GradCheckOptions opt;
  opt.probes = 10;
  opt.step_rel = 3e-2;
  opt.abs_floor = 1e-2 * scale;
  CHECK(grad_check(*chain, sdf_in, opt).passed(1e-2));

  std::filesystem::remove(path);
  auto sidecar = path;
  sidecar.replace_extension(".json");
  CHECK(std::filesystem::exists(sidecar));
  std::filesystem::remove(sidecar);
}

TEST_CASE("ablation grid covers the four table rows on a shared split") {
  const Dataset ds = freestream_dataset(6, 4, 1);
  UNetConfig base = tiny_config();
  TrainConfig tcfg;
  tcfg.batch_size = 2;
  tcfg.learning_rate = 1e-3;
  tcfg.epochs = 2;

  const auto rows = run_ablation(ds, base, tcfg);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].attention);
  CHECK(rows[0].mask_mode == MaskMode::hard);
  CHECK(!rows[1].attention);
  CHECK(rows[1].mask_mode == MaskMode::hard);
  CHECK(rows[2].attention);
  CHECK(rows[2].mask_mode == MaskMode::sigmoid);
  CHECK(rows[2].mask_temperature == 0.5);
  CHECK(rows[3].mask_mode == MaskMode::sigmoid);
  CHECK(rows[3].mask_temperature == 0.1);
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.final_train_mse));
    CHECK(std::isfinite(r.final_val_mse));
    CHECK(r.best_val_epoch >= 1);
    CHECK(r.best_val_epoch <= tcfg.epochs);
    CHECK(std::abs(r.corr_grad_err) <= 1.0);
  }

  auto path = std::filesystem::temp_directory_path() / "fg_ablation.csv";
  write_ablation_csv(path, rows);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line ==
        "attn,mask_type,temp,final_train_mse,final_val_mse,best_train_mse,"
        "best_val_mse,best_val_epoch,corr_grad_err");
  int count = 0;
  std::vector<std::string> prefixes = {"yes,hard,x,", "no,hard,x,",
                                       "yes,sigmoid,0.5,", "yes,sigmoid,0.1,"};
  while (std::getline(in, line)) {
    CHECK(line.rfind(prefixes[static_cast<size_t>(count)], 0) == 0);
    ++count;
  }
  CHECK(count == 4);
  std::filesystem::remove(path);
}
