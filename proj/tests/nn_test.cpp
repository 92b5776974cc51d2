#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "flowgrad/nn/adam.hpp"
#include "flowgrad/nn/checkpoint.hpp"
#include "flowgrad/nn/init.hpp"
#include "flowgrad/nn/ops.hpp"
#include "flowgrad/rng.hpp"

namespace {

using namespace flowgrad;
using nn::Tape;
using nn::Tensor;
using nn::TensorPtr;

template <typename S>
TensorPtr<S> random_tensor(std::vector<int> shape, std::mt19937_64& rng,
                           bool requires_grad = true, double span = 1.0) {
  auto t = nn::zeros<S>(std::move(shape), requires_grad);
  for (std::int64_t i = 0; i < t->numel(); ++i)
    t->values[i] = static_cast<S>(span * (2.0 * unit_draw(rng) - 1.0));
  return t;
}

/// Checks one backward pass against central differences of <cot, f(leaves)>.
/// `f` must rebuild its graph from the leaves' current values on each call.
template <typename S, typename F>
double max_rel_err_fd(F f, const std::vector<TensorPtr<S>>& leaves,
                      std::uint64_t seed, int probes_per_leaf = 8,
                      double h = 1e-5) {
  std::mt19937_64 rng(seed);
  Tape<S> tape;
  auto out = f(tape);
  typename Tensor<S>::Array cot(out->numel());
  for (std::int64_t i = 0; i < out->numel(); ++i)
    cot[i] = static_cast<S>(0.5 + unit_draw(rng));
  for (const auto& leaf : leaves) {
    REQUIRE(leaf->requires_grad);
    leaf->grad.resize(0);
  }
  tape.backward(out, &cot);

  auto dot_forward = [&]() {
    Tape<S> t2;
    auto y = f(t2);
    double acc = 0.0;
    for (std::int64_t i = 0; i < y->numel(); ++i)
      acc += static_cast<double>(y->values[i]) * static_cast<double>(cot[i]);
    return acc;
  };

  double worst = 0.0;
  for (const auto& leaf : leaves) {
    REQUIRE(leaf->grad.size() == leaf->numel());
    for (int p = 0; p < probes_per_leaf; ++p) {
      const std::int64_t i =
          static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(
                                        leaf->numel()));
      const S saved = leaf->values[i];
      leaf->values[i] = saved + static_cast<S>(h);
      const double up = dot_forward();
      leaf->values[i] = saved - static_cast<S>(h);
      const double down = dot_forward();
      leaf->values[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double vjp = static_cast<double>(leaf->grad[i]);
      const double denom = std::max({std::abs(fd), std::abs(vjp), 1e-8});
      worst = std::max(worst, std::abs(fd - vjp) / denom);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("conv3d with the identity kernel reproduces its input") {
  std::mt19937_64 rng(11);
  auto x = random_tensor<double>({1, 1, 4, 4, 4}, rng, false);
  auto w = nn::zeros<double>({1, 1, 3, 3, 3});
  w->values[13] = 1.0;  // kernel center: ((0*3+1)*3+1)*3+1
  auto b = nn::zeros<double>({1});
  Tape<double> tape;
  auto y = nn::conv3d(tape, x, w, b);
  CHECK(y->shape == x->shape);
  CHECK((y->values == x->values).all());
}

TEST_CASE("conv3d all-ones kernel sums the 27-cell window") {
  auto x = nn::full<double>({1, 1, 5, 5, 5}, 1.0);
  auto w = nn::full<double>({1, 1, 3, 3, 3}, 1.0);
  auto b = nn::zeros<double>({1});
  Tape<double> tape;
  auto y = nn::conv3d(tape, x, w, b);
  // Interior nodes see the full window; the domain corner only its 8-cell
  // octant.
  const auto at = [](int d, int h, int w3) { return (d * 5 + h) * 5 + w3; };
  CHECK(y->values[at(2, 2, 2)] == 27.0);
  CHECK(y->values[at(1, 3, 2)] == 27.0);
  CHECK(y->values[at(0, 0, 0)] == 8.0);
}

TEST_CASE("conv3d bias adds per output channel") {
  auto x = nn::zeros<double>({1, 2, 3, 3, 3});
  auto w = nn::zeros<double>({2, 2, 3, 3, 3});
  auto b = nn::make_tensor<double>({2}, Eigen::ArrayXd::LinSpaced(2, 5.0, 6.0));
  Tape<double> tape;
  auto y = nn::conv3d(tape, x, w, b);
  CHECK(y->values.segment(0, 27).isConstant(5.0));
  CHECK(y->values.segment(27, 27).isConstant(6.0));
}

TEST_CASE("conv3d rejects mismatched shapes with named dimensions") {
  Tape<double> tape;
  auto x = nn::zeros<double>({1, 2, 4, 4, 4});
  auto w = nn::zeros<double>({3, 1, 3, 3, 3});
  auto b = nn::zeros<double>({3});
  CHECK_THROWS_WITH_AS(nn::conv3d(tape, x, w, b),
                       doctest::Contains("[3,1,3,3,3]"),
                       std::invalid_argument);
  auto w5 = nn::zeros<double>({3, 2, 3, 3, 5});
  CHECK_THROWS_AS(nn::conv3d(tape, x, w5, b), std::invalid_argument);
  auto w_ok = nn::zeros<double>({3, 2, 3, 3, 3});
  auto b_bad = nn::zeros<double>({4});
  CHECK_THROWS_WITH_AS(nn::conv3d(tape, x, w_ok, b_bad),
                       doctest::Contains("[4]"), std::invalid_argument);
}

TEST_CASE("conv3d gradients match finite differences") {
  std::mt19937_64 rng(21);
  auto x = random_tensor<double>({1, 1, 4, 4, 4}, rng);
  auto w = random_tensor<double>({2, 1, 3, 3, 3}, rng);
  auto b = random_tensor<double>({2}, rng);
  auto f = [&](Tape<double>& t) { return nn::conv3d(t, x, w, b); };
  CHECK(max_rel_err_fd<double>(f, {x, w, b}, 3) < 1e-6);

  // Two-channel batch-of-two variant.
  auto x2 = random_tensor<double>({2, 2, 3, 4, 3}, rng);
  auto w2 = random_tensor<double>({3, 2, 3, 3, 3}, rng);
  auto b2 = random_tensor<double>({3}, rng);
  auto f2 = [&](Tape<double>& t) { return nn::conv3d(t, x2, w2, b2); };
  CHECK(max_rel_err_fd<double>(f2, {x2, w2, b2}, 5) < 1e-6);
}

TEST_CASE("conv3d weight gradient passes the 32-bit tolerance") {
  std::mt19937_64 rng(31);
  auto x = random_tensor<float>({1, 1, 4, 4, 4}, rng);
  auto w = random_tensor<float>({1, 1, 3, 3, 3}, rng);
  auto b = random_tensor<float>({1}, rng);
  auto f = [&](Tape<float>& t) { return nn::conv3d(t, x, w, b); };
  CHECK(max_rel_err_fd<float>(f, {w}, 7, 12, 1e-2) < 1e-2);
}

TEST_CASE("maxpool3d keeps constants and halves the dims") {
  auto x = nn::full<double>({1, 2, 4, 4, 4}, 3.25);
  Tape<double> tape;
  auto y = nn::maxpool3d(tape, x);
  CHECK(y->shape == std::vector<int>{1, 2, 2, 2, 2});
  CHECK(y->values.isConstant(3.25));

  auto odd = nn::zeros<double>({1, 1, 3, 4, 4});
  CHECK_THROWS_WITH_AS(nn::maxpool3d(tape, odd),
                       doctest::Contains("[1,1,3,4,4]"),
                       std::invalid_argument);
}

TEST_CASE("maxpool3d routes gradient to the window argmax") {
  auto x = nn::make_tensor<double>(
      {1, 1, 2, 2, 2}, Eigen::ArrayXd::LinSpaced(8, 1.0, 8.0), true);
  Tape<double> tape;
  auto y = nn::maxpool3d(tape, x);
  REQUIRE(y->numel() == 1);
  CHECK(y->values[0] == 8.0);
  tape.backward(y);
  for (int i = 0; i < 7; ++i) CHECK(x->grad[i] == 0.0);
  CHECK(x->grad[7] == 1.0);
}

TEST_CASE("maxpool3d breaks ties toward the first element in layout order") {
  auto x = nn::full<double>({1, 1, 2, 2, 2}, 2.0, true);
  Tape<double> tape;
  auto y = nn::maxpool3d(tape, x);
  tape.backward(y);
  CHECK(x->grad[0] == 1.0);
  CHECK(x->grad.tail(7).isZero());
}

TEST_CASE("maxpool3d gradient matches finite differences") {
  std::mt19937_64 rng(41);
  auto x = random_tensor<double>({2, 2, 4, 4, 4}, rng);
  auto f = [&](Tape<double>& t) { return nn::maxpool3d(t, x); };
  CHECK(max_rel_err_fd<double>(f, {x}, 9) < 1e-6);
}

TEST_CASE("gelu fixes zero and matches finite differences") {
  auto x = nn::make_tensor<double>(
      {3}, Eigen::ArrayXd{{0.0, 1.0, -1.0}}, true);
  Tape<double> tape;
  auto y = nn::gelu(tape, x);
  CHECK(y->values[0] == 0.0);
  // gelu(1) = Phi(1) and gelu(-1) = -Phi(-1); Phi(1) ~ 0.8413447.
  CHECK(y->values[1] == doctest::Approx(0.84134474606854293).epsilon(1e-12));
  CHECK(y->values[2] == doctest::Approx(-0.15865525393145707).epsilon(1e-12));

  std::mt19937_64 rng(51);
  auto z = random_tensor<double>({2, 3, 2, 2, 2}, rng, true, 2.0);
  auto f = [&](Tape<double>& t) { return nn::gelu(t, z); };
  CHECK(max_rel_err_fd<double>(f, {z}, 11) < 1e-7);
}

TEST_CASE("sigmoid values and gradient") {
  auto x = nn::make_tensor<double>({2}, Eigen::ArrayXd{{0.0, 2.0}}, true);
  Tape<double> tape;
  auto y = nn::sigmoid(tape, x);
  CHECK(y->values[0] == 0.5);
  CHECK(y->values[1] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));

  std::mt19937_64 rng(61);
  auto z = random_tensor<double>({10}, rng, true, 3.0);
  auto f = [&](Tape<double>& t) { return nn::sigmoid(t, z); };
  CHECK(max_rel_err_fd<double>(f, {z}, 13) < 1e-7);
}

TEST_CASE("layer_norm standardizes each channel fiber") {
  std::mt19937_64 rng(71);
  const int C = 5;
  auto x = random_tensor<double>({2, C, 2, 3, 2}, rng, true, 4.0);
  auto gamma = nn::full<double>({C}, 1.0, true);
  auto beta = nn::zeros<double>({C}, true);
  Tape<double> tape;
  auto y = nn::layer_norm(tape, x, gamma, beta);
  const std::int64_t spatial = 2 * 3 * 2;
  for (int n = 0; n < 2; ++n)
    for (std::int64_t s = 0; s < spatial; ++s) {
      double mean = 0.0, var = 0.0;
      for (int c = 0; c < C; ++c)
        mean += y->values[(n * C + c) * spatial + s];
      mean /= C;
      for (int c = 0; c < C; ++c) {
        const double d = y->values[(n * C + c) * spatial + s] - mean;
        var += d * d;
      }
      var /= C;
      CHECK(std::abs(mean) < 1e-5);
      CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("layer_norm applies scale and shift and backpropagates to all") {
  std::mt19937_64 rng(81);
  auto x = random_tensor<double>({1, 4, 2, 2, 2}, rng, true, 2.0);
  auto gamma = random_tensor<double>({4}, rng, true);
  auto beta = random_tensor<double>({4}, rng, true);
  auto f = [&](Tape<double>& t) { return nn::layer_norm(t, x, gamma, beta); };
  CHECK(max_rel_err_fd<double>(f, {x, gamma, beta}, 15) < 1e-6);
}

TEST_CASE("concat_channels stacks blocks and splits gradient") {
  std::mt19937_64 rng(91);
  auto a = random_tensor<double>({2, 2, 2, 2, 2}, rng);
  auto b = random_tensor<double>({2, 3, 2, 2, 2}, rng);
  Tape<double> tape;
  auto y = nn::concat_channels(tape, a, b);
  CHECK(y->shape == std::vector<int>{2, 5, 2, 2, 2});
  // Sample n=1 block boundaries: channels [0,2) from a, [2,5) from b.
  CHECK(y->values[5 * 8 + 0] == a->values[2 * 8 + 0]);
  CHECK(y->values[5 * 8 + 2 * 8] == b->values[3 * 8 + 0]);

  auto f = [&](Tape<double>& t) { return nn::concat_channels(t, a, b); };
  CHECK(max_rel_err_fd<double>(f, {a, b}, 17) < 1e-7);

  auto c = nn::zeros<double>({2, 3, 2, 2, 3});
  CHECK_THROWS_WITH_AS(nn::concat_channels(tape, a, c),
                       doctest::Contains("[2,3,2,2,3]"),
                       std::invalid_argument);
}

TEST_CASE("nearest_upsample2 copies each parent into a 2x2x2 block") {
  auto x = nn::make_tensor<double>({1, 1, 1, 1, 1},
                                   Eigen::ArrayXd::Constant(1, 7.5), true);
  Tape<double> tape;
  auto y = nn::nearest_upsample2(tape, x);
  CHECK(y->shape == std::vector<int>{1, 1, 2, 2, 2});
  CHECK(y->values.isConstant(7.5));
  CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);  // non-scalar
}

TEST_CASE("nearest_upsample2 shape, values, and adjoint") {
  std::mt19937_64 rng(101);
  auto x = random_tensor<double>({1, 2, 2, 3, 2}, rng);
  Tape<double> tape;
  auto y = nn::nearest_upsample2(tape, x);
  CHECK(y->shape == std::vector<int>{1, 2, 4, 6, 4});
  // Spot-check the nearest rule at an interior voxel.
  const auto yat = [](int c, int d, int h, int w) {
    return ((c * 4 + d) * 6 + h) * 4 + w;
  };
  const auto xat = [](int c, int d, int h, int w) {
    return ((c * 2 + d) * 3 + h) * 2 + w;
  };
  CHECK(y->values[yat(1, 3, 5, 2)] == x->values[xat(1, 1, 2, 1)]);

  auto f = [&](Tape<double>& t) { return nn::nearest_upsample2(t, x); };
  CHECK(max_rel_err_fd<double>(f, {x}, 19) < 1e-7);
}

TEST_CASE("scale_channels multiplies by the map and backpropagates both ways") {
  std::mt19937_64 rng(111);
  auto x = random_tensor<double>({1, 3, 2, 2, 2}, rng);
  auto alpha = random_tensor<double>({1, 1, 2, 2, 2}, rng);
  auto f = [&](Tape<double>& t) { return nn::scale_channels(t, x, alpha); };
  CHECK(max_rel_err_fd<double>(f, {x, alpha}, 21) < 1e-7);
}

TEST_CASE("mse values and closed-form gradient") {
  auto p = nn::make_tensor<double>({4}, Eigen::ArrayXd{{1.0, 2.0, 3.0, 4.0}},
                                   true);
  auto t0 = nn::make_tensor<double>({4}, Eigen::ArrayXd{{1.0, 2.0, 3.0, 4.0}});
  Tape<double> tape;
  CHECK(nn::mse(tape, p, t0)->values[0] == 0.0);

  auto t2 = nn::make_tensor<double>({4}, Eigen::ArrayXd{{-1.0, 0.0, 1.0, 2.0}});
  auto loss = nn::mse(tape, p, t2);
  CHECK(loss->values[0] == 4.0);  // difference is 2 everywhere
  tape.backward(loss);
  for (int i = 0; i < 4; ++i)
    CHECK(p->grad[i] == doctest::Approx(2.0 * 2.0 / 4.0));
}

TEST_CASE("attention gate with zero psi halves the skip") {
  std::mt19937_64 rng(121);
  nn::AttentionGate<double> gate;
  gate.w_gate = random_tensor<double>({4, 3}, rng);
  gate.w_skip = random_tensor<double>({4, 2}, rng);
  gate.bias = random_tensor<double>({4}, rng);
  gate.psi_w = nn::zeros<double>({1, 4}, true);
  gate.psi_b = nn::zeros<double>({1}, true);
  auto gating = random_tensor<double>({1, 3, 1, 1, 1}, rng);
  auto skip = random_tensor<double>({1, 2, 2, 2, 2}, rng);
  Tape<double> tape;
  auto y = nn::attention_gate(tape, gate, gating, skip);
  CHECK(y->shape == skip->shape);
  CHECK(((y->values - 0.5 * skip->values).abs() < 1e-15).all());
}

TEST_CASE("attention gate full gradient check") {
  std::mt19937_64 rng(131);
  nn::AttentionGate<double> gate;
  gate.w_gate = random_tensor<double>({4, 3}, rng);
  gate.w_skip = random_tensor<double>({4, 2}, rng);
  gate.bias = random_tensor<double>({4}, rng);
  gate.psi_w = random_tensor<double>({1, 4}, rng);
  gate.psi_b = random_tensor<double>({1}, rng);
  auto gating = random_tensor<double>({1, 3, 1, 2, 1}, rng);
  auto skip = random_tensor<double>({1, 2, 2, 4, 2}, rng);
  auto f = [&](Tape<double>& t) {
    return nn::attention_gate(t, gate, gating, skip);
  };
  CHECK(max_rel_err_fd<double>(
            f, {gate.w_gate, gate.w_skip, gate.bias, gate.psi_w, gate.psi_b,
                gating, skip},
            23) < 1e-6);
}

TEST_CASE("fan-out accumulates both gradient contributions") {
  auto x = nn::make_tensor<double>({3}, Eigen::ArrayXd{{0.3, -0.7, 1.1}},
                                   true);
  auto target = nn::zeros<double>({3});
  // y = gelu(x) feeding two consumers vs an equivalent single expression.
  Tape<double> tape;
  auto y = nn::gelu(tape, x);
  auto loss = nn::mse(tape, nn::add(tape, y, y), target);
  tape.backward(loss);

  // Closed form for L = mean((2 g(x))^2): dL/dx = (8/n) g(x) g'(x).
  for (int i = 0; i < 3; ++i) {
    const double xi = x->values[i];
    const double phi = 0.5 * std::erfc(-xi / std::sqrt(2.0));
    const double pdf = std::exp(-0.5 * xi * xi) / std::sqrt(2.0 * M_PI);
    const double g = xi * phi;
    const double dg = phi + xi * pdf;
    CHECK(x->grad[i] == doctest::Approx(8.0 / 3.0 * g * dg).epsilon(1e-12));
  }

  // Finite differences confirm the accumulated value.
  auto f = [&](Tape<double>& t) {
    auto g = nn::gelu(t, x);
    return nn::add(t, g, g);
  };
  CHECK(max_rel_err_fd<double>(f, {x}, 29) < 1e-7);
}

TEST_CASE("tape rejects bad seeds and mismatched cotangents") {
  auto x = nn::make_tensor<double>({2}, Eigen::ArrayXd{{1.0, 2.0}}, true);
  Tape<double> tape;
  auto y = nn::gelu(tape, x);
  CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);  // non-scalar
  Eigen::ArrayXd bad(3);
  bad.setOnes();
  CHECK_THROWS_AS(tape.backward(y, &bad), std::invalid_argument);
}

TEST_CASE("adam leaves parameters alone under zero gradient") {
  auto p = nn::full<float>({3}, 1.5f, true);
  p->ensure_grad();
  nn::AdamState<float> state;
  nn::adam_step(state, {p});
  CHECK(state.t == 1);
  CHECK(p->values.isConstant(1.5f));
}

TEST_CASE("adam first step moves by about -lr*sign(g)") {
  auto p = nn::full<double>({2}, 0.0, true);
  p->ensure_grad();
  p->grad[0] = 0.37;
  p->grad[1] = -1234.5;
  nn::AdamState<double> state;
  state.learning_rate = 1e-3;
  nn::adam_step(state, {p});
  CHECK(p->values[0] == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(p->values[1] == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("adam trajectory matches a hand-rolled scalar reference") {
  auto p = nn::full<double>({1}, 2.0, true);
  nn::AdamState<double> state;
  state.learning_rate = 0.1;

  double ref = 2.0, m = 0.0, v = 0.0;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double grads[3] = {1.2, -0.4, 0.05};
  for (int t = 1; t <= 3; ++t) {
    p->ensure_grad();
    p->grad.setConstant(grads[t - 1]);
    nn::adam_step(state, {p});
    p->grad.setZero();

    m = b1 * m + (1 - b1) * grads[t - 1];
    v = b2 * v + (1 - b2) * grads[t - 1] * grads[t - 1];
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    ref -= 0.1 * mh / (std::sqrt(vh) + eps);
    CHECK(p->values[0] == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("adam validates the tracked parameter list") {
  auto p = nn::full<float>({2}, 1.0f, true);
  auto q = nn::full<float>({2}, 1.0f, true);
  nn::AdamState<float> state;
  nn::adam_step(state, {p});
  CHECK_THROWS_AS(nn::adam_step(state, {p, q}), std::invalid_argument);
}

TEST_CASE("deterministic init and forward under a fixed seed") {
  std::mt19937_64 rng_a(77), rng_b(77);
  auto a = nn::zeros<float>({4, 2, 3, 3, 3});
  auto b = nn::zeros<float>({4, 2, 3, 3, 3});
  nn::fan_in_uniform(*a, 2 * 27, rng_a);
  nn::fan_in_uniform(*b, 2 * 27, rng_b);
  CHECK((a->values == b->values).all());
  const float bound = std::sqrt(6.0f / (2 * 27));
  CHECK(a->values.abs().maxCoeff() <= bound);
  CHECK(a->values.abs().maxCoeff() > 0.5f * bound);  // actually spread out
}

TEST_CASE("checkpoint round trip preserves tensors and config") {
  std::mt19937_64 rng(141);
  std::vector<std::pair<std::string, TensorPtr<float>>> tensors;
  tensors.emplace_back("layer.weight",
                       random_tensor<float>({2, 3, 3, 3, 3}, rng, false));
  tensors.emplace_back("layer.bias", random_tensor<float>({2}, rng, false));
  nlohmann::json config = {{"v_max", 128.6749}, {"note", "roundtrip"}};

  auto path = std::filesystem::temp_directory_path() / "fg_ckpt.unw1";
  nn::write_checkpoint(path, tensors, config);
  auto back = nn::read_checkpoint(path);
  CHECK(back.config["v_max"] == 128.6749);
  CHECK(back.config["note"] == "roundtrip");
  REQUIRE(back.tensors.size() == 2);
  CHECK(back.tensors[0].first == "layer.weight");
  CHECK(back.find("layer.bias")->shape == std::vector<int>{2});
  CHECK((back.find("layer.weight")->values == tensors[0].second->values)
            .all());
  CHECK_THROWS_AS(back.find("missing"), std::out_of_range);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint reader reports malformed files with byte offsets") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path();
  auto write_bytes = [&](const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  };

  auto bad_magic = dir / "fg_bad_magic.unw1";
  write_bytes(bad_magic, "XXXX........");
  CHECK_THROWS_WITH_AS(nn::read_checkpoint(bad_magic),
                       doctest::Contains("byte offset 0"),
                       nn::CheckpointParseError);

  auto bad_version = dir / "fg_bad_version.unw1";
  write_bytes(bad_version, std::string("UNW1") + std::string(4, '\x07') +
                               std::string(8, '\0'));
  CHECK_THROWS_WITH_AS(nn::read_checkpoint(bad_version),
                       doctest::Contains("byte offset 4"),
                       nn::CheckpointParseError);

  // Valid file plus trailing garbage.
  auto good = dir / "fg_trailing.unw1";
  nn::write_checkpoint(good, {{"t", nn::zeros<float>({2})}}, {});
  {
    std::ofstream app(good, std::ios::binary | std::ios::app);
    app << "junk";
  }
  CHECK_THROWS_AS(nn::read_checkpoint(good), nn::CheckpointParseError);

  // Truncated blob.
  auto trunc = dir / "fg_trunc.unw1";
  nn::write_checkpoint(trunc, {{"t", nn::zeros<float>({4})}}, {});
  fs::resize_file(trunc, fs::file_size(trunc) - 8);
  CHECK_THROWS_WITH_AS(nn::read_checkpoint(trunc), doctest::Contains("'t'"),
                       nn::CheckpointParseError);

  fs::remove(bad_magic);
  fs::remove(bad_version);
  fs::remove(good);
  fs::remove(trunc);
}
