#include "flowgrad/surrogate/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "flowgrad/nn/adam.hpp"
#include "flowgrad/nn/checkpoint.hpp"
#include "flowgrad/rng.hpp"
#include "flowgrad/surrogate/input.hpp"
#include "flowgrad/surrogate/metrics.hpp"

namespace flowgrad {

void TrainConfig::validate() const {
  if (batch_size < 1)
    throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (epochs < 1)
    throw std::invalid_argument("TrainConfig: epochs must be >= 1");
}

TrainConfig paper_train_config() { return TrainConfig{}; }

TrainConfig desk_train_config() {
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 40;
  return cfg;
}

namespace {

using FloatArray = Eigen::Array<float, Eigen::Dynamic, 1>;

// One training example prepared for the network: enriched input and
// normalized target, both flat float32 in tensor layout.
struct Prepared {
  nn::TensorPtr<float> input;   // [1,8,D,H,W]
  nn::TensorPtr<float> target;  // [1,3,D,H,W]
};

nn::TensorPtr<float> to_target_tensor(const VectorField3& vel, double v_max,
                                      const std::vector<int>& shape) {
  const std::int64_t n = vel.spec.node_count();
  FloatArray data(3 * n);
  for (int c = 0; c < 3; ++c)
    for (std::int64_t at = 0; at < n; ++at)
      data[c * n + at] = static_cast<float>(vel.values(c, at) / v_max);
  return nn::make_tensor<float>(shape, std::move(data));
}

VectorField3 to_velocity_field(const FloatArray& values, const GridSpec& spec,
                               double v_max) {
  const std::int64_t n = spec.node_count();
  VectorField3 out(spec);
  for (int c = 0; c < 3; ++c)
    for (std::int64_t at = 0; at < n; ++at)
      out.values(c, at) = static_cast<double>(values[c * n + at]) * v_max;
  return out;
}

}  // namespace

TrainResult train(const Dataset& dataset, const UNetConfig& ucfg,
                  const TrainConfig& tcfg) {
  ucfg.validate();
  tcfg.validate();
  if (dataset.samples.empty())
    throw std::invalid_argument("train: dataset has no retained samples");
  if (dataset.train_indices.empty() || dataset.val_indices.empty())
    throw std::invalid_argument("train: dataset split is empty");
  if (!(dataset.v_max > 0.0))
    throw std::invalid_argument("train: dataset v_max must be > 0, got " +
                                std::to_string(dataset.v_max));

  const GridSpec window = dataset.samples.front().sdf.spec;
  const Vec3i dims = window.dims;
  // Tensor spatial order is [D,H,W] = (z,y,x); the flat layouts coincide.
  const std::vector<int> in_shape = {1, UNetConfig::kInputChannels,
                                     static_cast<int>(dims.z()),
                                     static_cast<int>(dims.y()),
                                     static_cast<int>(dims.x())};
  const std::vector<int> out_shape = {1, UNetConfig::kOutputChannels,
                                      static_cast<int>(dims.z()),
                                      static_cast<int>(dims.y()),
                                      static_cast<int>(dims.x())};

  // SDF normalization constant: largest |SDF| seen by the training split.
  double sdf_scale = 0.0;
  for (int idx : dataset.train_indices)
    sdf_scale = std::max(
        sdf_scale,
        dataset.samples[static_cast<size_t>(idx)].sdf.values.abs().maxCoeff());
  if (!(sdf_scale > 0.0))
    throw std::invalid_argument("train: training SDF windows are all zero");

  std::vector<Prepared> prepared(dataset.samples.size());
  for (size_t s = 0; s < dataset.samples.size(); ++s) {
    const Sample& sample = dataset.samples[s];
    // Origins legitimately differ (windows recenter per design); the net
    // only sees node values, so dims and spacing are what must agree.
    if (sample.sdf.spec.dims != window.dims ||
        sample.sdf.spec.spacing != window.spacing)
      throw std::invalid_argument("train: sample " + std::to_string(s) +
                                  " window differs from sample 0");
    FloatArray enriched(UNetConfig::kInputChannels * window.node_count());
    fill_enriched_input<float>(sample.sdf.values.data(), dims, sdf_scale,
                               ucfg.mask_mode, ucfg.mask_temperature,
                               enriched.data());
    prepared[s].input = nn::make_tensor<float>(in_shape, std::move(enriched));
    prepared[s].target =
        to_target_tensor(sample.velocity, dataset.v_max, out_shape);
  }

  TrainResult result;
  result.model = make_unet<float>(ucfg, tcfg.seed);
  result.v_max = dataset.v_max;
  result.sdf_scale = sdf_scale;
  auto params = result.model.parameters();

  nn::AdamState<float> adam;
  adam.learning_rate = static_cast<float>(tcfg.learning_rate);

  std::mt19937_64 shuffle_rng(tcfg.seed ^ 0x5deece66dull);
  std::vector<int> order = dataset.train_indices;

  auto forward_loss = [&](int sample_idx, nn::Tape<float>& tape) {
    auto pred = result.model.forward(
        tape, prepared[static_cast<size_t>(sample_idx)].input);
    return std::make_pair(
        nn::mse(tape, pred, prepared[static_cast<size_t>(sample_idx)].target),
        pred);
  };

  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    // Seeded Fisher-Yates reshuffle of the training order each epoch.
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(
          shuffle_rng() % static_cast<std::uint64_t>(i));
      std::swap(order[i - 1], order[j]);
    }

    double train_loss_sum = 0.0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(tcfg.batch_size)) {
      const size_t stop =
          std::min(order.size(), start + static_cast<size_t>(tcfg.batch_size));
      const int batch = static_cast<int>(start / tcfg.batch_size);
      for (const auto& p : params)
        if (p->grad.size()) p->grad.setZero();
      const float inv_batch = 1.0f / static_cast<float>(stop - start);
      for (size_t s = start; s < stop; ++s) {
        nn::Tape<float> tape;
        auto [loss, pred] = forward_loss(order[s], tape);
        const double value = loss->values[0];
        if (!std::isfinite(value))
          throw std::runtime_error("train: non-finite loss at epoch " +
                                   std::to_string(epoch) + " batch " +
                                   std::to_string(batch));
        train_loss_sum += value;
        const FloatArray seed = FloatArray::Constant(1, inv_batch);
        tape.backward(loss, &seed);
      }
      nn::adam_step(adam, params);
    }

    double val_loss_sum = 0.0;
    double corr_sum = 0.0;
    int corr_count = 0;
    for (int idx : dataset.val_indices) {
      nn::Tape<float> tape;
      auto [loss, pred] = forward_loss(idx, tape);
      val_loss_sum += loss->values[0];
      const Sample& val_sample = dataset.samples[static_cast<size_t>(idx)];
      const CorrResult corr = error_gradient_corr(
          to_velocity_field(pred->values, val_sample.velocity.spec,
                            dataset.v_max),
          val_sample.velocity);
      if (!corr.degenerate) {
        corr_sum += corr.value;
        ++corr_count;
      }
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.train_mse = train_loss_sum / static_cast<double>(order.size());
    metrics.val_mse =
        val_loss_sum / static_cast<double>(dataset.val_indices.size());
    metrics.corr_grad_err =
        corr_count ? corr_sum / static_cast<double>(corr_count) : 0.0;
    result.history.push_back(metrics);

    if (result.best_weights.empty() || metrics.val_mse < result.best_val_mse) {
      result.best_val_mse = metrics.val_mse;
      result.best_epoch = epoch;
      result.best_weights.clear();
      for (const auto& [name, p] : result.model.named_parameters())
        result.best_weights.emplace_back(
            name, nn::make_tensor<float>(p->shape, p->values));
    }
  }
  return result;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<EpochMetrics>& history) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("write_metrics_csv: cannot open " +
                             path.string());
  out << "epoch,train_mse,val_mse,corr_grad_err\n";
  char buf[160];
  for (const auto& m : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", m.epoch,
                  m.train_mse, m.val_mse, m.corr_grad_err);
    out << buf;
  }
  if (!out)
    throw std::runtime_error("write_metrics_csv: write failed for " +
                             path.string());
}

std::vector<AblationRow> run_ablation(const Dataset& dataset,
                                      const UNetConfig& base,
                                      const TrainConfig& tcfg) {
  struct Variant {
    bool attention;
    MaskMode mask_mode;
    double temperature;
  };
  const Variant variants[] = {{true, MaskMode::hard, 0.0},
                              {false, MaskMode::hard, 0.0},
                              {true, MaskMode::sigmoid, 0.5},
                              {true, MaskMode::sigmoid, 0.1}};

  std::vector<AblationRow> rows;
  for (const Variant& v : variants) {
    UNetConfig ucfg = base;
    ucfg.attention = v.attention;
    ucfg.mask_mode = v.mask_mode;
    // Keep the base temperature for the hard mask so validate() stays happy;
    // the mask ignores it.
    if (v.mask_mode == MaskMode::sigmoid) ucfg.mask_temperature = v.temperature;
    const TrainResult result = train(dataset, ucfg, tcfg);

    AblationRow row;
    row.attention = v.attention;
    row.mask_mode = v.mask_mode;
    row.mask_temperature = v.temperature;
    row.final_train_mse = result.history.back().train_mse;
    row.final_val_mse = result.history.back().val_mse;
    row.best_train_mse =
        result.history[static_cast<size_t>(result.best_epoch - 1)].train_mse;
    row.best_val_mse = result.best_val_mse;
    row.best_val_epoch = result.best_epoch;
    row.corr_grad_err = result.history.back().corr_grad_err;
    rows.push_back(row);
  }
  return rows;
}

void write_ablation_csv(const std::filesystem::path& path,
                        const std::vector<AblationRow>& rows) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("write_ablation_csv: cannot open " +
                             path.string());
  out << "attn,mask_type,temp,final_train_mse,final_val_mse,best_train_mse,"
         "best_val_mse,best_val_epoch,corr_grad_err\n";
  char temp[32], buf[240];
  for (const auto& r : rows) {
    const bool sig = r.mask_mode == MaskMode::sigmoid;
    if (sig)
      std::snprintf(temp, sizeof(temp), "%g", r.mask_temperature);
    else
      std::snprintf(temp, sizeof(temp), "x");
    std::snprintf(buf, sizeof(buf),
                  "%s,%s,%s,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n",
                  r.attention ? "yes" : "no", sig ? "sigmoid" : "hard", temp,
                  r.final_train_mse, r.final_val_mse, r.best_train_mse,
                  r.best_val_mse, r.best_val_epoch, r.corr_grad_err);
    out << buf;
  }
  if (!out)
    throw std::runtime_error("write_ablation_csv: write failed for " +
                             path.string());
}

void save_model(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, nn::TensorPtr<float>>>& weights,
    const UNetConfig& ucfg, double v_max, double sdf_scale,
    std::uint64_t split_seed) {
  nlohmann::json config;
  config["unet"] = ucfg;
  config["v_max"] = v_max;
  config["sdf_scale"] = sdf_scale;
  config["split_seed"] = split_seed;
  nn::write_checkpoint(path, weights, config);

  std::filesystem::path sidecar = path;
  sidecar.replace_extension(".json");
  std::ofstream side(sidecar);
  if (!side)
    throw std::runtime_error("save_model: cannot open " + sidecar.string());
  side << config.dump(2) << "\n";
}

}  // namespace flowgrad
