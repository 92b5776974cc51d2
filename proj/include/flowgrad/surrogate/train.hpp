#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "flowgrad/flow/dataset.hpp"
#include "flowgrad/surrogate/unet.hpp"

namespace flowgrad {

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 1.5e-4;
  int epochs = 400;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Paper-scale recipe (the defaults above) and the scaled-down desk recipe:
/// with tens of samples instead of 896, smaller batches give enough
/// optimizer steps to converge inside 40 epochs.
TrainConfig paper_train_config();
TrainConfig desk_train_config();

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_mse = 0.0;
  double val_mse = 0.0;
  double corr_grad_err = 0.0;
};

struct TrainResult {
  UNet<float> model;  // weights after the last epoch
  std::vector<std::pair<std::string, nn::TensorPtr<float>>> best_weights;
  int best_epoch = 0;
  double best_val_mse = 0.0;
  std::vector<EpochMetrics> history;
  double v_max = 0.0;
  double sdf_scale = 0.0;
};

/// Full training run on an in-memory dataset: per-epoch seeded shuffle,
/// batched Adam steps with ordered gradient accumulation, per-epoch
/// validation MSE and error-gradient correlation, best-validation snapshot.
/// Throws on a non-finite loss, naming epoch and batch.
TrainResult train(const Dataset& dataset, const UNetConfig& ucfg,
                  const TrainConfig& tcfg);

/// Metrics history as `epoch,train_mse,val_mse,corr_grad_err`.
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<EpochMetrics>& history);

/// Persists weights plus everything inference needs (network config, v_max,
/// SDF scale, split seed) as a UNW1 checkpoint with a JSON sidecar of the
/// same metadata next to it.
void save_model(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, nn::TensorPtr<float>>>& weights,
    const UNetConfig& ucfg, double v_max, double sdf_scale,
    std::uint64_t split_seed);

/// One row of the attention/masking comparison: the varied settings plus
/// final-epoch losses, the best-validation snapshot, and the final
/// error-gradient correlation.
struct AblationRow {
  bool attention = true;
  MaskMode mask_mode = MaskMode::hard;
  double mask_temperature = 0.0;  // unused for the hard mask
  double final_train_mse = 0.0;
  double final_val_mse = 0.0;
  double best_train_mse = 0.0;
  double best_val_mse = 0.0;
  int best_val_epoch = 0;
  double corr_grad_err = 0.0;
};

/// Trains the four attention/masking variants (attention + hard mask, no
/// attention + hard mask, attention + sigmoid at temperature 0.5 and 0.1) on
/// one shared dataset split and seed, so rows differ only in the varied
/// settings.
std::vector<AblationRow> run_ablation(const Dataset& dataset,
                                      const UNetConfig& base,
                                      const TrainConfig& tcfg);

/// Rows as CSV: `attn,mask_type,temp,final_train_mse,final_val_mse,
/// best_train_mse,best_val_mse,best_val_epoch,corr_grad_err`.
void write_ablation_csv(const std::filesystem::path& path,
                        const std::vector<AblationRow>& rows);

}  // namespace flowgrad
