#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "flowgrad/field/grid.hpp"
#include "flowgrad/flow/oracle.hpp"
#include "flowgrad/geom/design.hpp"

namespace flowgrad {

/// One training example: SDF window and velocity window on the same grid.
struct Sample {
  DesignParams params;
  ScalarField3 sdf;
  VectorField3 velocity;

  void validate() const {
    if (sdf.spec != velocity.spec)
      throw std::invalid_argument("Sample: sdf and velocity grids differ");
  }
};

/// Per-design manifest row; rejected designs keep their reason and the
/// offending magnitude for the audit trail.
struct SampleRecord {
  int id = 0;
  DesignParams params;
  bool retained = true;
  std::string reject_reason;  // empty when retained
  double max_umag = 0.0;
};

struct Dataset {
  std::vector<Sample> samples;  // retained samples only
  std::vector<int> sample_ids;  // design id per retained sample
  double v_max = 0.0;           // normalization constant
  std::vector<int> train_indices;  // positions in `samples`
  std::vector<int> val_indices;
  std::vector<SampleRecord> records;  // every design, retained or not
};

/// Empty when the sample passes; otherwise the rejection reason, citing the
/// first offending node index.
std::string rejection_reason(const Sample& sample, double max_velocity = 160.0);

double sample_max_umag(const Sample& sample);

/// Drops samples with non-finite values or any node above the velocity
/// threshold. Indices of dropped inputs (with reasons) land in `report`
/// pairs of (input index, reason) when provided.
std::vector<Sample> filter_samples(
    const std::vector<Sample>& samples,
    std::vector<std::pair<int, std::string>>* report = nullptr,
    double max_velocity = 160.0);

/// Largest velocity magnitude over all nodes of all samples.
double dataset_v_max(const std::vector<Sample>& samples);

/// Seeded shuffle split with a 6:1 train:val ratio (val = n/7 rounded down).
std::pair<std::vector<int>, std::vector<int>> split_indices(
    int count, std::uint64_t seed);

/// Full data-generation pass: per design, SDF on `spec`, oracle flow, window
/// crop centered on the solid, then filtering, normalization and the split.
Dataset build_dataset(const std::vector<DesignParams>& designs,
                      const GridSpec& spec, const Vec3i& window,
                      const OracleConfig& cfg, std::uint64_t split_seed = 42,
                      double max_velocity = 160.0);

/// Reads one sample from a DSF1 pair. The single-argument form derives the
/// velocity path by swapping a `_sdf` suffix for `_vel`. External samples
/// carry no design row; params are defaulted.
Sample ingest_external(const std::filesystem::path& sdf_path,
                       const std::filesystem::path& vel_path);
Sample ingest_external(const std::filesystem::path& sdf_path);

// Dataset directory layout: `<id>_sdf.dsf` and `<id>_vel.dsf` per retained
// sample, `manifest.csv` over all designs, `meta.json` with the
// normalization constant, split and oracle settings.
void write_dataset_dir(const std::filesystem::path& dir, const Dataset& ds,
                       const OracleConfig& cfg);
Dataset read_dataset_dir(const std::filesystem::path& dir);

void write_manifest_csv(const std::filesystem::path& path,
                        const std::vector<SampleRecord>& records);
std::vector<SampleRecord> read_manifest_csv(const std::filesystem::path& path);

}  // namespace flowgrad
