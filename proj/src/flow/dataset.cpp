#include "flowgrad/flow/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "flowgrad/field/crop.hpp"
#include "flowgrad/field/dsf_io.hpp"
#include "flowgrad/geom/sdf_grid.hpp"

namespace flowgrad {

namespace {

std::string format_sig17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double sample_max_umag(const Sample& sample) {
  return sample.velocity.magnitudes().maxCoeff();
}

std::string rejection_reason(const Sample& sample, double max_velocity) {
  sample.validate();
  for (std::int64_t n = 0; n < sample.sdf.values.size(); ++n)
    if (!std::isfinite(sample.sdf.values[n]))
      return "non-finite sdf at node " + std::to_string(n);
  for (std::int64_t n = 0; n < sample.velocity.values.cols(); ++n) {
    const Eigen::Vector3d u = sample.velocity.values.col(n);
    if (!u.allFinite()) return "non-finite velocity at node " + std::to_string(n);
    const double mag = u.norm();
    if (mag > max_velocity) {
      char buf[96];
      std::snprintf(buf, sizeof(buf),
                    "velocity magnitude %.6g exceeds %.6g at node %lld", mag,
                    max_velocity, static_cast<long long>(n));
      return buf;
    }
  }
  return {};
}

std::vector<Sample> filter_samples(
    const std::vector<Sample>& samples,
    std::vector<std::pair<int, std::string>>* report, double max_velocity) {
  std::vector<Sample> retained;
  retained.reserve(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    std::string reason = rejection_reason(samples[i], max_velocity);
    if (reason.empty())
      retained.push_back(samples[i]);
    else if (report)
      report->emplace_back(static_cast<int>(i), std::move(reason));
  }
  return retained;
}

double dataset_v_max(const std::vector<Sample>& samples) {
  double v = 0.0;
  for (const Sample& s : samples) v = std::max(v, sample_max_umag(s));
  return v;
}

std::pair<std::vector<int>, std::vector<int>> split_indices(
    int count, std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("split_indices: count < 0");
  std::vector<int> order(count);
  for (int i = 0; i < count; ++i) order[i] = i;
  // Fisher-Yates with the raw engine keeps the permutation identical across
  // standard libraries (std::shuffle's draw pattern is implementation-
  // defined).
  std::mt19937_64 rng(seed);
  for (int i = count - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  const int val_count = count / 7;  // 6:1 train:val
  std::vector<int> val(order.begin(), order.begin() + val_count);
  std::vector<int> train(order.begin() + val_count, order.end());
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {std::move(train), std::move(val)};
}

Dataset build_dataset(const std::vector<DesignParams>& designs,
                      const GridSpec& spec, const Vec3i& window,
                      const OracleConfig& cfg, std::uint64_t split_seed,
                      double max_velocity) {
  detail::check_window(spec.dims, Vec3i::Zero(), window);
  Dataset ds;
  ds.records.reserve(designs.size());
  for (size_t d = 0; d < designs.size(); ++d) {
    ScalarField3 full_sdf = sdf_grid(designs[d], spec);
    VectorField3 full_vel = synth_flow(full_sdf, cfg);
    const Vec3i start = negative_region_window(full_sdf, window);

    Sample sample;
    sample.params = designs[d];
    sample.sdf = crop_to_window(full_sdf, start, window);
    sample.velocity = crop_to_window(full_vel, start, window);

    SampleRecord rec;
    rec.id = static_cast<int>(d);
    rec.params = designs[d];
    rec.max_umag = sample_max_umag(sample);
    rec.reject_reason = rejection_reason(sample, max_velocity);
    rec.retained = rec.reject_reason.empty();
    ds.records.push_back(rec);

    if (rec.retained) {
      ds.samples.push_back(std::move(sample));
      ds.sample_ids.push_back(rec.id);
    }
  }
  ds.v_max = dataset_v_max(ds.samples);
  std::tie(ds.train_indices, ds.val_indices) =
      split_indices(static_cast<int>(ds.samples.size()), split_seed);
  return ds;
}

Sample ingest_external(const std::filesystem::path& sdf_path,
                       const std::filesystem::path& vel_path) {
  Sample sample;
  sample.sdf = read_dsf_scalar(sdf_path);
  sample.velocity = read_dsf_vector(vel_path);
  if (sample.sdf.spec != sample.velocity.spec)
    throw DsfParseError("ingest: grid of " + vel_path.string() +
                            " does not match " + sdf_path.string(),
                        0);
  return sample;
}

Sample ingest_external(const std::filesystem::path& sdf_path) {
  std::string stem = sdf_path.stem().string();
  const std::string suffix = "_sdf";
  if (stem.size() < suffix.size() ||
      stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) != 0)
    throw std::invalid_argument(
        "ingest: cannot derive velocity path; expected a *_sdf file, got " +
        sdf_path.string());
  stem.replace(stem.size() - suffix.size(), suffix.size(), "_vel");
  std::filesystem::path vel_path = sdf_path;
  vel_path.replace_filename(stem + sdf_path.extension().string());
  return ingest_external(sdf_path, vel_path);
}

void write_manifest_csv(const std::filesystem::path& path,
                        const std::vector<SampleRecord>& records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << "id,r_a,r_b,L,theta_x,theta_y,theta_z,retained,reject_reason,max_umag\n";
  for (const SampleRecord& r : records) {
    if (r.reject_reason.find(',') != std::string::npos)
      throw std::runtime_error("manifest: reject reason contains a comma");
    os << r.id << ',' << format_sig17(r.params.r_a) << ','
       << format_sig17(r.params.r_b) << ',' << format_sig17(r.params.length)
       << ',' << format_sig17(r.params.theta_x) << ','
       << format_sig17(r.params.theta_y) << ','
       << format_sig17(r.params.theta_z) << ',' << (r.retained ? 1 : 0) << ','
       << r.reject_reason << ',' << format_sig17(r.max_umag) << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<SampleRecord> read_manifest_csv(
    const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path.string());
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("empty manifest: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,r_a,r_b,L,theta_x,theta_y,theta_z,retained,reject_reason,max_umag")
    throw std::runtime_error("unexpected manifest header in " + path.string());

  std::vector<SampleRecord> records;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell[10];
    for (int c = 0; c < 10; ++c)
      if (!std::getline(ls, cell[c], ','))
        throw std::runtime_error("short manifest row at " + path.string() +
                                 ":" + std::to_string(lineno));
    SampleRecord r;
    try {
      r.id = std::stoi(cell[0]);
      r.params = DesignParams(std::stod(cell[1]), std::stod(cell[2]),
                              std::stod(cell[3]), std::stod(cell[4]),
                              std::stod(cell[5]), std::stod(cell[6]));
      r.retained = std::stoi(cell[7]) != 0;
      r.reject_reason = cell[8];
      r.max_umag = std::stod(cell[9]);
    } catch (const std::exception& e) {
      throw std::runtime_error("bad manifest row at " + path.string() + ":" +
                               std::to_string(lineno) + ": " + e.what());
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_dataset_dir(const std::filesystem::path& dir, const Dataset& ds,
                       const OracleConfig& cfg) {
  std::filesystem::create_directories(dir);
  for (size_t s = 0; s < ds.samples.size(); ++s) {
    const std::string id = std::to_string(ds.sample_ids[s]);
    write_dsf(dir / (id + "_sdf.dsf"), ds.samples[s].sdf);
    write_dsf(dir / (id + "_vel.dsf"), ds.samples[s].velocity);
  }
  write_manifest_csv(dir / "manifest.csv", ds.records);

  nlohmann::json meta;
  meta["v_max"] = ds.v_max;
  meta["train_indices"] = ds.train_indices;
  meta["val_indices"] = ds.val_indices;
  meta["sample_ids"] = ds.sample_ids;
  meta["oracle"] = {{"freestream",
                     {cfg.freestream[0], cfg.freestream[1], cfg.freestream[2]}},
                    {"decay_length", cfg.decay_length},
                    {"wake_factor", cfg.wake_factor},
                    {"seed", cfg.seed}};
  std::ofstream os(dir / "meta.json", std::ios::trunc);
  if (!os)
    throw std::runtime_error("cannot open for writing: " +
                             (dir / "meta.json").string());
  os << meta.dump(2) << '\n';
}

Dataset read_dataset_dir(const std::filesystem::path& dir) {
  Dataset ds;
  ds.records = read_manifest_csv(dir / "manifest.csv");

  std::ifstream is(dir / "meta.json");
  if (!is)
    throw std::runtime_error("cannot open for reading: " +
                             (dir / "meta.json").string());
  nlohmann::json meta = nlohmann::json::parse(is);
  ds.v_max = meta.at("v_max").get<double>();
  ds.train_indices = meta.at("train_indices").get<std::vector<int>>();
  ds.val_indices = meta.at("val_indices").get<std::vector<int>>();
  ds.sample_ids = meta.at("sample_ids").get<std::vector<int>>();

  for (int id : ds.sample_ids) {
    const std::string base = std::to_string(id);
    Sample sample = ingest_external(dir / (base + "_sdf.dsf"),
                                    dir / (base + "_vel.dsf"));
    for (const SampleRecord& r : ds.records)
      if (r.id == id) sample.params = r.params;
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

}  // namespace flowgrad
