#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "geofactor/dataset.hpp"
#include "geofactor/inference.hpp"
#include "geofactor/model.hpp"
#include "geofactor/sampler.hpp"
#include "geofactor/simulate.hpp"

namespace geofactor {

/// Load a delimited dataset: header columns are `id`, `x`, `y`, any number
/// of `item_*` (values 0/1, or NA/empty for missing) and `cov_*` (numeric).
/// Covariates are standardized on load unless the file already carries
/// standardized columns (then kept bit-exact); the transform is recorded.
Dataset load_dataset(const std::string& path, bool lonlat = false);
/// Writer matching load_dataset, full round-trip decimal precision.
void write_dataset(const Dataset& data, const std::string& path);

/// Equirectangular lon/lat -> meters about the data centroid.
Eigen::MatrixXd lonlat_to_meters(const Eigen::MatrixXd& lonlat);

/// Parse the `[model]` / `[priors]` / `[sampler]` configuration file.
/// Unknown keys are rejected; unspecified fields take the documented
/// defaults. Needs the dataset's item names and covariate count to size
/// the spec.
struct ParsedConfig {
  ModelSpec spec;
  SamplerConfig sampler;
};
ParsedConfig parse_config(const std::string& path,
                          const std::vector<std::string>& item_names, int p);
ParsedConfig parse_config_text(const std::string& text,
                               const std::vector<std::string>& item_names,
                               int p, const std::string& origin = "<config>");

/// Simulation configuration: `[simulate]` (n, seed, box, covariate count,
/// missing policy) plus `[truth]` holding the generating parameter values.
struct SimConfig {
  int n = 100;
  int p = 0;
  std::uint64_t seed = 1;
  double xmin = 0.0, ymin = 0.0, xmax = 1.0, ymax = 1.0;
  MissingPolicy missing;
  TrueParams truth;
};
SimConfig parse_sim_config(const std::string& path);

/// Run directory layout: manifest.json, dataset.csv, config.cfg and one
/// subdirectory per chain with a delimited file per parameter block.
struct RunManifest {
  std::string tool_version;
  std::string spec_hash;     // config file bytes
  std::string dataset_hash;  // dataset file bytes
  std::uint64_t seed = 0;
  int chains = 1;
  double timing_seconds = 0.0;
  std::vector<double> acceptance_rate;      // per chain
  std::vector<std::string> chain_hashes;    // per chain sample-content hash
};

void write_chain(const std::vector<ChainOutput>& chains,
                 const std::string& dir, const Dataset& data,
                 const std::string& config_text, double timing_seconds);

struct LoadedRun {
  std::vector<ChainOutput> chains;
  Dataset data;
  ModelSpec spec;
  SamplerConfig config;
  RunManifest manifest;
};
/// Reload a run directory; recomputed content hashes must match the
/// manifest or a ValidationError is thrown.
LoadedRun load_chain(const std::string& dir);

struct GridSpec {
  double xmin = 0.0, ymin = 0.0, xmax = 1.0, ymax = 1.0;
  double cell = 1.0;
  Eigen::MatrixXd mask_polygon;  // optional k x 2 ring

  /// Cell centers covering the box (row-major, y outer), restricted to the
  /// mask polygon when one is set. Throws if no cell survives.
  Eigen::MatrixXd cell_centers() const;
  void validate() const;
};

enum class ExportFormat { csv, geojson };

/// Export per-location prediction summaries: x, y then per factor the
/// median, 5% and 95% quantiles and the exceedance probability at 0.
void export_prediction(const PredictionResult& pred, ExportFormat format,
                       const std::string& path);

/// Structural conformance check for exported geo-feature files; returns
/// the problems found (empty = clean).
std::vector<std::string> check_geojson(const std::string& path);

/// Whole-file content hash (hex FNV-1a).
std::string file_hash(const std::string& path);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Variogram scores file: columns x, y, value (or a named value column).
struct ScoresFile {
  Eigen::MatrixXd coords;
  Eigen::VectorXd values;
};
ScoresFile load_scores(const std::string& path,
                       const std::string& value_column = "value");
void write_variogram(const Variogram& v, const std::string& path);

/// Serialize a model + sampler configuration back to config-file text.
std::string format_config(const ModelSpec& spec, const SamplerConfig& config,
                          const std::vector<std::string>& item_names);

}  // namespace geofactor
