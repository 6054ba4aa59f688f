#pragma once

// Experiment runner: config resolution, seeded replication sweeps, CSV rows
// and JSON summaries.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "credal/estimation.hpp"
#include "credal/quadrature.hpp"

namespace credal::harness {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Raised for schema problems; the message lists every offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when one replication fails numerically; carries its coordinates.
class ReplicationError : public std::runtime_error {
 public:
  ReplicationError(const std::string& what, std::string group, std::int64_t replication)
      : std::runtime_error(what), group_(std::move(group)), replication_(replication) {}
  const std::string& group() const { return group_; }
  std::int64_t replication() const { return replication_; }

 private:
  std::string group_;
  std::int64_t replication_;
};

const std::vector<std::string>& experiment_names();

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> preset;
  std::optional<double> delta;
};

/// Fully resolved configuration: preset defaults merged with the user
/// document and CLI overrides, validated against the preset's shape.
struct ExperimentConfig {
  std::string experiment;
  std::string preset = "desk";
  std::uint64_t seed = 1;
  double delta = 0.05;
  int replications = 1;
  QuadratureConfig quad;
  json params;

  json to_json() const;
  /// FNV-1a of the canonical (key-sorted, compact) JSON form, as 16 hex digits.
  std::string hash() const;
};

/// Preset defaults for one experiment ("paper" or "desk").
json preset_document(const std::string& experiment, const std::string& preset);

/// `doc` may be null (all defaults). Unknown keys, wrong types and a missing
/// or unsupported schema_version raise ConfigError.
ExperimentConfig resolve_config(const std::string& experiment, const json& doc, const CliOverrides& cli = {});

json load_json_file(const std::string& path);

struct ResultRow {
  std::string experiment;
  std::string config_hash;
  std::string group;
  std::size_t group_index = 0;  // position of the group in emission order
  std::int64_t replication = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> metrics;

  std::optional<double> metric(const std::string& name) const;
};

/// Per-metric aggregates for every group. Throws on rows from more than
/// one experiment; independent of row order.
json summarize(const std::vector<ResultRow>& rows);

/// Linear interpolation between order statistics; `sorted` ascending.
double quantile_sorted(const std::vector<double>& sorted, double q);
/// Wilson score interval for k successes out of n (z for 95%).
std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

/// Rows sorted by (group_index, replication). First line is a `#` comment
/// with a timestamp; everything after it is deterministic.
void write_csv(const std::filesystem::path& path, std::vector<ResultRow> rows, const std::string& header_comment);

struct RunOutput {
  std::vector<ResultRow> rows;
  json derived;  // experiment-specific results computed from the rows
  json metadata;
};

RunOutput run_experiment(const ExperimentConfig& cfg);

/// Certificate plus the disagreement matrix it was built from.
json certificate_json(const Certificate& c, const DisagreementMatrix& m);

/// Runs, writes <out>/<experiment>.csv, <out>/<experiment>.summary.json and
/// <out>/<experiment>.config.json. Returns the process exit code.
int run_and_write(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace credal::harness
