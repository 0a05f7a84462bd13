#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "robustbench/adversarial.hpp"
#include "robustbench/attacks/registry.hpp"
#include "robustbench/dataset.hpp"

namespace robustbench {

struct AttackSpec {
  std::string name;
  nlohmann::ordered_json overrides = nlohmann::ordered_json::object();
};

struct CriterionSpec {
  std::string name = "misclassification";
  std::optional<std::size_t> k;
  std::optional<double> p;
  std::optional<std::size_t> target;

  Criterion build() const;
  nlohmann::ordered_json to_json() const;
  static CriterionSpec from_json(const nlohmann::ordered_json& j);
};

struct BenchmarkConfig {
  std::string model_path;
  std::string dataset_path;
  DatasetFormat dataset_format = DatasetFormat::Csv;
  std::optional<std::string> labels_path;
  std::vector<AttackSpec> attacks;
  CriterionSpec criterion;
  DistanceMeasure distance = DistanceMeasure::MeanSquared;
  std::uint64_t seed = 0;
  std::optional<std::size_t> sample_limit;
  std::size_t parallelism = 1;

  /// Relative paths are resolved against `base_dir`. Raises ConfigError.
  static BenchmarkConfig from_json(const nlohmann::ordered_json& j, const std::string& base_dir = ".");
  static BenchmarkConfig load(const std::string& path);
};

enum class SampleStatus { Attacked, AlreadyAdversarial, Error };

struct SampleRecord {
  std::size_t index = 0;
  Label label;
  SampleStatus status = SampleStatus::Attacked;
  std::vector<AttackOutcome> attacks;
  /// Minimum over the attacks' distances; 0 for already-adversarial samples.
  double rho = std::numeric_limits<double>::infinity();
  std::optional<Tensor> adversarial;
  std::string error;
};

struct BenchmarkReport {
  std::string tool_version;
  nlohmann::ordered_json config;
  std::vector<SampleRecord> samples;
  /// Mean of the finite rho values; empty when there are none.
  std::optional<double> robustness;
  std::size_t num_finite = 0;
  std::size_t num_failed = 0;
  std::size_t num_already_adversarial = 0;
  double wall_time = 0.0;
};

/// Smallest distance over attack outcomes (Infinity if none succeeded).
double min_distance(const std::vector<AttackOutcome>& outcomes);

/// Arithmetic mean of the finite values; empty if there are none.
std::optional<double> mean_finite(const std::vector<double>& rhos);

/// Runs every attack on every sample. Attacks of one sample share one state,
/// each later attack resuming from the running best. Results do not depend
/// on `parallelism`.
BenchmarkReport run_benchmark(const ModelPtr& model, const Dataset& dataset,
                              const std::vector<std::unique_ptr<Attack>>& attacks, const CriterionSpec& criterion,
                              DistanceMeasure measure, std::uint64_t seed,
                              std::optional<std::size_t> sample_limit = {}, std::size_t parallelism = 1);

BenchmarkReport run_benchmark(const BenchmarkConfig& config);

nlohmann::ordered_json report_to_json(const BenchmarkReport& report);
void emit_report(const BenchmarkReport& report, const std::string& path);

}  // namespace robustbench
