#include "robustbench/benchmark.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "robustbench/version.hpp"

namespace robustbench {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

// Values built in code are signed even when non-negative; parsed ones are unsigned.
bool is_count(const ordered_json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

std::string status_name(SampleStatus s) {
  switch (s) {
    case SampleStatus::Attacked: return "attacked";
    case SampleStatus::AlreadyAdversarial: return "already_adversarial";
    case SampleStatus::Error: return "error";
  }
  return "error";
}

SampleRecord attack_sample(const ModelPtr& model, const Tensor& input, Label label, std::size_t index,
                           const std::vector<std::unique_ptr<Attack>>& attacks, const Criterion& criterion,
                           DistanceMeasure measure, std::uint64_t seed) {
  SampleRecord record;
  record.index = index;
  record.label = label;
  try {
    Tensor x0 = input.shape() == model->input_shape() ? input : input.reshaped(model->input_shape());
    AdversarialState state(model, criterion, measure, std::move(x0), label);
    const Rng sample_rng = seeded_rng(seed, index);
    for (std::size_t j = 0; j < attacks.size(); ++j) {
      Rng rng = sample_rng.split(j);
      record.attacks.push_back(attacks[j]->run(state, rng));
    }
    record.rho = min_distance(record.attacks);
    record.adversarial = state.best_input();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::AlreadyAdversarial) {
      record.status = SampleStatus::AlreadyAdversarial;
      record.rho = 0.0;
    } else {
      record.status = SampleStatus::Error;
      record.error = e.what();
    }
  }
  return record;
}

}  // namespace

Criterion CriterionSpec::build() const {
  auto need_k = [&] {
    if (!k) config_error("criterion '" + name + "' needs k");
    return *k;
  };
  auto need_p = [&] {
    if (!p) config_error("criterion '" + name + "' needs p");
    return *p;
  };
  auto need_target = [&] {
    if (!target) config_error("criterion '" + name + "' needs target");
    return Label{*target};
  };
  try {
    if (name == "misclassification") return Criterion::misclassification();
    if (name == "top_k") return Criterion::top_k(need_k());
    if (name == "original_class_probability") return Criterion::original_class_probability(need_p());
    if (name == "target_class") return Criterion::target_class(need_target());
    if (name == "target_class_probability") return Criterion::target_class_probability(need_target(), need_p());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(e.what());
  }
  config_error("unknown criterion '" + name + "'");
}

ordered_json CriterionSpec::to_json() const {
  ordered_json j;
  j["name"] = name;
  if (k) j["k"] = *k;
  if (p) j["p"] = *p;
  if (target) j["target"] = *target;
  return j;
}

CriterionSpec CriterionSpec::from_json(const ordered_json& j) {
  CriterionSpec spec;
  if (j.is_string()) {
    spec.name = j.get<std::string>();
  } else if (j.is_object()) {
    if (!j.contains("name") || !j["name"].is_string()) config_error("criterion needs a name");
    spec.name = j["name"].get<std::string>();
    for (const auto& [key, value] : j.items()) {
      if (key == "name") continue;
      if (key == "k" && is_count(value)) {
        spec.k = value.get<std::size_t>();
      } else if (key == "target" && is_count(value)) {
        spec.target = value.get<std::size_t>();
      } else if (key == "p" && value.is_number()) {
        spec.p = value.get<double>();
      } else {
        config_error("criterion: bad or unknown field '" + key + "'");
      }
    }
  } else {
    config_error("criterion must be a name or an object");
  }
  spec.build();  // validates
  return spec;
}

BenchmarkConfig BenchmarkConfig::from_json(const ordered_json& j, const std::string& base_dir) {
  if (!j.is_object()) config_error("config must be a JSON object");
  static const std::vector<std::string> known = {"model",    "dataset", "attacks",      "criterion",
                                                 "distance", "seed",    "sample_limit", "parallelism"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) config_error("unknown config field '" + key + "'");
  }

  BenchmarkConfig c;
  if (!j.contains("model") || !j["model"].is_string()) config_error("config needs \"model\" (path)");
  c.model_path = resolve(j["model"].get<std::string>(), base_dir);

  if (!j.contains("dataset") || !j["dataset"].is_object()) config_error("config needs a \"dataset\" object");
  const auto& ds = j["dataset"];
  if (!ds.contains("path") || !ds["path"].is_string()) config_error("dataset needs \"path\"");
  c.dataset_path = resolve(ds["path"].get<std::string>(), base_dir);
  const std::string format = ds.value("format", std::string("csv"));
  const auto parsed = parse_dataset_format(format);
  if (!parsed) config_error("dataset format must be csv or idx");
  c.dataset_format = *parsed;
  if (ds.contains("labels_path")) {
    if (!ds["labels_path"].is_string()) config_error("dataset.labels_path must be a string");
    c.labels_path = resolve(ds["labels_path"].get<std::string>(), base_dir);
  }

  if (!j.contains("attacks") || !j["attacks"].is_array() || j["attacks"].empty()) {
    config_error("config needs a non-empty \"attacks\" array");
  }
  for (const auto& a : j["attacks"]) {
    AttackSpec spec;
    if (a.is_string()) {
      spec.name = a.get<std::string>();
    } else if (a.is_object() && a.contains("name") && a["name"].is_string()) {
      spec.name = a["name"].get<std::string>();
      if (a.contains("params")) spec.overrides = a["params"];
    } else {
      config_error("attacks entries must be names or {\"name\", \"params\"} objects");
    }
    c.attacks.push_back(std::move(spec));
  }

  c.criterion = CriterionSpec::from_json(j.value("criterion", ordered_json("misclassification")));

  const std::string distance_name = j.value("distance", std::string("mse"));
  const auto measure = parse_distance(distance_name);
  if (!measure) config_error("unknown distance '" + distance_name + "'");
  c.distance = *measure;

  if (j.contains("seed")) {
    if (!is_count(j["seed"])) config_error("seed must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("sample_limit") && !j["sample_limit"].is_null()) {
    if (!is_count(j["sample_limit"])) config_error("sample_limit must be a non-negative integer");
    c.sample_limit = j["sample_limit"].get<std::size_t>();
  }
  if (j.contains("parallelism")) {
    if (!is_count(j["parallelism"]) || j["parallelism"].get<std::size_t>() == 0) {
      config_error("parallelism must be a positive integer");
    }
    c.parallelism = j["parallelism"].get<std::size_t>();
  }
  return c;
}

BenchmarkConfig BenchmarkConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const ordered_json::parse_error& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j, std::filesystem::path(path).parent_path().string());
}

double min_distance(const std::vector<AttackOutcome>& outcomes) {
  double rho = std::numeric_limits<double>::infinity();
  for (const auto& o : outcomes) {
    if (o.success) rho = std::min(rho, o.distance.value);
  }
  return rho;
}

std::optional<double> mean_finite(const std::vector<double>& rhos) {
  double sum = 0.0;
  std::size_t count = 0;
  for (double r : rhos) {
    if (std::isfinite(r)) {
      sum += r;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

BenchmarkReport run_benchmark(const ModelPtr& model, const Dataset& dataset,
                              const std::vector<std::unique_ptr<Attack>>& attacks, const CriterionSpec& criterion_spec,
                              DistanceMeasure measure, std::uint64_t seed, std::optional<std::size_t> sample_limit,
                              std::size_t parallelism) {
  const auto start = std::chrono::steady_clock::now();
  const Criterion criterion = criterion_spec.build();
  const std::size_t n = std::min(dataset.size(), sample_limit.value_or(dataset.size()));

  BenchmarkReport report;
  report.tool_version = kVersion;
  report.samples.resize(n);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      report.samples[i] =
          attack_sample(model, dataset.inputs[i], dataset.labels[i], i, attacks, criterion, measure, seed);
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(parallelism, n));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  std::vector<double> rhos;
  for (const auto& s : report.samples) {
    rhos.push_back(s.rho);
    if (s.status == SampleStatus::AlreadyAdversarial) ++report.num_already_adversarial;
    if (std::isfinite(s.rho)) {
      ++report.num_finite;
    } else {
      ++report.num_failed;
    }
  }
  report.robustness = mean_finite(rhos);

  ordered_json cfg;
  cfg["dataset"] = {{"path", dataset.path}, {"format", to_string(dataset.format)}, {"count", n}};
  ordered_json attack_list = ordered_json::array();
  for (const auto& a : attacks) {
    attack_list.push_back({{"name", a->name()}, {"parameters", a->parameters()}, {"overrides", a->overrides()}});
  }
  cfg["attacks"] = attack_list;
  cfg["criterion"] = criterion_spec.to_json();
  cfg["distance"] = std::string(to_string(measure));
  cfg["seed"] = seed;
  cfg["sample_limit"] = sample_limit ? ordered_json(*sample_limit) : ordered_json(nullptr);
  report.config = std::move(cfg);
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  const ModelPtr model = load_model(config.model_path);
  const Dataset dataset = load_dataset(config.dataset_path, config.dataset_format, model->bounds(), config.labels_path);
  std::vector<std::unique_ptr<Attack>> attacks;
  for (const auto& spec : config.attacks) attacks.push_back(make_attack(spec.name, spec.overrides));
  BenchmarkReport report = run_benchmark(model, dataset, attacks, config.criterion, config.distance, config.seed,
                                         config.sample_limit, config.parallelism);
  ordered_json cfg;
  cfg["model"] = config.model_path;
  for (const auto& [key, value] : report.config.items()) cfg[key] = value;
  if (config.labels_path) cfg["dataset"]["labels_path"] = *config.labels_path;
  report.config = std::move(cfg);
  return report;
}

ordered_json report_to_json(const BenchmarkReport& report) {
  ordered_json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["tool_version"] = report.tool_version;
  doc["config"] = report.config;

  ordered_json samples = ordered_json::array();
  for (const auto& s : report.samples) {
    ordered_json rec;
    rec["index"] = s.index;
    rec["label"] = s.label.index;
    rec["status"] = status_name(s.status);
    rec["rho"] = number_or_null(s.rho);
    if (!s.error.empty()) rec["error"] = s.error;
    ordered_json attacks = ordered_json::array();
    for (const auto& o : s.attacks) {
      ordered_json a;
      a["name"] = o.attack_name;
      a["success"] = o.success;
      a["distance"] = number_or_null(o.distance.value);
      a["error"] = o.error.empty() ? ordered_json(nullptr) : ordered_json(o.error);
      ordered_json tuned = ordered_json::object();
      for (const auto& [k, v] : o.tuned_parameters) tuned[k] = number_or_null(v);
      a["tuned_parameters"] = tuned;
      a["prediction_calls"] = o.prediction_calls;
      a["gradient_calls"] = o.gradient_calls;
      a["wall_time"] = o.wall_time;
      attacks.push_back(std::move(a));
    }
    rec["attacks"] = std::move(attacks);
    samples.push_back(std::move(rec));
  }
  doc["samples"] = std::move(samples);

  ordered_json summary;
  summary["robustness"] = report.robustness ? ordered_json(*report.robustness) : ordered_json(nullptr);
  summary["num_samples"] = report.samples.size();
  summary["num_finite"] = report.num_finite;
  summary["num_failed"] = report.num_failed;
  summary["num_already_adversarial"] = report.num_already_adversarial;
  summary["aggregation"] = "robustness is the mean of finite per-sample rho; samples with no adversarial are excluded";
  doc["summary"] = std::move(summary);
  doc["wall_time"] = report.wall_time;
  return doc;
}

void emit_report(const BenchmarkReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write report " + path);
  out << report_to_json(report).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "failed writing report " + path);
}

}  // namespace robustbench
