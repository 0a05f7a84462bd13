#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "robustbench/benchmark.hpp"
#include "robustbench/version.hpp"

namespace rb = robustbench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInternal = 2;

void print_summary(const rb::BenchmarkReport& report) {
  std::cout << "samples: " << report.samples.size() << "  adversarial found: " << report.num_finite
            << "  failed: " << report.num_failed << "  already adversarial: " << report.num_already_adversarial
            << '\n';
  if (report.robustness) {
    std::printf("robustness: %.17g\n", *report.robustness);
  } else {
    std::cout << "robustness: none (no adversarial found)\n";
  }
}

int run_command(const std::string& config_path, const std::string& output, std::optional<std::uint64_t> seed,
                std::optional<std::size_t> parallelism) {
  rb::BenchmarkConfig config = rb::BenchmarkConfig::load(config_path);
  if (seed) config.seed = *seed;
  if (parallelism) config.parallelism = *parallelism;
  const rb::BenchmarkReport report = rb::run_benchmark(config);
  rb::emit_report(report, output);
  print_summary(report);
  return kExitOk;
}

struct AttackArgs {
  std::string model;
  std::string format = "csv";
  std::string dataset;
  std::optional<std::string> labels;
  std::string attack;
  std::string params = "{}";
  std::string criterion = "misclassification";
  std::optional<std::size_t> k;
  std::optional<double> p;
  std::optional<std::size_t> target;
  std::string distance = "mse";
  std::string output;
  std::optional<std::string> report;
  std::uint64_t seed = 0;
  std::optional<std::size_t> sample_limit;
  std::size_t parallelism = 1;
};

int attack_command(const AttackArgs& args) {
  rb::BenchmarkConfig config;
  config.model_path = args.model;
  config.dataset_path = args.dataset;
  const auto format = rb::parse_dataset_format(args.format);
  if (!format) throw rb::Error(rb::ErrorCode::ConfigError, "format must be csv or idx");
  config.dataset_format = *format;
  config.labels_path = args.labels;

  rb::AttackSpec spec;
  spec.name = args.attack;
  try {
    spec.overrides = nlohmann::ordered_json::parse(args.params);
  } catch (const nlohmann::ordered_json::parse_error& e) {
    throw rb::Error(rb::ErrorCode::ConfigError, std::string("--params is not valid JSON: ") + e.what());
  }
  config.attacks.push_back(spec);

  config.criterion.name = args.criterion;
  config.criterion.k = args.k;
  config.criterion.p = args.p;
  config.criterion.target = args.target;
  config.criterion.build();

  const auto measure = rb::parse_distance(args.distance);
  if (!measure) throw rb::Error(rb::ErrorCode::ConfigError, "unknown distance '" + args.distance + "'");
  config.distance = *measure;
  config.seed = args.seed;
  config.sample_limit = args.sample_limit;
  config.parallelism = args.parallelism;

  const rb::BenchmarkReport report = rb::run_benchmark(config);
  std::vector<rb::Tensor> adversarials;
  std::vector<rb::Label> labels;
  for (const auto& s : report.samples) {
    if (s.adversarial && std::isfinite(s.rho)) {
      adversarials.push_back(*s.adversarial);
      labels.push_back(s.label);
    }
  }
  rb::write_csv_dataset(args.output, adversarials, labels);
  if (args.report) rb::emit_report(report, *args.report);
  print_summary(report);
  return kExitOk;
}

bool is_input_error(rb::ErrorCode code) {
  switch (code) {
    case rb::ErrorCode::ConfigError:
    case rb::ErrorCode::ParseError:
    case rb::ErrorCode::IoError:
    case rb::ErrorCode::MagicMismatch:
    case rb::ErrorCode::CountMismatch:
    case rb::ErrorCode::DimensionMismatch:
    case rb::ErrorCode::ShapeMismatch:
    case rb::ErrorCode::InvalidBounds:
    case rb::ErrorCode::InvalidParameter:
    case rb::ErrorCode::LabelOutOfRange:
    case rb::ErrorCode::NonFinite:
    case rb::ErrorCode::NotSpatialInput:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial robustness benchmark"};
  app.set_version_flag("--version", std::string(rb::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string run_output;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::size_t> run_parallelism;
  auto* run = app.add_subcommand("run", "Run a benchmark described by a JSON config");
  run->add_option("--config", config_path, "Benchmark config (JSON)")->required();
  run->add_option("--output", run_output, "Report path (JSON)")->required();
  run->add_option("--seed", run_seed, "Override the global seed");
  run->add_option("--parallelism", run_parallelism, "Worker threads")->check(CLI::PositiveNumber);

  AttackArgs args;
  auto* attack = app.add_subcommand("attack", "Run one attack over a dataset and write the adversarials");
  attack->add_option("--model", args.model, "Model file (JSON)")->required();
  attack->add_option("--format", args.format, "Dataset format")->check(CLI::IsMember({"csv", "idx"}));
  attack->add_option("--dataset", args.dataset, "Dataset path")->required();
  attack->add_option("--labels", args.labels, "IDX labels file");
  attack->add_option("--attack", args.attack, "Attack name")->required();
  attack->add_option("--params", args.params, "Attack parameter overrides (JSON object)");
  attack->add_option("--criterion", args.criterion, "Adversarial criterion");
  attack->add_option("--k", args.k, "k for top_k");
  attack->add_option("--p", args.p, "Probability threshold");
  attack->add_option("--target", args.target, "Target class");
  attack->add_option("--distance", args.distance, "Distance measure (mse, mae, linf, l0)");
  attack->add_option("--output", args.output, "Adversarial inputs (CSV)")->required();
  attack->add_option("--report", args.report, "Also write the JSON report here");
  attack->add_option("--seed", args.seed, "Global seed");
  attack->add_option("--sample-limit", args.sample_limit, "Attack only the first N samples");
  attack->add_option("--parallelism", args.parallelism, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (run->parsed()) return run_command(config_path, run_output, run_seed, run_parallelism);
    return attack_command(args);
  } catch (const rb::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_input_error(e.code()) ? kExitConfig : kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
