#include "robustbench/attacks/registry.hpp"

#include <chrono>
#include <functional>
#include <variant>

#include "robustbench/attacks/decision.hpp"
#include "robustbench/attacks/gradient.hpp"
#include "robustbench/attacks/score.hpp"

namespace robustbench {

namespace {

using nlohmann::ordered_json;

// Named, typed views onto config fields so that overrides can be applied and
// effective values echoed into reports.
class ParameterSet {
 public:
  using Slot = std::variant<int*, double*, std::string*>;

  void add(std::string key, Slot slot) { slots_.emplace_back(std::move(key), slot); }

  void apply(const std::string& attack, const ordered_json& overrides) {
    if (!overrides.is_object()) throw Error(ErrorCode::ConfigError, attack + ": parameters must be an object");
    for (const auto& [key, value] : overrides.items()) {
      auto it = std::find_if(slots_.begin(), slots_.end(), [&](const auto& s) { return s.first == key; });
      if (it == slots_.end()) throw Error(ErrorCode::ConfigError, attack + ": unknown parameter '" + key + "'");
      std::visit(
          [&](auto* field) {
            using T = std::remove_pointer_t<decltype(field)>;
            if constexpr (std::is_same_v<T, int>) {
              if (!value.is_number_integer()) throw Error(ErrorCode::ConfigError, attack + "." + key + ": expected integer");
              *field = value.get<int>();
            } else if constexpr (std::is_same_v<T, double>) {
              if (!value.is_number()) throw Error(ErrorCode::ConfigError, attack + "." + key + ": expected number");
              *field = value.get<double>();
            } else {
              if (!value.is_string()) throw Error(ErrorCode::ConfigError, attack + "." + key + ": expected string");
              *field = value.get<std::string>();
            }
          },
          it->second);
    }
  }

  ordered_json dump() const {
    ordered_json out = ordered_json::object();
    for (const auto& [key, slot] : slots_) {
      std::visit([&](auto* field) { out[key] = *field; }, slot);
    }
    return out;
  }

 private:
  std::vector<std::pair<std::string, Slot>> slots_;
};

struct Settings {
  GradientAttackConfig gradient;
  ScoreAttackConfig score;
  DecisionAttackConfig decision;
  int target = -1;
  int max_pixels = 0;
  std::string table_path;
  std::shared_ptr<const PrecomputedTable> table;

  std::optional<Label> target_label() const {
    if (target < 0) return std::nullopt;
    return Label{static_cast<std::size_t>(target)};
  }
};

using Runner = std::function<AttackOutcome(const Settings&, AdversarialState&, Rng&)>;

class CatalogAttack final : public Attack {
 public:
  CatalogAttack(std::string name, ordered_json overrides, std::unique_ptr<Settings> settings, ParameterSet params,
                Runner runner)
      : Attack(std::move(name), std::move(overrides)),
        settings_(std::move(settings)),
        params_(std::move(params)),
        runner_(std::move(runner)) {}

  ordered_json parameters() const override { return params_.dump(); }

 protected:
  AttackOutcome execute(AdversarialState& state, Rng& rng) const override { return runner_(*settings_, state, rng); }

 private:
  std::unique_ptr<Settings> settings_;
  ParameterSet params_;
  Runner runner_;
};

void add_search(ParameterSet& p, ScalarSearchConfig& s) {
  p.add("grid_size", &s.grid_size);
  p.add("refine_steps", &s.refine_steps);
  p.add("max_scale", &s.max_scale);
}

struct Entry {
  const char* name;
  std::function<void(ParameterSet&, Settings&)> bind;
  Runner run;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {"gradient", [](ParameterSet& p, Settings& s) { add_search(p, s.gradient.search); },
       [](const Settings& s, AdversarialState& st, Rng&) { return gradient_attack(st, s.gradient); }},
      {"fgsm", [](ParameterSet& p, Settings& s) { add_search(p, s.gradient.search); },
       [](const Settings& s, AdversarialState& st, Rng&) { return gradient_sign_attack(st, s.gradient); }},
      {"iterative_gradient",
       [](ParameterSet& p, Settings& s) {
         add_search(p, s.gradient.search);
         p.add("max_iterations", &s.gradient.max_iterations);
       },
       [](const Settings& s, AdversarialState& st, Rng&) {
         return iterative_gradient_attack(st, DirectionMode::Raw, s.gradient);
       }},
      {"iterative_fgsm",
       [](ParameterSet& p, Settings& s) {
         add_search(p, s.gradient.search);
         p.add("max_iterations", &s.gradient.max_iterations);
       },
       [](const Settings& s, AdversarialState& st, Rng&) {
         return iterative_gradient_attack(st, DirectionMode::Sign, s.gradient);
       }},
      {"deepfool_l2",
       [](ParameterSet& p, Settings& s) {
         p.add("max_iter", &s.gradient.deepfool_max_iter);
         p.add("overshoot", &s.gradient.deepfool_overshoot);
         p.add("candidate_classes", &s.gradient.deepfool_candidate_classes);
       },
       [](const Settings& s, AdversarialState& st, Rng&) { return deepfool_attack(st, DeepFoolNorm::L2, s.gradient); }},
      {"deepfool_linf",
       [](ParameterSet& p, Settings& s) {
         p.add("max_iter", &s.gradient.deepfool_max_iter);
         p.add("overshoot", &s.gradient.deepfool_overshoot);
         p.add("candidate_classes", &s.gradient.deepfool_candidate_classes);
       },
       [](const Settings& s, AdversarialState& st, Rng&) {
         return deepfool_attack(st, DeepFoolNorm::Linf, s.gradient);
       }},
      {"lbfgs",
       [](ParameterSet& p, Settings& s) {
         add_search(p, s.gradient.search);
         p.add("lambda_points", &s.gradient.lbfgs_lambda_grid.points);
         p.add("lambda_min", &s.gradient.lbfgs_lambda_grid.min);
         p.add("lambda_max", &s.gradient.lbfgs_lambda_grid.max);
         p.add("max_opt_iter", &s.gradient.lbfgs_max_opt_iter);
         p.add("target", &s.target);
       },
       [](const Settings& s, AdversarialState& st, Rng&) { return lbfgs_attack(st, s.target_label(), s.gradient); }},
      {"approx_lbfgs",
       [](ParameterSet& p, Settings& s) {
         add_search(p, s.gradient.search);
         p.add("lambda_points", &s.gradient.lbfgs_lambda_grid.points);
         p.add("lambda_min", &s.gradient.lbfgs_lambda_grid.min);
         p.add("lambda_max", &s.gradient.lbfgs_lambda_grid.max);
         p.add("max_opt_iter", &s.gradient.lbfgs_max_opt_iter);
         p.add("numerical_step", &s.gradient.numerical_step);
         p.add("target", &s.target);
       },
       [](const Settings& s, AdversarialState& st, Rng&) {
         return lbfgs_attack(st, s.target_label(), s.gradient, GradientSource::Numerical);
       }},
      {"slsqp",
       [](ParameterSet& p, Settings& s) {
         add_search(p, s.gradient.search);
         p.add("max_opt_iter", &s.gradient.lbfgs_max_opt_iter);
         p.add("target", &s.target);
       },
       [](const Settings& s, AdversarialState& st, Rng&) { return slsqp_attack(st, s.target_label(), s.gradient); }},
      {"jsma",
       [](ParameterSet& p, Settings& s) {
         add_search(p, s.gradient.search);
         p.add("max_perturbed_features", &s.gradient.jsma_max_perturbed_features);
         p.add("theta", &s.gradient.jsma_theta);
         p.add("target", &s.target);
       },
       [](const Settings& s, AdversarialState& st, Rng&) {
         return saliency_map_attack(st, s.target_label(), s.gradient);
       }},
      {"single_pixel", [](ParameterSet& p, Settings& s) { p.add("max_pixels", &s.max_pixels); },
       [](const Settings& s, AdversarialState& st, Rng& rng) {
         std::optional<std::size_t> limit;
         if (s.max_pixels > 0) limit = static_cast<std::size_t>(s.max_pixels);
         return single_pixel_attack(st, rng, limit);
       }},
      {"local_search",
       [](ParameterSet& p, Settings& s) {
         p.add("neighborhood", &s.score.ls_neighborhood);
         p.add("rounds", &s.score.ls_rounds);
         p.add("p", &s.score.ls_p);
         p.add("top_t", &s.score.ls_top_t);
         p.add("initial_fraction", &s.score.ls_initial_fraction);
       },
       [](const Settings& s, AdversarialState& st, Rng& rng) { return local_search_attack(st, s.score, rng); }},
      {"boundary",
       [](ParameterSet& p, Settings& s) {
         p.add("iterations", &s.decision.boundary_iterations);
         p.add("spherical_step", &s.decision.boundary_spherical_step);
         p.add("source_step", &s.decision.boundary_source_step);
         p.add("step_adaptation", &s.decision.boundary_step_adaptation);
         p.add("init_trials", &s.decision.boundary_init_trials);
       },
       [](const Settings& s, AdversarialState& st, Rng& rng) { return boundary_attack(st, s.decision, rng); }},
      {"pointwise",
       [](ParameterSet& p, Settings& s) {
         add_search(p, s.decision.noise_search);
         p.add("rounds", &s.decision.pointwise_rounds);
         p.add("repetitions", &s.decision.salt_and_pepper_repetitions);
       },
       [](const Settings& s, AdversarialState& st, Rng& rng) { return pointwise_attack(st, s.decision, rng); }},
      {"additive_uniform", [](ParameterSet& p, Settings& s) { add_search(p, s.decision.noise_search); },
       [](const Settings& s, AdversarialState& st, Rng& rng) {
         return additive_noise_attack(st, NoiseDistribution::Uniform, s.decision, rng);
       }},
      {"additive_gaussian", [](ParameterSet& p, Settings& s) { add_search(p, s.decision.noise_search); },
       [](const Settings& s, AdversarialState& st, Rng& rng) {
         return additive_noise_attack(st, NoiseDistribution::Gaussian, s.decision, rng);
       }},
      {"salt_and_pepper",
       [](ParameterSet& p, Settings& s) {
         add_search(p, s.decision.noise_search);
         p.add("repetitions", &s.decision.salt_and_pepper_repetitions);
       },
       [](const Settings& s, AdversarialState& st, Rng& rng) { return salt_and_pepper_attack(st, s.decision, rng); }},
      {"contrast_reduction", [](ParameterSet& p, Settings& s) { add_search(p, s.decision.noise_search); },
       [](const Settings& s, AdversarialState& st, Rng&) { return contrast_reduction_attack(st, s.decision); }},
      {"gaussian_blur",
       [](ParameterSet& p, Settings& s) {
         add_search(p, s.decision.noise_search);
         p.add("sigma_max", &s.decision.blur_sigma_max);
       },
       [](const Settings& s, AdversarialState& st, Rng&) { return gaussian_blur_attack(st, s.decision); }},
      {"precomputed", [](ParameterSet& p, Settings& s) { p.add("table_path", &s.table_path); },
       [](const Settings& s, AdversarialState& st, Rng&) { return precomputed_images_attack(st, *s.table); }},
  };
  return table;
}

}  // namespace

AttackOutcome Attack::run(AdversarialState& state, Rng& rng) const {
  state.begin_run();
  const auto predictions_before = state.prediction_calls();
  const auto gradients_before = state.gradient_calls();
  const auto start = std::chrono::steady_clock::now();
  try {
    AttackOutcome out = execute(state, rng);
    out.attack_name = name_;
    return out;
  } catch (const Error& e) {
    AttackOutcome out;
    out.attack_name = name_;
    out.error = std::string(to_string(e.code()));
    out.adversarial = state.run_best_input();
    out.success = out.adversarial.has_value();
    out.distance = state.run_best_distance();
    out.state_best_distance = state.best_distance();
    out.prediction_calls = state.prediction_calls() - predictions_before;
    out.gradient_calls = state.gradient_calls() - gradients_before;
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  }
}

const std::vector<std::string>& attack_catalog() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& e : entries()) out.emplace_back(e.name);
    return out;
  }();
  return names;
}

std::unique_ptr<Attack> make_attack(std::string_view name, const nlohmann::ordered_json& overrides) {
  const auto& table = entries();
  auto it = std::find_if(table.begin(), table.end(), [&](const Entry& e) { return name == e.name; });
  if (it == table.end()) throw Error(ErrorCode::ConfigError, "unknown attack '" + std::string(name) + "'");

  auto settings = std::make_unique<Settings>();
  ParameterSet params;
  it->bind(params, *settings);
  params.apply(it->name, overrides.is_null() ? ordered_json::object() : overrides);
  try {
    settings->gradient.validate();
    settings->score.validate();
    settings->decision.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string(it->name) + ": " + e.what());
  }
  if (std::string_view(it->name) == "precomputed") {
    if (settings->table_path.empty()) throw Error(ErrorCode::ConfigError, "precomputed: table_path is required");
    settings->table = std::make_shared<const PrecomputedTable>(load_precomputed_table(settings->table_path));
  }
  return std::make_unique<CatalogAttack>(it->name, overrides.is_null() ? ordered_json::object() : overrides,
                                         std::move(settings), std::move(params), it->run);
}

AttackOutcome resume(AdversarialState& state, const Attack& attack, Rng& rng) { return attack.run(state, rng); }

}  // namespace robustbench
