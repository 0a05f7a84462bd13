#include "robustbench/attacks/decision.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <deque>
#include <filesystem>

#include "attacks/common.hpp"
#include "robustbench/dataset.hpp"

namespace robustbench {

namespace {

using detail::run_attack;

std::uint64_t bits_of(double v) { return std::bit_cast<std::uint64_t>(v); }

// Acceptance statistics over a fixed-size window of trials.
class AcceptanceWindow {
 public:
  explicit AcceptanceWindow(std::size_t size) : size_(size) {}

  void record(bool accepted) {
    trials_.push_back(accepted);
    if (trials_.size() > size_) trials_.pop_front();
  }
  bool full() const { return trials_.size() == size_; }
  double rate() const {
    return static_cast<double>(std::count(trials_.begin(), trials_.end(), true)) /
           static_cast<double>(trials_.size());
  }
  void clear() { trials_.clear(); }

 private:
  std::size_t size_;
  std::deque<bool> trials_;
};

constexpr std::size_t kAdaptationWindow = 30;
constexpr double kHighAcceptance = 0.5;
constexpr double kLowAcceptance = 0.2;

void adapt(AcceptanceWindow& window, double& step, double factor) {
  if (!window.full()) return;
  const double rate = window.rate();
  if (rate > kHighAcceptance) {
    step *= factor;
  } else if (rate < kLowAcceptance) {
    step /= factor;
  }
  window.clear();
}

Tensor salt_and_pepper_candidate(const Tensor& x0, const Bounds& bounds, double p, Rng stream) {
  Tensor x = x0;
  for (double& v : x.values()) {
    if (stream.uniform() < p) v = stream.coin() ? bounds.max : bounds.min;
  }
  return x;
}

ScalarSearchConfig unit_interval(ScalarSearchConfig search) {
  search.max_scale = std::min(search.max_scale, 1.0);
  return search;
}

void salt_and_pepper_search(AdversarialState& state, const DecisionAttackConfig& config, Rng& rng,
                            TunedParameters& tuned) {
  const std::uint64_t base = rng.next_u64();
  const Tensor& x0 = state.original();
  const Bounds bounds = state.bounds();
  auto probe = [&](double p) {
    const std::uint64_t level = mix_seed(base, bits_of(p));
    for (int r = 0; r < config.salt_and_pepper_repetitions; ++r) {
      if (state.try_candidate(salt_and_pepper_candidate(x0, bounds, p, Rng(mix_seed(level, r)))).first) {
        return true;
      }
    }
    return false;
  };
  tuned["repetitions"] = config.salt_and_pepper_repetitions;
  if (auto p = search_minimal_scalar(probe, unit_interval(config.noise_search))) tuned["p"] = *p;
}

std::size_t reflect(long i, std::size_t n) {
  const long period = 2 * static_cast<long>(n);
  long m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<long>(n)) m = period - 1 - m;
  return static_cast<std::size_t>(m);
}

}  // namespace

void DecisionAttackConfig::validate() const {
  noise_search.validate();
  if (boundary_iterations < 1 || pointwise_rounds < 1 || boundary_init_trials < 1 ||
      salt_and_pepper_repetitions < 1) {
    throw Error(ErrorCode::InvalidParameter, "iteration counts must be positive");
  }
  if (!(boundary_spherical_step > 0.0) || !(boundary_source_step > 0.0) || !(boundary_source_step < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "boundary steps must be positive (source step < 1)");
  }
  if (!(boundary_step_adaptation > 1.0)) throw Error(ErrorCode::InvalidParameter, "step adaptation must be > 1");
  if (!(blur_sigma_max > 0.0)) throw Error(ErrorCode::InvalidParameter, "blur_sigma_max must be positive");
}

AttackOutcome boundary_attack(AdversarialState& state, const DecisionAttackConfig& config, Rng& rng) {
  config.validate();
  return run_attack(state, "boundary", [&](TunedParameters& tuned) {
    const Tensor& x0 = state.original();
    const Bounds bounds = state.bounds();
    const std::size_t dim = x0.size();

    std::optional<Tensor> current;
    auto adopt = [&](const Tensor& start) {
      if (state.try_candidate(start).first) current = clip(start, bounds);
    };
    if (state.best_input()) adopt(*state.best_input());
    if (!current && config.starting_point) adopt(*config.starting_point);
    for (int trial = 0; !current && trial < config.boundary_init_trials; ++trial) {
      Tensor random = x0;
      for (double& v : random.values()) v = rng.uniform(bounds.min, bounds.max);
      adopt(random);
      tuned["init_trials"] = trial + 1;
    }
    if (!current) throw Error(ErrorCode::StartingPointNotFound, "no adversarial starting point found");

    double spherical_step = config.boundary_spherical_step;
    double source_step = config.boundary_source_step;
    AcceptanceWindow spherical_stats(kAdaptationWindow);
    AcceptanceWindow source_stats(kAdaptationWindow);
    std::vector<double> eta(dim);

    for (int it = 0; it < config.boundary_iterations; ++it) {
      std::vector<double> v(dim);
      for (std::size_t i = 0; i < dim; ++i) v[i] = (*current)[i] - x0[i];
      const double dist = l2_norm(v);
      if (!(dist > 0.0)) break;

      for (double& e : eta) e = rng.normal();
      const double along = dot(eta, v) / (dist * dist);
      for (std::size_t i = 0; i < dim; ++i) eta[i] -= along * v[i];
      const double eta_norm = l2_norm(eta);

      // Orthogonal step, then back onto the sphere of radius `dist` around x0.
      std::vector<double> sphere = v;
      if (eta_norm > 0.0) {
        const double scale = spherical_step * dist / eta_norm;
        for (std::size_t i = 0; i < dim; ++i) sphere[i] += scale * eta[i];
        const double rescale = dist / l2_norm(sphere);
        for (double& s : sphere) s *= rescale;
      }

      Tensor spherical_candidate = x0;
      for (std::size_t i = 0; i < dim; ++i) spherical_candidate[i] += sphere[i];
      const bool spherical_ok = state.try_candidate(spherical_candidate).first;
      spherical_stats.record(spherical_ok);

      if (spherical_ok) {
        Tensor candidate = x0;
        for (std::size_t i = 0; i < dim; ++i) candidate[i] += (1.0 - source_step) * sphere[i];
        clip_inplace(candidate, bounds);
        const bool accepted = state.try_candidate(candidate).first;
        source_stats.record(accepted);
        if (accepted) current = std::move(candidate);
      }

      adapt(spherical_stats, spherical_step, config.boundary_step_adaptation);
      adapt(source_stats, source_step, config.boundary_step_adaptation);
      source_step = std::min(source_step, 0.5);
    }
    tuned["iterations"] = config.boundary_iterations;
    tuned["final_spherical_step"] = spherical_step;
    tuned["final_source_step"] = source_step;
    tuned["step_adaptation"] = config.boundary_step_adaptation;
    tuned["adaptation_window"] = static_cast<double>(kAdaptationWindow);
  });
}

AttackOutcome salt_and_pepper_attack(AdversarialState& state, const DecisionAttackConfig& config, Rng& rng) {
  config.validate();
  return run_attack(state, "salt_and_pepper",
                    [&](TunedParameters& tuned) { salt_and_pepper_search(state, config, rng, tuned); });
}

AttackOutcome pointwise_attack(AdversarialState& state, const DecisionAttackConfig& config, Rng& rng) {
  config.validate();
  return run_attack(state, "pointwise", [&](TunedParameters& tuned) {
    const Tensor& x0 = state.original();
    if (state.best_input()) {
      state.try_candidate(*state.best_input());
    } else {
      salt_and_pepper_search(state, config, rng, tuned);
    }
    if (!state.run_best_input()) return;
    Tensor current = *state.run_best_input();
    tuned["initial_l0"] = distance(DistanceMeasure::L0, x0, current, state.bounds()).value;

    int round = 0;
    for (; round < config.pointwise_rounds; ++round) {
      std::vector<std::size_t> perturbed;
      for (std::size_t i = 0; i < current.size(); ++i) {
        if (current[i] != x0[i]) perturbed.push_back(i);
      }
      rng.shuffle(std::span<std::size_t>(perturbed));
      bool any_reset = false;
      for (std::size_t i : perturbed) {
        const double saved = current[i];
        current[i] = x0[i];
        if (state.try_candidate(current).first) {
          any_reset = true;
        } else {
          current[i] = saved;
        }
      }
      if (!any_reset) break;
    }
    tuned["rounds"] = std::min(round + 1, config.pointwise_rounds);
    tuned["final_l0"] = distance(DistanceMeasure::L0, x0, current, state.bounds()).value;
  });
}

AttackOutcome additive_noise_attack(AdversarialState& state, NoiseDistribution distribution,
                                    const DecisionAttackConfig& config, Rng& rng) {
  config.validate();
  const char* name = distribution == NoiseDistribution::Uniform ? "additive_uniform" : "additive_gaussian";
  return run_attack(state, name, [&](TunedParameters& tuned) {
    const std::uint64_t base = rng.next_u64();
    const Tensor& x0 = state.original();
    const double range = state.bounds().range();
    auto candidate_at = [&](double eps) {
      Rng stream(mix_seed(base, bits_of(eps)));
      Tensor x = x0;
      for (double& v : x.values()) {
        const double noise =
            distribution == NoiseDistribution::Uniform ? stream.uniform(-1.0, 1.0) : stream.normal();
        v += eps * range * noise;
      }
      return x;
    };
    if (auto eps = line_search_minimal_epsilon(state, candidate_at, config.noise_search)) tuned["epsilon"] = *eps;
  });
}

AttackOutcome contrast_reduction_attack(AdversarialState& state, const DecisionAttackConfig& config) {
  config.validate();
  return run_attack(state, "contrast_reduction", [&](TunedParameters& tuned) {
    const Tensor& x0 = state.original();
    const double mid = 0.5 * (state.bounds().min + state.bounds().max);
    auto candidate_at = [&](double eps) {
      Tensor x = x0;
      for (double& v : x.values()) v = (1.0 - eps) * v + eps * mid;
      return x;
    };
    if (auto eps = line_search_minimal_epsilon(state, candidate_at, unit_interval(config.noise_search))) {
      tuned["epsilon"] = *eps;
    }
  });
}

Tensor gaussian_blur(const Tensor& image, const SpatialLayout& layout, double sigma) {
  const auto radius = static_cast<long>(std::ceil(3.0 * sigma));
  if (radius <= 0) return image;
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (long j = -radius; j <= radius; ++j) {
    const double w = std::exp(-static_cast<double>(j * j) / (2.0 * sigma * sigma));
    kernel[static_cast<std::size_t>(j + radius)] = w;
    total += w;
  }
  for (double& w : kernel) w /= total;

  Tensor rows = image;
  for (std::size_t r = 0; r < layout.height; ++r) {
    for (std::size_t c = 0; c < layout.width; ++c) {
      for (std::size_t ch = 0; ch < layout.channels; ++ch) {
        double acc = 0.0;
        for (long j = -radius; j <= radius; ++j) {
          const std::size_t cc = reflect(static_cast<long>(c) + j, layout.width);
          acc += kernel[static_cast<std::size_t>(j + radius)] * image[layout.index(r, cc, ch)];
        }
        rows[layout.index(r, c, ch)] = acc;
      }
    }
  }
  Tensor out = rows;
  for (std::size_t r = 0; r < layout.height; ++r) {
    for (std::size_t c = 0; c < layout.width; ++c) {
      for (std::size_t ch = 0; ch < layout.channels; ++ch) {
        double acc = 0.0;
        for (long j = -radius; j <= radius; ++j) {
          const std::size_t rr = reflect(static_cast<long>(r) + j, layout.height);
          acc += kernel[static_cast<std::size_t>(j + radius)] * rows[layout.index(rr, c, ch)];
        }
        out[layout.index(r, c, ch)] = acc;
      }
    }
  }
  return out;
}

AttackOutcome gaussian_blur_attack(AdversarialState& state, const DecisionAttackConfig& config) {
  config.validate();
  const SpatialLayout layout = spatial_layout(state.model().input_shape());
  return run_attack(state, "gaussian_blur", [&](TunedParameters& tuned) {
    auto candidate_at = [&](double eps) {
      return gaussian_blur(state.original(), layout, eps * config.blur_sigma_max);
    };
    if (auto eps = line_search_minimal_epsilon(state, candidate_at, unit_interval(config.noise_search))) {
      tuned["epsilon"] = *eps;
      tuned["sigma"] = *eps * config.blur_sigma_max;
    }
  });
}

PrecomputedTable::PrecomputedTable(std::vector<std::pair<Tensor, Tensor>> entries) : entries_(std::move(entries)) {
  for (const auto& [input, candidate] : entries_) {
    if (input.size() != candidate.size()) {
      throw Error(ErrorCode::DimensionMismatch, "precomputed input and candidate sizes differ");
    }
  }
}

const Tensor* PrecomputedTable::find(const Tensor& input) const {
  for (const auto& [key, candidate] : entries_) {
    if (key.size() == input.size() &&
        std::memcmp(key.data().data(), input.data().data(), input.size() * sizeof(double)) == 0) {
      return &candidate;
    }
  }
  return nullptr;
}

PrecomputedTable load_precomputed_table(const std::string& directory) {
  const std::filesystem::path dir(directory);
  const Dataset inputs = load_csv_dataset((dir / "inputs.csv").string());
  const Dataset candidates = load_csv_dataset((dir / "candidates.csv").string());
  if (inputs.size() != candidates.size()) {
    throw Error(ErrorCode::CountMismatch, "inputs.csv and candidates.csv have different row counts");
  }
  std::vector<std::pair<Tensor, Tensor>> entries;
  for (std::size_t i = 0; i < inputs.size(); ++i) entries.emplace_back(inputs.inputs[i], candidates.inputs[i]);
  return PrecomputedTable(std::move(entries));
}

AttackOutcome precomputed_images_attack(AdversarialState& state, const PrecomputedTable& table) {
  if (table.empty()) throw Error(ErrorCode::InvalidParameter, "precomputed table is empty");
  const Tensor* candidate = table.find(state.original());
  if (!candidate) throw Error(ErrorCode::InputNotInTable, "no precomputed candidate for this input");
  return run_attack(state, "precomputed", [&](TunedParameters&) {
    state.try_candidate(candidate->reshaped(state.original().shape()));
  });
}

}  // namespace robustbench
