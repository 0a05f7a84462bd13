#include "robustbench/attacks/score.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "attacks/common.hpp"

namespace robustbench {

namespace {

using detail::run_attack;

void set_pixel(Tensor& x, const SpatialLayout& layout, std::size_t pixel, double value) {
  const std::size_t row = pixel / layout.width;
  const std::size_t col = pixel % layout.width;
  for (std::size_t ch = 0; ch < layout.channels; ++ch) x[layout.index(row, col, ch)] = value;
}

// Pushes every channel of a pixel by `delta`, clipped to the bounds.
void shift_pixel(Tensor& x, const SpatialLayout& layout, std::size_t pixel, double delta, const Bounds& bounds) {
  const std::size_t row = pixel / layout.width;
  const std::size_t col = pixel % layout.width;
  for (std::size_t ch = 0; ch < layout.channels; ++ch) {
    double& v = x[layout.index(row, col, ch)];
    v = std::clamp(v + delta, bounds.min, bounds.max);
  }
}

// 1 - p(original label), summed from the other classes so that it keeps
// its precision when the original class saturates near 1.
double escape_probability(AdversarialState& state, const Tensor& x) {
  const auto p = softmax(state.predictions(x));
  double rest = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (k != state.original_label().index) rest += p[k];
  }
  return rest;
}

}  // namespace

void ScoreAttackConfig::validate() const {
  if (ls_neighborhood < 1) throw Error(ErrorCode::InvalidParameter, "ls_neighborhood must be >= 1");
  if (ls_rounds < 1 || ls_top_t < 1) throw Error(ErrorCode::InvalidParameter, "ls_rounds and ls_top_t must be >= 1");
  if (!(ls_p > 0.0 && ls_p <= 1.0)) throw Error(ErrorCode::InvalidParameter, "ls_p must lie in (0, 1]");
  if (!(ls_initial_fraction > 0.0 && ls_initial_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "ls_initial_fraction must lie in (0, 1]");
  }
}

AttackOutcome single_pixel_attack(AdversarialState& state, Rng& rng, std::optional<std::size_t> max_pixels) {
  const SpatialLayout layout = spatial_layout(state.model().input_shape());
  return run_attack(state, "single_pixel", [&](TunedParameters& tuned) {
    const Bounds bounds = state.bounds();
    std::vector<std::size_t> order(layout.pixels());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    const std::size_t limit = std::min(order.size(), max_pixels.value_or(order.size()));
    tuned["pixels_tried"] = static_cast<double>(limit);

    Tensor x = state.original();
    for (std::size_t i = 0; i < limit; ++i) {
      for (const double value : {bounds.max, bounds.min}) {
        set_pixel(x, layout, order[i], value);
        state.try_candidate(x);
      }
      x = state.original();
    }
  });
}

AttackOutcome local_search_attack(AdversarialState& state, const ScoreAttackConfig& config, Rng& rng) {
  config.validate();
  const SpatialLayout layout = spatial_layout(state.model().input_shape());
  return run_attack(state, "local_search", [&](TunedParameters& tuned) {
    const Bounds bounds = state.bounds();
    const double magnitude = config.ls_p * bounds.range();
    const std::size_t pixels = layout.pixels();
    const auto sample_size =
        std::max<std::size_t>(1, static_cast<std::size_t>(config.ls_initial_fraction * static_cast<double>(pixels)));

    std::set<std::size_t> perturbed;
    std::vector<std::size_t> untried(pixels);
    std::iota(untried.begin(), untried.end(), std::size_t{0});

    // Random sample of pixels not perturbed yet.
    auto fresh_sample = [&]() {
      std::vector<std::size_t> pool;
      for (std::size_t p : untried) {
        if (!perturbed.contains(p)) pool.push_back(p);
      }
      rng.shuffle(std::span<std::size_t>(pool));
      pool.resize(std::min(pool.size(), sample_size));
      return pool;
    };

    Tensor working = state.original();
    std::vector<std::size_t> active = fresh_sample();
    tuned["initial_sample"] = static_cast<double>(active.size());
    tuned["neighborhood"] = config.ls_neighborhood;
    tuned["top_t"] = config.ls_top_t;
    tuned["p"] = config.ls_p;

    for (int round = 0; round < config.ls_rounds && !active.empty(); ++round) {
      const double base = escape_probability(state, working);
      struct Scored {
        std::size_t pixel;
        double drop;
        double delta;
      };
      std::vector<Scored> scored;
      for (std::size_t pixel : active) {
        Scored best{pixel, 0.0, 0.0};
        for (const double delta : {magnitude, -magnitude}) {
          Tensor probe = working;
          shift_pixel(probe, layout, pixel, delta, bounds);
          const double drop = escape_probability(state, probe) - base;
          if (drop > best.drop) {
            best.drop = drop;
            best.delta = delta;
          }
        }
        if (best.drop > 0.0) scored.push_back(best);
      }
      tuned["rounds"] = round + 1;

      if (scored.empty()) {
        // Nothing in the active set moves the score: sample elsewhere.
        active = fresh_sample();
        continue;
      }
      std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.drop > b.drop; });
      scored.resize(std::min<std::size_t>(scored.size(), config.ls_top_t));
      for (const Scored& s : scored) {
        shift_pixel(working, layout, s.pixel, s.delta, bounds);
        perturbed.insert(s.pixel);
      }
      tuned["perturbed_pixels"] = static_cast<double>(perturbed.size());
      if (state.try_candidate(working).first) return;

      std::set<std::size_t> next;
      const auto radius = static_cast<long>(config.ls_neighborhood);
      for (const Scored& s : scored) {
        const auto row = static_cast<long>(s.pixel / layout.width);
        const auto col = static_cast<long>(s.pixel % layout.width);
        for (long r = std::max(0L, row - radius); r <= std::min<long>(layout.height - 1, row + radius); ++r) {
          for (long c = std::max(0L, col - radius); c <= std::min<long>(layout.width - 1, col + radius); ++c) {
            const auto p = static_cast<std::size_t>(r) * layout.width + static_cast<std::size_t>(c);
            if (!perturbed.contains(p)) next.insert(p);
          }
        }
      }
      active.assign(next.begin(), next.end());
    }
  });
}

}  // namespace robustbench
