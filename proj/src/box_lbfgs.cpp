#include "robustbench/box_lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "robustbench/error.hpp"
#include "robustbench/tensor.hpp"

namespace robustbench {

namespace {

struct Pair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

void project(std::vector<double>& x, std::span<const double> lower, std::span<const double> upper) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
}

// Variables pinned at a bound by the current gradient.
std::vector<bool> active_set(std::span<const double> x, std::span<const double> g, std::span<const double> lower,
                             std::span<const double> upper) {
  std::vector<bool> active(x.size(), false);
  for (std::size_t i = 0; i < x.size(); ++i) {
    active[i] = (x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0);
  }
  return active;
}

std::vector<double> two_loop(const std::deque<Pair>& memory, std::vector<double> q, const std::vector<bool>& active) {
  std::vector<double> alpha(memory.size());
  for (std::size_t k = memory.size(); k-- > 0;) {
    const Pair& p = memory[k];
    alpha[k] = p.rho * dot(p.s, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * p.y[i];
  }
  if (!memory.empty()) {
    const Pair& last = memory.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& v : q) v *= gamma;
  }
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const Pair& p = memory[k];
    const double beta = p.rho * dot(p.y, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += (alpha[k] - beta) * p.s[i];
  }
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (active[i]) q[i] = 0.0;
  }
  return q;
}

}  // namespace

BoxLbfgsResult minimize_box(const BoxObjective& objective, std::vector<double> start, std::span<const double> lower,
                            std::span<const double> upper, const BoxLbfgsOptions& options,
                            const IterateCallback& on_iterate) {
  const std::size_t n = start.size();
  if (lower.size() != n || upper.size() != n) throw Error(ErrorCode::DimensionMismatch, "box bounds length");
  if (options.max_iterations < 0 || options.memory < 1) {
    throw Error(ErrorCode::InvalidParameter, "optimizer needs max_iterations >= 0 and memory >= 1");
  }

  BoxLbfgsResult result;
  std::vector<double> x = std::move(start);
  project(x, lower, upper);
  std::vector<double> g(n, 0.0);
  double f = objective(x, g);
  ++result.evaluations;

  std::deque<Pair> memory;
  std::vector<double> x_new(n);
  std::vector<double> g_new(n);

  for (int it = 0; it < options.max_iterations; ++it) {
    const std::vector<bool> active = active_set(x, g, lower, upper);
    std::vector<double> pg(n);
    for (std::size_t i = 0; i < n; ++i) pg[i] = active[i] ? 0.0 : g[i];
    if (linf_norm(pg) < options.gradient_tolerance) {
      result.converged = true;
      break;
    }

    std::vector<double> d = two_loop(memory, pg, active);
    for (double& v : d) v = -v;
    if (memory.empty() || dot(d, pg) >= 0.0) {
      memory.clear();
      const double scale = std::min(1.0, options.initial_step / linf_norm(pg));
      for (std::size_t i = 0; i < n; ++i) d[i] = -scale * pg[i];
    }

    // Projected backtracking (Armijo on the actual projected displacement).
    double t = 1.0;
    double f_new = f;
    bool accepted = false;
    for (int bt = 0; bt < options.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + t * d[i];
      project(x_new, lower, upper);
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (x_new[i] - x[i]);
      f_new = objective(x_new, g_new);
      ++result.evaluations;
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;

    Pair pair{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      pair.s[i] = x_new[i] - x[i];
      pair.y[i] = g_new[i] - g[i];
    }
    const double sy = dot(pair.s, pair.y);
    if (sy > 1e-12 * std::max(1e-300, dot(pair.y, pair.y))) {
      pair.rho = 1.0 / sy;
      memory.push_back(std::move(pair));
      if (memory.size() > static_cast<std::size_t>(options.memory)) memory.pop_front();
    }

    const double previous = f;
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    ++result.iterations;
    if (on_iterate) on_iterate(x);
    if (std::abs(previous - f) <= 1e-15 * std::max(1.0, std::abs(f))) break;
  }

  result.x = std::move(x);
  result.value = f;
  return result;
}

}  // namespace robustbench
