#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "robustbench/adversarial.hpp"
#include "robustbench/rng.hpp"

namespace robustbench {

/// A configured attack from the catalog, runnable on any state.
class Attack {
 public:
  virtual ~Attack() = default;

  const std::string& name() const { return name_; }

  /// Effective parameter values (defaults merged with overrides).
  virtual nlohmann::ordered_json parameters() const = 0;
  /// Only the parameters that were set explicitly.
  const nlohmann::ordered_json& overrides() const { return overrides_; }

  /// Runs the attack and converts library errors into an unsuccessful
  /// outcome. The state's existing best is kept, so calling this on a state
  /// that already holds an adversarial resumes from it.
  AttackOutcome run(AdversarialState& state, Rng& rng) const;

 protected:
  Attack(std::string name, nlohmann::ordered_json overrides)
      : name_(std::move(name)), overrides_(std::move(overrides)) {}

  virtual AttackOutcome execute(AdversarialState& state, Rng& rng) const = 0;

 private:
  std::string name_;
  nlohmann::ordered_json overrides_;
};

/// Names accepted by make_attack, in catalog order.
const std::vector<std::string>& attack_catalog();

/// Builds a catalog attack; unknown names or parameters raise ConfigError.
std::unique_ptr<Attack> make_attack(std::string_view name,
                                    const nlohmann::ordered_json& overrides = nlohmann::ordered_json::object());

/// Same as attack.run(state, rng).
AttackOutcome resume(AdversarialState& state, const Attack& attack, Rng& rng);

}  // namespace robustbench
