#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "percept/model_base.hpp"
#include "percept/valuation.hpp"
#include "percept/world_sim.hpp"

namespace percept
{
struct ControlConfig
{
  int64_t budget_T = 0;
  // 0 selects the exact solver.
  double epsilon = 0.0;
  int processors = 1;
  double termination_belief = 0.99;
  // Total simulated time allowed; 0 for no limit.
  int64_t max_wall = 0;
  uint64_t seed = 0;
  ValueMode value_mode = ValueMode::kPaperLiteral;
  // Durations are scaled by 1 + cost_jitter * u, u uniform in [-1, 1].
  double cost_jitter = 0.0;
  size_t max_steps = 64;

  /// Accepts termination_ratio r in place of termination_belief, read as
  /// belief r / (1 + r).
  static ControlConfig from_json(const Json& doc);
  Json to_json() const;
  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct Scenario
{
  ModelBase models;
  WorldSpec world;
  ControlConfig control;
};

Scenario parse_scenario(const Json& doc);
/// Reads and validates a scenario file. Throws ScenarioError.
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace percept
