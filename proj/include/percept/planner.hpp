#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "percept/model_base.hpp"

namespace percept
{
struct KnapsackItem
{
  std::string id;
  double value = 0.0;
  int64_t cost = 0;
};

struct KnapsackInstance
{
  std::vector<KnapsackItem> items;
  int64_t budget = 0;

  /// Throws std::invalid_argument on negative or non-finite numbers and on
  /// duplicate ids.
  void validate() const;

  /// {"budget_T": int, "items": [{"id", "value", "cost"}]}
  static KnapsackInstance from_json(const Json& doc);
  Json to_json() const;
};

struct Plan
{
  // Sorted by id.
  std::vector<std::string> selected;
  double total_value = 0.0;
  int64_t total_cost = 0;

  bool contains(const std::string& id) const;
  Json to_json() const;
};

struct ExactSolverLimits
{
  // Subset enumeration is used when the DP table would exceed max_dp_cells.
  size_t max_enumeration_items = 24;
  uint64_t max_dp_cells = 200'000'000;
};

class InstanceTooLarge : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Maximum-value plan. Ties go to the lower total cost, then to the plan that
/// includes the lowest-id item on which the candidates differ.
Plan solve_exact(const KnapsackInstance& instance, const ExactSolverLimits& limits = {});

/// Value-scaling FPTAS: (P' - P) / P' < epsilon against the optimum P'.
/// Throws std::invalid_argument unless 0 < epsilon < 1.
Plan solve_approx(const KnapsackInstance& instance, double epsilon);

/// One plan per budget, budgets strictly increasing. With an epsilon the
/// approximate solver is used. A plan never scores below the plan for a
/// smaller budget.
std::vector<Plan> plan_sweep(const std::vector<KnapsackItem>& items, const std::vector<int64_t>& budgets,
                             std::optional<double> epsilon = std::nullopt);

}  // namespace percept
