#include "percept/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace percept
{
namespace
{
constexpr double kValueTieTolerance = 1e-12;

bool value_greater(double a, double b)
{
  return a > b + kValueTieTolerance * std::max({1.0, std::abs(a), std::abs(b)});
}

bool value_equal(double a, double b)
{
  return !value_greater(a, b) && !value_greater(b, a);
}

std::vector<KnapsackItem> sorted_items(const std::vector<KnapsackItem>& items)
{
  std::vector<KnapsackItem> out = items;
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

Plan make_plan(const std::vector<KnapsackItem>& items, const std::vector<bool>& take)
{
  Plan plan;
  for (size_t i = 0; i < items.size(); ++i)
  {
    if (take[i])
    {
      plan.selected.push_back(items[i].id);
      plan.total_value += items[i].value;
      plan.total_cost += items[i].cost;
    }
  }
  return plan;
}

Plan solve_dp(const std::vector<KnapsackItem>& items, int64_t capacity)
{
  const size_t n = items.size();
  const size_t width = static_cast<size_t>(capacity) + 1;
  // best over items i..n-1 for each capacity, rolled from the back.
  std::vector<double> value(width, 0.0), next_value(width);
  std::vector<int64_t> cost(width, 0), next_cost(width);
  std::vector<uint8_t> take(n * width, 0);

  for (size_t i = n; i-- > 0;)
  {
    const auto& item = items[i];
    for (size_t c = 0; c < width; ++c)
    {
      double v = value[c];
      int64_t w = cost[c];
      bool chosen = false;
      if (item.cost <= static_cast<int64_t>(c))
      {
        const size_t rest = c - static_cast<size_t>(item.cost);
        const double tv = item.value + value[rest];
        const int64_t tw = item.cost + cost[rest];
        if (value_greater(tv, v) || (value_equal(tv, v) && tw <= w))
        {
          v = tv;
          w = tw;
          chosen = true;
        }
      }
      next_value[c] = v;
      next_cost[c] = w;
      take[i * width + c] = chosen;
    }
    std::swap(value, next_value);
    std::swap(cost, next_cost);
  }

  std::vector<bool> chosen(n, false);
  size_t c = width - 1;
  for (size_t i = 0; i < n; ++i)
  {
    if (take[i * width + c])
    {
      chosen[i] = true;
      c -= static_cast<size_t>(items[i].cost);
    }
  }
  return make_plan(items, chosen);
}

Plan solve_enumeration(const std::vector<KnapsackItem>& items, int64_t budget)
{
  const size_t n = items.size();
  uint64_t best_mask = 0;
  double best_value = 0.0;
  int64_t best_cost = 0;
  for (uint64_t mask = 1; mask < (uint64_t{1} << n); ++mask)
  {
    double v = 0.0;
    int64_t w = 0;
    for (size_t i = 0; i < n && w <= budget; ++i)
    {
      if (mask >> i & 1)
      {
        v += items[i].value;
        w += items[i].cost;
      }
    }
    if (w > budget)
    {
      continue;
    }
    bool better = value_greater(v, best_value);
    if (!better && value_equal(v, best_value))
    {
      if (w != best_cost)
      {
        better = w < best_cost;
      }
      else
      {
        // The lowest differing item decides; bit i is item i in id order.
        const uint64_t diff = mask ^ best_mask;
        better = diff != 0 && (mask & (diff & (~diff + 1))) != 0;
      }
    }
    if (better)
    {
      best_mask = mask;
      best_value = v;
      best_cost = w;
    }
  }
  std::vector<bool> chosen(n);
  for (size_t i = 0; i < n; ++i)
  {
    chosen[i] = best_mask >> i & 1;
  }
  return make_plan(items, chosen);
}

}  // namespace

void KnapsackInstance::validate() const
{
  if (budget < 0)
  {
    throw std::invalid_argument("budget must be nonnegative");
  }
  std::set<std::string> seen;
  for (const auto& item : items)
  {
    if (!seen.insert(item.id).second)
    {
      throw std::invalid_argument("duplicate item id '" + item.id + "'");
    }
    if (!std::isfinite(item.value) || item.value < 0.0)
    {
      throw std::invalid_argument("item '" + item.id + "' has an invalid value");
    }
    if (item.cost < 0)
    {
      throw std::invalid_argument("item '" + item.id + "' has a negative cost");
    }
  }
}

KnapsackInstance KnapsackInstance::from_json(const Json& doc)
{
  auto integral = [](const Json& v, const std::string& what) {
    if (v.is_number_integer())
    {
      return v.get<int64_t>();
    }
    if (v.is_number_float())
    {
      const double d = v.get<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e18)
      {
        return static_cast<int64_t>(d);
      }
    }
    throw std::invalid_argument(what + " must be an integer");
  };

  KnapsackInstance inst;
  if (!doc.is_object() || !doc.contains("budget_T") || !doc.contains("items"))
  {
    throw std::invalid_argument("knapsack instance needs 'budget_T' and 'items'");
  }
  inst.budget = integral(doc.at("budget_T"), "budget_T");
  for (const auto& row : doc.at("items"))
  {
    KnapsackItem item;
    item.id = row.at("id").get<std::string>();
    item.value = row.at("value").get<double>();
    item.cost = integral(row.at("cost"), "cost of '" + item.id + "'");
    inst.items.push_back(std::move(item));
  }
  inst.validate();
  return inst;
}

Json KnapsackInstance::to_json() const
{
  Json doc;
  doc["budget_T"] = budget;
  doc["items"] = Json::array();
  for (const auto& item : items)
  {
    doc["items"].push_back({{"id", item.id}, {"value", item.value}, {"cost", item.cost}});
  }
  return doc;
}

bool Plan::contains(const std::string& id) const
{
  return std::binary_search(selected.begin(), selected.end(), id);
}

Json Plan::to_json() const
{
  return {{"selected", selected}, {"total_value", total_value}, {"total_cost", total_cost}};
}

Plan solve_exact(const KnapsackInstance& instance, const ExactSolverLimits& limits)
{
  instance.validate();
  auto items = sorted_items(instance.items);

  int64_t total = 0;
  for (const auto& item : items)
  {
    total += item.cost;
  }
  if (total <= instance.budget)
  {
    return make_plan(items, std::vector<bool>(items.size(), true));
  }

  const uint64_t width = static_cast<uint64_t>(std::min(instance.budget, total)) + 1;
  if (items.empty() || width <= limits.max_dp_cells / std::max<size_t>(items.size(), 1))
  {
    return solve_dp(items, static_cast<int64_t>(width - 1));
  }
  if (items.size() <= limits.max_enumeration_items)
  {
    return solve_enumeration(items, instance.budget);
  }
  throw InstanceTooLarge("knapsack instance with " + std::to_string(items.size()) + " items and budget " +
                         std::to_string(instance.budget) + " exceeds the exact solver limits");
}

Plan solve_approx(const KnapsackInstance& instance, double epsilon)
{
  if (!(epsilon > 0.0 && epsilon < 1.0))
  {
    throw std::invalid_argument("epsilon must lie in (0, 1)");
  }
  instance.validate();

  std::vector<KnapsackItem> items;
  for (const auto& item : sorted_items(instance.items))
  {
    if (item.cost <= instance.budget)
    {
      items.push_back(item);
    }
  }
  int64_t total = 0;
  double vmax = 0.0;
  for (const auto& item : items)
  {
    total += item.cost;
    vmax = std::max(vmax, item.value);
  }
  if (total <= instance.budget)
  {
    return make_plan(items, std::vector<bool>(items.size(), true));
  }
  if (vmax <= 0.0)
  {
    return {};
  }

  // Rounding loses < K per item, so n*K < epsilon * vmax <= epsilon * P'.
  const size_t n = items.size();
  const double k = epsilon * vmax / static_cast<double>(n + 1);
  std::vector<size_t> scaled(n);
  size_t max_total = 0;
  for (size_t i = 0; i < n; ++i)
  {
    scaled[i] = static_cast<size_t>(std::floor(items[i].value / k));
    max_total += scaled[i];
  }

  constexpr int64_t kUnreachable = std::numeric_limits<int64_t>::max();
  const size_t width = max_total + 1;
  // Minimum cost reaching each scaled value, items i..n-1.
  std::vector<int64_t> min_cost(width, kUnreachable), next(width);
  min_cost[0] = 0;
  std::vector<uint8_t> take(n * width, 0);
  for (size_t i = n; i-- > 0;)
  {
    for (size_t s = 0; s < width; ++s)
    {
      int64_t best = min_cost[s];
      bool chosen = false;
      if (s >= scaled[i] && min_cost[s - scaled[i]] != kUnreachable)
      {
        const int64_t c = min_cost[s - scaled[i]] + items[i].cost;
        if (c <= best)
        {
          best = c;
          chosen = true;
        }
      }
      next[s] = best;
      take[i * width + s] = chosen;
    }
    std::swap(min_cost, next);
  }

  size_t s = width - 1;
  while (min_cost[s] > instance.budget)
  {
    --s;
  }
  std::vector<bool> chosen(n, false);
  for (size_t i = 0; i < n; ++i)
  {
    if (take[i * width + s])
    {
      chosen[i] = true;
      s -= scaled[i];
    }
  }
  return make_plan(items, chosen);
}

std::vector<Plan> plan_sweep(const std::vector<KnapsackItem>& items, const std::vector<int64_t>& budgets,
                             std::optional<double> epsilon)
{
  for (size_t i = 1; i < budgets.size(); ++i)
  {
    if (budgets[i] <= budgets[i - 1])
    {
      throw std::invalid_argument("sweep budgets must be strictly increasing");
    }
  }
  std::vector<Plan> plans;
  for (int64_t budget : budgets)
  {
    KnapsackInstance inst{items, budget};
    Plan plan = epsilon ? solve_approx(inst, *epsilon) : solve_exact(inst);
    if (!plans.empty() && value_greater(plans.back().total_value, plan.total_value))
    {
      plan = plans.back();
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

}  // namespace percept
