#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <random>

#include "oracles/knapsack_enumeration.hpp"
#include "percept/planner.hpp"
#include "support.hpp"

using namespace percept;

namespace
{
KnapsackInstance random_instance(std::mt19937_64& rng, size_t max_items, int64_t max_cost = 10000)
{
  KnapsackInstance inst;
  const size_t n = std::uniform_int_distribution<size_t>(0, max_items)(rng);
  std::uniform_int_distribution<int64_t> cost(0, max_cost);
  std::uniform_real_distribution<double> value(0.0, 1000.0);
  int64_t total = 0;
  for (size_t i = 0; i < n; ++i)
  {
    inst.items.push_back({"a" + std::to_string(i), value(rng), cost(rng)});
    total += inst.items.back().cost;
  }
  inst.budget = std::uniform_int_distribution<int64_t>(0, std::max<int64_t>(total, 1))(rng);
  return inst;
}

std::vector<std::pair<double, int64_t>> pairs(const KnapsackInstance& inst)
{
  std::vector<std::pair<double, int64_t>> out;
  for (const auto& it : inst.items)
  {
    out.push_back({it.value, it.cost});
  }
  return out;
}

double value_of(const KnapsackInstance& inst, const Plan& plan)
{
  double v = 0.0;
  int64_t c = 0;
  for (const auto& it : inst.items)
  {
    if (plan.contains(it.id))
    {
      v += it.value;
      c += it.cost;
    }
  }
  EXPECT_EQ(c, plan.total_cost);
  EXPECT_LE(c, inst.budget);
  return v;
}
}  // namespace

TEST(SolveExact, ZeroBudgetGivesEmptyPlan)
{
  KnapsackInstance inst{testing_support::step1_items(), 0};
  auto plan = solve_exact(inst);
  EXPECT_TRUE(plan.selected.empty());
  EXPECT_EQ(plan.total_value, 0.0);
}

TEST(SolveExact, EverythingFits)
{
  KnapsackInstance inst{testing_support::step1_items(), 5722};
  auto plan = solve_exact(inst);
  EXPECT_EQ(plan.selected.size(), 6u);
  EXPECT_DOUBLE_EQ(plan.total_value, 20163);
  EXPECT_EQ(plan.total_cost, 5722);
}

TEST(SolveExact, TightBudgetPicksRefine)
{
  KnapsackInstance inst{testing_support::step1_items(), 1600};
  auto plan = solve_exact(inst);
  EXPECT_EQ(plan.selected, std::vector<std::string>{"refine_type"});
}

TEST(SolveExact, MatchesEnumeration)
{
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial)
  {
    auto inst = random_instance(rng, 12);
    auto plan = solve_exact(inst);
    auto best = oracle::best_subset(pairs(inst), inst.budget);
    EXPECT_NEAR(value_of(inst, plan), best.best_value, 1e-9 * std::max(1.0, best.best_value));
  }
}

TEST(SolveExact, EnumerationFallbackAgreesWithDp)
{
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial)
  {
    auto inst = random_instance(rng, 14);
    ExactSolverLimits forced;
    forced.max_dp_cells = 0;
    auto a = solve_exact(inst);
    auto b = solve_exact(inst, forced);
    EXPECT_EQ(a.selected, b.selected);
  }
  KnapsackInstance big;
  for (int i = 0; i < 30; ++i)
  {
    big.items.push_back({"x" + std::to_string(i), 1.0, 1'000'000'000});
  }
  big.budget = 20'000'000'000;
  ExactSolverLimits tiny;
  tiny.max_dp_cells = 10;
  EXPECT_THROW(solve_exact(big, tiny), InstanceTooLarge);
}

TEST(SolveExact, TieBreaks)
{
  // Equal value: the cheaper plan wins.
  KnapsackInstance a{{{"x", 5, 10}, {"y", 5, 4}}, 10};
  EXPECT_EQ(solve_exact(a).selected, std::vector<std::string>{"y"});
  // Equal value and cost: the plan with the lower id wins.
  KnapsackInstance b{{{"b", 5, 4}, {"a", 5, 4}}, 5};
  EXPECT_EQ(solve_exact(b).selected, std::vector<std::string>{"a"});
}

TEST(SolveExact, Validation)
{
  KnapsackInstance neg{{{"x", -1, 1}}, 5};
  EXPECT_THROW(solve_exact(neg), std::invalid_argument);
  KnapsackInstance dup{{{"x", 1, 1}, {"x", 2, 1}}, 5};
  EXPECT_THROW(solve_exact(dup), std::invalid_argument);
  KnapsackInstance nan{{{"x", std::numeric_limits<double>::quiet_NaN(), 1}}, 5};
  EXPECT_THROW(solve_exact(nan), std::invalid_argument);
  KnapsackInstance nb{{}, -1};
  EXPECT_THROW(solve_exact(nb), std::invalid_argument);
}

TEST(SolveApprox, DominantItem)
{
  KnapsackInstance inst{{{"big", 1000, 50}, {"s1", 1, 30}, {"s2", 1, 30}}, 60};
  EXPECT_EQ(solve_approx(inst, 0.5).selected, std::vector<std::string>{"big"});
}

TEST(SolveApprox, DensityTrap)
{
  KnapsackInstance inst{{{"a", 60, 10}, {"b", 100, 20}, {"c", 120, 30}}, 50};
  for (double eps : {0.5, 0.25, 0.1, 0.01})
  {
    auto plan = solve_approx(inst, eps);
    EXPECT_GT(plan.total_value, (1 - eps) * 220);
  }
  EXPECT_DOUBLE_EQ(solve_exact(inst).total_value, 220);
}

TEST(SolveApprox, GuaranteeOnRandomInstances)
{
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial)
  {
    auto inst = random_instance(rng, 20);
    const double best = solve_exact(inst).total_value;
    for (double eps : {0.25, 0.1, 0.01})
    {
      auto plan = solve_approx(inst, eps);
      const double got = value_of(inst, plan);
      if (best > 0.0)
      {
        EXPECT_LT((best - got) / best, eps);
      }
    }
  }
}

TEST(SolveApprox, RejectsBadEpsilon)
{
  KnapsackInstance inst{testing_support::step1_items(), 1000};
  EXPECT_THROW(solve_approx(inst, 0.0), std::invalid_argument);
  EXPECT_THROW(solve_approx(inst, 1.0), std::invalid_argument);
  EXPECT_THROW(solve_approx(inst, -0.5), std::invalid_argument);
}

TEST(PlanSweep, ZeroAndUnbounded)
{
  auto plans = plan_sweep(testing_support::step1_items(), {0, std::numeric_limits<int32_t>::max()});
  ASSERT_EQ(plans.size(), 2u);
  EXPECT_TRUE(plans[0].selected.empty());
  EXPECT_EQ(plans[1].selected.size(), 6u);
}

TEST(PlanSweep, Step1Family)
{
  auto plans = plan_sweep(testing_support::step1_items(), {842, 2442, 5722});
  ASSERT_EQ(plans.size(), 3u);
  EXPECT_EQ(plans[0].selected, std::vector<std::string>{"search"});
  EXPECT_EQ(plans[1].selected.size(), 2u);
  EXPECT_EQ(plans[2].selected.size(), 6u);
}

TEST(PlanSweep, ValueNondecreasing)
{
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial)
  {
    auto inst = random_instance(rng, 10, 200);
    std::vector<int64_t> budgets{0, 50, 100, 200, 400, 800, 2000};
    auto exact = plan_sweep(inst.items, budgets);
    auto approx = plan_sweep(inst.items, budgets, 0.2);
    for (size_t i = 1; i < budgets.size(); ++i)
    {
      EXPECT_GE(exact[i].total_value, exact[i - 1].total_value);
      EXPECT_GE(approx[i].total_value, approx[i - 1].total_value);
    }
  }
}

TEST(PlanSweep, RejectsUnorderedBudgets)
{
  EXPECT_THROW(plan_sweep(testing_support::step1_items(), {100, 100}), std::invalid_argument);
  EXPECT_THROW(plan_sweep(testing_support::step1_items(), {200, 100}), std::invalid_argument);
}

TEST(KnapsackInstance, JsonRoundTrip)
{
  KnapsackInstance inst{testing_support::step1_items(), 5722};
  auto back = KnapsackInstance::from_json(inst.to_json());
  ASSERT_EQ(back.items.size(), inst.items.size());
  EXPECT_EQ(back.budget, 5722);
  EXPECT_EQ(back.items[1].id, "search");
  EXPECT_THROW(KnapsackInstance::from_json(Json::parse(R"({"items": []})")), std::exception);
  auto plan = solve_exact(inst).to_json();
  EXPECT_EQ(plan["total_cost"], 5722);
}
