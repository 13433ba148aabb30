#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "percept/controller.hpp"
#include "percept/valuation.hpp"
#include "support.hpp"

using namespace percept;
using testing_support::scenario_path;

namespace
{
// Outcome table with p(child, outcome | parent) = t[parent][child] * q[child][outcome].
OutcomeTable factored(std::vector<std::vector<double>> t, std::vector<std::vector<double>> q)
{
  OutcomeTable table;
  table.id = "test";
  for (size_t o = 0; o < q[0].size(); ++o)
  {
    table.outcomes.push_back("o" + std::to_string(o));
  }
  table.parent_labels = testing_support::labels_of(t.size());
  table.child_labels = testing_support::labels_of(t[0].size());
  for (size_t p = 0; p < t.size(); ++p)
    for (size_t c = 0; c < t[p].size(); ++c)
      for (size_t o = 0; o < q[c].size(); ++o)
        table.entries.push_back(t[p][c] * q[c][o]);
  return table;
}

ParentContext context(std::vector<double> belief, std::vector<double> value)
{
  ParentContext ctx;
  ctx.source = "parent";
  ctx.labels = testing_support::labels_of(belief.size());
  ctx.belief = std::move(belief);
  ctx.value = std::move(value);
  return ctx;
}

Scenario brigade()
{
  return load_scenario(scenario_path("brigade.json"));
}

const ActionInstance& find_kind(const std::vector<ActionInstance>& v, ActionKind k)
{
  auto it = std::find_if(v.begin(), v.end(), [&](const ActionInstance& a) { return a.kind == k; });
  EXPECT_NE(it, v.end());
  return *it;
}
}  // namespace

TEST(PosteriorGivenAction, HandComputation)
{
  auto t = factored({{0.9, 0.1}, {0.3, 0.7}}, {{0.5, 0.5}, {0.5, 0.5}});
  std::vector<double> prior{0.5, 0.5};
  EXPECT_NEAR(posterior_given_action(t, 0, 0, prior), 0.75, 1e-15);
  EXPECT_NEAR(posterior_given_action(t, 0, 1, prior), 0.25, 1e-15);
}

TEST(PosteriorGivenAction, UninformativeAndDeterministic)
{
  auto flat = factored({{0.4, 0.6}, {0.4, 0.6}}, {{1.0}, {1.0}});
  std::vector<double> prior{0.3, 0.7};
  EXPECT_NEAR(posterior_given_action(flat, 1, 0, prior), 0.3, 1e-15);
  auto det = factored({{1.0, 0.0}, {0.0, 1.0}}, {{1.0}, {1.0}});
  EXPECT_DOUBLE_EQ(posterior_given_action(det, 0, 0, prior), 1.0);
  EXPECT_THROW(posterior_given_action(det, 0, 0, std::vector<double>{0.0, 1.0}), ValuationError);
  EXPECT_THROW(posterior_given_action(det, 0, 0, std::vector<double>{1.0}), ValuationError);
}

TEST(ValueOfAction, TwoLevelHandCase)
{
  auto t = factored({{0.9, 0.1}, {0.3, 0.7}}, {{0.5, 0.5}, {0.5, 0.5}});
  auto ctx = context({0.5, 0.5}, {0.8, 0.0});
  EXPECT_NEAR(value_of_action_at_hypothesis(t, 0, ctx, ValueMode::kPaperLiteral), 0.2, 1e-12);
  // Outcomes are independent of the parent given the child, so both modes agree.
  EXPECT_NEAR(value_of_action_at_hypothesis(t, 0, ctx, ValueMode::kExpectedAbsChange), 0.2, 1e-12);
}

TEST(ValueOfAction, UninformativeIsZero)
{
  auto t = factored({{0.2, 0.8}, {0.2, 0.8}}, {{0.3, 0.7}, {0.6, 0.4}});
  auto ctx = context({0.35, 0.65}, {0.9, 0.4});
  for (auto mode : {ValueMode::kPaperLiteral, ValueMode::kExpectedAbsChange})
  {
    EXPECT_EQ(value_of_action_at_hypothesis(t, 0, ctx, mode), 0.0);
    std::vector<ParentContext> ctxs{ctx};
    EXPECT_EQ(value_of_action_at_node(t, ctxs, mode), 0.0);
  }
}

TEST(ValueOfAction, NodeSumsOverLabels)
{
  // Three child labels; the third is impossible under the context.
  auto t = factored({{0.6, 0.4, 0.0}, {0.2, 0.8, 0.0}}, {{1.0}, {1.0}, {1.0}});
  auto ctx = context({0.5, 0.5}, {1.0, 0.0});
  double per[3];
  for (size_t k = 0; k < 3; ++k)
  {
    per[k] = value_of_action_at_hypothesis(t, k, ctx, ValueMode::kPaperLiteral);
  }
  EXPECT_NEAR(per[0], 0.25, 1e-12);
  EXPECT_NEAR(per[1], 1.0 / 6, 1e-12);
  EXPECT_EQ(per[2], 0.0);
  std::vector<ParentContext> ctxs{ctx};
  ValuationStats stats;
  EXPECT_NEAR(value_of_action_at_node(t, ctxs, ValueMode::kPaperLiteral, &stats), per[0] + per[1], 1e-12);
  EXPECT_EQ(stats.posterior_evaluations, 3u);
}

TEST(ValueOfAction, MissingParentValue)
{
  auto t = factored({{0.9, 0.1}, {0.3, 0.7}}, {{1.0}, {1.0}});
  auto ctx = context({0.5, 0.5}, {});
  ctx.source = "battalion";
  try
  {
    value_of_action_at_hypothesis(t, 0, ctx, ValueMode::kPaperLiteral);
    FAIL();
  }
  catch (const ValuationError& e)
  {
    EXPECT_NE(std::string(e.what()).find("battalion"), std::string::npos);
  }
}

TEST(ValueOfAction, NonnegativeOnRandomTables)
{
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial)
  {
    std::vector<std::vector<double>> t, q;
    const size_t np = 2 + trial % 3, nc = 2 + trial % 2, no = 1 + trial % 3;
    for (size_t p = 0; p < np; ++p)
      t.push_back(testing_support::random_distribution(rng, nc, 0.0));
    for (size_t c = 0; c < nc; ++c)
      q.push_back(testing_support::random_distribution(rng, no, 0.0));
    auto table = factored(t, q);
    auto ctx = context(testing_support::random_distribution(rng, np, 0.0),
                       testing_support::random_distribution(rng, np, 0.0));
    std::vector<ParentContext> ctxs{ctx};
    for (auto mode : {ValueMode::kPaperLiteral, ValueMode::kExpectedAbsChange})
    {
      EXPECT_GE(value_of_action_at_node(table, ctxs, mode), 0.0);
    }
  }
}

TEST(ValueMode, Parse)
{
  EXPECT_EQ(parse_value_mode("PAPER_LITERAL"), ValueMode::kPaperLiteral);
  EXPECT_EQ(parse_value_mode(to_string(ValueMode::kExpectedAbsChange)), ValueMode::kExpectedAbsChange);
  EXPECT_THROW(parse_value_mode("GREEDY"), std::invalid_argument);
}

TEST(Valuator, EmptyAndDuplicate)
{
  auto s = brigade();
  Controller c(s);
  EXPECT_TRUE(value_all_candidates(c.net(), s.models, {}, ValueMode::kPaperLiteral).empty());
  auto cands = c.candidates();
  ASSERT_FALSE(cands.empty());
  std::vector<ActionInstance> twice{cands[0], cands[0]};
  auto valued = value_all_candidates(c.net(), s.models, twice, ValueMode::kPaperLiteral);
  EXPECT_EQ(valued[0].value, valued[1].value);
  EXPECT_GT(valued[0].value, 0.0);
}

TEST(Valuator, Step1Ordering)
{
  auto s = brigade();
  Controller c(s);
  for (auto mode : {ValueMode::kPaperLiteral, ValueMode::kExpectedAbsChange})
  {
    auto valued = value_all_candidates(c.net(), s.models, c.candidates(), mode);
    ASSERT_EQ(valued.size(), 6u);
    const double refine = find_kind(valued, ActionKind::kRefineType).value;
    const double search = find_kind(valued, ActionKind::kSearch).value;
    EXPECT_GT(refine, search);
    for (const auto& a : valued)
    {
      if (a.kind == ActionKind::kTerrainSupport)
      {
        EXPECT_LT(a.value, search);
      }
    }
  }
}

TEST(Valuator, Step2ClassificationOnStrongestUnitTops)
{
  auto s = brigade();
  Controller c(s);
  c.run_step();
  auto valued = value_all_candidates(c.net(), s.models, c.candidates(), s.control.value_mode);
  ASSERT_EQ(valued.size(), 8u);
  auto strongest = std::max_element(c.clusters().begin(), c.clusters().end(),
                                    [](const auto& a, const auto& b) { return a.strength < b.strength; });
  auto top = std::max_element(valued.begin(), valued.end(),
                              [](const auto& a, const auto& b) { return a.value < b.value; });
  EXPECT_EQ(top->kind, ActionKind::kClassification);
  EXPECT_EQ(c.world().truth(top->target_node()), strongest->truth);
}

TEST(Valuator, GoalScalingKeepsPlans)
{
  std::ifstream in(scenario_path("brigade.json"));
  Json doc = Json::parse(in);
  auto base = parse_scenario(doc);
  for (auto& [k, v] : doc["goal_values"].items())
  {
    v = v.get<double>() * 7.5;
  }
  auto scaled = parse_scenario(doc);
  Controller a(base);
  Controller b(scaled);
  auto va = value_all_candidates(a.net(), base.models, a.candidates(), ValueMode::kPaperLiteral);
  auto vb = value_all_candidates(b.net(), scaled.models, b.candidates(), ValueMode::kPaperLiteral);
  ASSERT_EQ(va.size(), vb.size());
  for (int64_t budget : {820, 1640, 2442, 3000, 5000})
  {
    KnapsackInstance ia{{}, budget}, ib{{}, budget};
    for (size_t i = 0; i < va.size(); ++i)
    {
      EXPECT_NEAR(vb[i].value, 7.5 * va[i].value, 1e-9 * vb[i].value);
      ia.items.push_back({va[i].id, va[i].value, va[i].cost});
      ib.items.push_back({vb[i].id, vb[i].value, vb[i].cost});
    }
    EXPECT_EQ(solve_exact(ia).selected, solve_exact(ib).selected);
  }
}

TEST(Valuator, ContextsAndLabelValues)
{
  auto s = brigade();
  Controller c(s);
  Valuator v(c.net(), s.models, ValueMode::kPaperLiteral);
  const NodeId first = c.seeded().front();
  EXPECT_EQ(v.group_of(first), "company");
  const auto& ctxs = v.parent_contexts(first);
  ASSERT_EQ(ctxs.size(), 1u);
  EXPECT_EQ(ctxs[0].labels, s.models.group("battalion").hypotheses.labels());
  double sum = 0.0;
  for (double b : ctxs[0].belief)
  {
    sum += b;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  const auto& gv = v.group_values("brigade");
  EXPECT_NEAR(gv[0], 0.9, 1e-15);
  for (double x : v.group_values("battalion"))
  {
    EXPECT_GT(x, 0.0);
  }
}
