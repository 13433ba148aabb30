#include "percept/valuation.hpp"

#include <cmath>

namespace percept
{
std::string to_string(ValueMode mode)
{
  return mode == ValueMode::kPaperLiteral ? "PAPER_LITERAL" : "EXPECTED_ABS_CHANGE";
}

ValueMode parse_value_mode(const std::string& text)
{
  if (text == "PAPER_LITERAL")
  {
    return ValueMode::kPaperLiteral;
  }
  if (text == "EXPECTED_ABS_CHANGE")
  {
    return ValueMode::kExpectedAbsChange;
  }
  throw std::invalid_argument("unknown value mode '" + text + "'");
}

std::vector<double> posterior_given_action(const OutcomeTable& table, size_t child_label,
                                           std::span<const double> parent_belief)
{
  if (parent_belief.size() != table.parent_labels.size())
  {
    throw ValuationError("outcome table " + table.id + " has " + std::to_string(table.parent_labels.size()) +
                         " parent labels, belief has " + std::to_string(parent_belief.size()));
  }
  std::vector<double> post(parent_belief.size());
  double evidence = 0.0;
  for (size_t p = 0; p < post.size(); ++p)
  {
    post[p] = table.child_marginal(p, child_label) * parent_belief[p];
    evidence += post[p];
  }
  if (!(evidence > 0.0))
  {
    throw ValuationError("outcome table " + table.id + ": child '" + table.child_labels[child_label] +
                         "' has zero probability under the action; it cannot bear on the parent");
  }
  for (double& x : post)
  {
    x /= evidence;
  }
  return post;
}

double posterior_given_action(const OutcomeTable& table, size_t child_label, size_t parent_label,
                              std::span<const double> parent_belief)
{
  return posterior_given_action(table, child_label, parent_belief).at(parent_label);
}

double value_of_action_at_hypothesis(const OutcomeTable& table, size_t child_label, const ParentContext& parents,
                                     ValueMode mode, ValuationStats* stats)
{
  const size_t np = table.parent_labels.size();
  if (parents.labels != table.parent_labels)
  {
    throw ValuationError("outcome table " + table.id + " does not range over the labels of " + parents.source);
  }
  if (parents.value.size() != np || parents.belief.size() != np)
  {
    throw ValuationError("no value computed for " + parents.source);
  }
  if (stats)
  {
    ++stats->posterior_evaluations;
  }

  double evidence = 0.0;
  for (size_t p = 0; p < np; ++p)
  {
    evidence += table.child_marginal(p, child_label) * parents.belief[p];
  }
  if (!(evidence > 0.0))
  {
    return 0.0;
  }
  auto flat = [&](auto&& entry) {
    for (size_t p = 1; p < np; ++p)
    {
      if (entry(p) != entry(0))
      {
        return false;
      }
    }
    return true;
  };

  double total = 0.0;
  if (mode == ValueMode::kPaperLiteral)
  {
    if (flat([&](size_t p) { return table.child_marginal(p, child_label); }))
    {
      return 0.0;
    }
    auto post = posterior_given_action(table, child_label, parents.belief);
    for (size_t p = 0; p < np; ++p)
    {
      total += std::abs(post[p] - parents.belief[p]) * parents.value[p];
    }
    return total;
  }

  const size_t no = table.outcomes.size();
  for (size_t o = 0; o < no; ++o)
  {
    double mass = 0.0;
    for (size_t p = 0; p < np; ++p)
    {
      mass += table.at(p, child_label, o) * parents.belief[p];
    }
    if (!(mass > 0.0) || flat([&](size_t p) { return table.at(p, child_label, o); }))
    {
      continue;
    }
    const double weight = mass / evidence;
    for (size_t p = 0; p < np; ++p)
    {
      const double post = table.at(p, child_label, o) * parents.belief[p] / mass;
      total += weight * std::abs(post - parents.belief[p]) * parents.value[p];
    }
  }
  return total;
}

double value_of_action_at_node(const OutcomeTable& table, std::span<const ParentContext> parents, ValueMode mode,
                               ValuationStats* stats)
{
  double total = 0.0;
  for (size_t k = 0; k < table.child_labels.size(); ++k)
  {
    for (const auto& ctx : parents)
    {
      total += value_of_action_at_hypothesis(table, k, ctx, mode, stats);
    }
  }
  return total;
}

namespace
{
/// sum_q |p(q | child = l) - p(q)| V(q), with p(q | child = l) from the
/// part-of table.
std::vector<double> resolve_values(const ParentContext& ctx, size_t child_labels)
{
  std::vector<double> out(child_labels, 0.0);
  if (!ctx.link)
  {
    return out;
  }
  const size_t nq = ctx.labels.size();
  for (size_t l = 0; l < child_labels; ++l)
  {
    double evidence = 0.0;
    for (size_t q = 0; q < nq; ++q)
    {
      evidence += ctx.link->at(q, l) * ctx.belief[q];
    }
    if (!(evidence > 0.0))
    {
      continue;
    }
    for (size_t q = 0; q < nq; ++q)
    {
      out[l] += std::abs(ctx.link->at(q, l) * ctx.belief[q] / evidence - ctx.belief[q]) * ctx.value[q];
    }
  }
  return out;
}
}  // namespace

Valuator::Valuator(const BayesNet& net, const ModelBase& models, ValueMode mode)
    : net_(net), models_(models), mode_(mode)
{
}

std::string Valuator::group_of(NodeId node) const
{
  const auto& refs = net_.node(node).model_refs;
  if (refs.empty())
  {
    throw ValuationError(to_string(node) + " is not bound to any model");
  }
  return models_.node(refs.begin()->second).isa_group;
}

const std::vector<double>& Valuator::group_values(const std::string& group)
{
  if (auto it = group_values_.find(group); it != group_values_.end())
  {
    return it->second;
  }
  const IsaGroup& g = models_.group(group);
  std::vector<double> values(g.hypotheses.size(), 0.0);
  if (models_.is_goal_group(group))
  {
    values = models_.goal_values_for(group);
  }
  else
  {
    for (const auto& pg : g.parent_groups)
    {
      ParentContext ctx;
      ctx.source = "group " + pg;
      ctx.labels = models_.group(pg).hypotheses.labels();
      ctx.belief = models_.group(pg).hypotheses.priors();
      ctx.value = group_values(pg);
      ctx.link = models_.link_table(pg, group);
      auto part = resolve_values(ctx, values.size());
      for (size_t i = 0; i < values.size(); ++i)
      {
        values[i] += part[i];
      }
    }
  }
  return group_values_.emplace(group, std::move(values)).first->second;
}

const std::vector<ParentContext>& Valuator::parent_contexts(NodeId node)
{
  if (auto it = contexts_.find(node); it != contexts_.end())
  {
    return it->second;
  }
  std::vector<ParentContext> out;
  const BayesNode& n = net_.node(node);
  if (!net_.parents(node).empty())
  {
    for (NodeId p : net_.parents(node))
    {
      ParentContext ctx;
      ctx.source = to_string(p);
      ctx.labels = net_.node(p).hypotheses.labels();
      ctx.belief = net_.belief(p);
      ctx.value = label_values(p);
      ctx.link = &net_.link_table(p, node);
      out.push_back(std::move(ctx));
    }
  }
  else
  {
    const std::string group = group_of(node);
    const IsaGroup& g = models_.group(group);
    for (const auto& pg : g.parent_groups)
    {
      // Parent not instantiated: start from its a priori distribution and
      // fold in what this node's belief says relative to its own prior.
      const IsaGroup& parent = models_.group(pg);
      const ConditionalTable* link = models_.link_table(pg, group);
      const auto& own_prior = g.hypotheses.priors();
      ParentContext ctx;
      ctx.source = "group " + pg + " above " + to_string(node);
      ctx.labels = parent.hypotheses.labels();
      ctx.value = group_values(pg);
      ctx.link = link;
      ctx.belief.assign(ctx.labels.size(), 0.0);
      double z = 0.0;
      for (size_t q = 0; q < ctx.labels.size(); ++q)
      {
        double support = 0.0;
        for (size_t c = 0; c < n.belief.size(); ++c)
        {
          if (own_prior[c] > 0.0)
          {
            support += link->at(q, c) * n.belief[c] / own_prior[c];
          }
        }
        ctx.belief[q] = parent.hypotheses.priors()[q] * support;
        z += ctx.belief[q];
      }
      if (z > 0.0)
      {
        for (double& b : ctx.belief)
        {
          b /= z;
        }
      }
      else
      {
        ctx.belief = parent.hypotheses.priors();
      }
      out.push_back(std::move(ctx));
    }
    if (out.empty())
    {
      ParentContext ctx;
      ctx.source = to_string(node);
      ctx.labels = n.hypotheses.labels();
      ctx.belief = n.belief;
      ctx.value = models_.goal_values_for(group);
      out.push_back(std::move(ctx));
    }
  }
  return contexts_.emplace(node, std::move(out)).first->second;
}

const std::vector<double>& Valuator::label_values(NodeId node)
{
  if (auto it = label_values_.find(node); it != label_values_.end())
  {
    return it->second;
  }
  const std::string group = group_of(node);
  std::vector<double> values(net_.node(node).hypotheses.size(), 0.0);
  if (models_.is_goal_group(group))
  {
    values = models_.goal_values_for(group);
  }
  else
  {
    for (const auto& ctx : parent_contexts(node))
    {
      auto part = resolve_values(ctx, values.size());
      for (size_t i = 0; i < values.size(); ++i)
      {
        values[i] += part[i];
      }
    }
  }
  return label_values_.emplace(node, std::move(values)).first->second;
}

double Valuator::value(const ActionInstance& action)
{
  const OutcomeTable& table = models_.outcome_table(action.outcome_table);
  double total = 0.0;
  for (NodeId target : action.targets)
  {
    total += value_of_action_at_node(table, parent_contexts(target), mode_, &stats_);
  }
  return total;
}

std::vector<ActionInstance> value_all_candidates(const BayesNet& net, const ModelBase& models,
                                                 std::vector<ActionInstance> candidates, ValueMode mode,
                                                 ValuationStats* stats)
{
  Valuator valuator(net, models, mode);
  for (auto& c : candidates)
  {
    c.value = valuator.value(c);
  }
  if (stats)
  {
    stats->posterior_evaluations += valuator.stats().posterior_evaluations;
  }
  return candidates;
}

}  // namespace percept
