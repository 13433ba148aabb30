#include "percept/model_base.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace percept
{
namespace
{
bool near_one(double sum) { return std::abs(sum - 1.0) <= kProbabilityTolerance; }

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

std::string join(const std::vector<std::string>& items, const std::string& sep)
{
  std::string out;
  for (size_t i = 0; i < items.size(); ++i)
  {
    if (i > 0)
    {
      out += sep;
    }
    out += items[i];
  }
  return out;
}

const Json& require(const Json& obj, const char* key, const std::string& element)
{
  if (!obj.is_object() || !obj.contains(key))
  {
    throw ScenarioError(element, std::string("missing required key '") + key + "'");
  }
  return obj.at(key);
}

std::string require_string(const Json& obj, const char* key, const std::string& element)
{
  const Json& v = require(obj, key, element);
  if (!v.is_string())
  {
    throw ScenarioError(element, std::string("'") + key + "' must be a string");
  }
  return v.get<std::string>();
}

std::vector<std::string> string_list(const Json& v, const std::string& element, const char* what)
{
  if (!v.is_array())
  {
    throw ScenarioError(element, std::string(what) + " must be an array of strings");
  }
  std::vector<std::string> out;
  for (const auto& item : v)
  {
    if (!item.is_string())
    {
      throw ScenarioError(element, std::string(what) + " must be an array of strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

double number(const Json& v, const std::string& element, const char* what)
{
  if (!v.is_number())
  {
    throw ScenarioError(element, std::string(what) + " must be a number");
  }
  return v.get<double>();
}

}  // namespace

HypothesisSet::HypothesisSet(std::vector<std::string> labels, std::vector<double> priors,
                             std::optional<std::string> null_label)
    : labels_(std::move(labels)), priors_(std::move(priors))
{
  if (labels_.empty())
  {
    throw std::invalid_argument("hypothesis set has no labels");
  }
  if (labels_.size() != priors_.size())
  {
    throw std::invalid_argument("hypothesis set: " + std::to_string(labels_.size()) + " labels but " +
                                std::to_string(priors_.size()) + " priors");
  }
  std::set<std::string> seen;
  for (const auto& label : labels_)
  {
    if (!seen.insert(label).second)
    {
      throw std::invalid_argument("hypothesis set: duplicate label '" + label + "'");
    }
  }
  double sum = 0.0;
  for (size_t i = 0; i < priors_.size(); ++i)
  {
    if (!is_probability(priors_[i]))
    {
      throw std::invalid_argument("hypothesis set: prior of '" + labels_[i] + "' outside [0,1]");
    }
    sum += priors_[i];
  }
  if (!near_one(sum))
  {
    std::ostringstream msg;
    msg << "hypothesis set: priors sum to " << sum << ", not 1";
    throw std::invalid_argument(msg.str());
  }
  if (null_label)
  {
    null_index_ = index_of(*null_label);
    if (!null_index_)
    {
      throw std::invalid_argument("hypothesis set: null label '" + *null_label + "' is not a label");
    }
  }
}

std::optional<size_t> HypothesisSet::index_of(const std::string& label) const
{
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end())
  {
    return std::nullopt;
  }
  return static_cast<size_t>(it - labels_.begin());
}

void ConditionalTable::validate() const
{
  if (rows.size() != parent_labels.size())
  {
    throw std::invalid_argument("table " + id + ": expected " + std::to_string(parent_labels.size()) +
                                " rows, got " + std::to_string(rows.size()));
  }
  for (size_t p = 0; p < rows.size(); ++p)
  {
    if (rows[p].size() != child_labels.size())
    {
      throw std::invalid_argument("table " + id + ": row '" + parent_labels[p] + "' has wrong width");
    }
    double sum = 0.0;
    for (double x : rows[p])
    {
      if (!is_probability(x))
      {
        throw std::invalid_argument("table " + id + ": row '" + parent_labels[p] + "' has entry outside [0,1]");
      }
      sum += x;
    }
    if (!near_one(sum))
    {
      std::ostringstream msg;
      msg << "table " << id << ": row '" << parent_labels[p] << "' sums to " << sum;
      throw std::invalid_argument(msg.str());
    }
  }
}

double OutcomeTable::child_marginal(size_t parent, size_t child) const
{
  double sum = 0.0;
  for (size_t o = 0; o < outcomes.size(); ++o)
  {
    sum += at(parent, child, o);
  }
  return sum;
}

std::optional<size_t> OutcomeTable::outcome_index(const std::string& outcome) const
{
  auto it = std::find(outcomes.begin(), outcomes.end(), outcome);
  if (it == outcomes.end())
  {
    return std::nullopt;
  }
  return static_cast<size_t>(it - outcomes.begin());
}

void OutcomeTable::validate() const
{
  if (outcomes.empty() || parent_labels.empty() || child_labels.empty())
  {
    throw std::invalid_argument("outcome table " + id + ": empty dimension");
  }
  if (entries.size() != outcomes.size() * parent_labels.size() * child_labels.size())
  {
    throw std::invalid_argument("outcome table " + id + ": wrong number of entries");
  }
  for (size_t p = 0; p < parent_labels.size(); ++p)
  {
    double sum = 0.0;
    for (size_t c = 0; c < child_labels.size(); ++c)
    {
      for (size_t o = 0; o < outcomes.size(); ++o)
      {
        if (!is_probability(at(p, c, o)))
        {
          throw std::invalid_argument("outcome table " + id + ": entry outside [0,1] under parent '" +
                                      parent_labels[p] + "'");
        }
        sum += at(p, c, o);
      }
    }
    if (!near_one(sum))
    {
      std::ostringstream msg;
      msg << "outcome table " << id << ": slice for parent '" << parent_labels[p] << "' sums to " << sum;
      throw std::invalid_argument(msg.str());
    }
  }
}

std::string to_string(ActionKind kind)
{
  switch (kind)
  {
    case ActionKind::kRefineType:
      return "REFINE-TYPE";
    case ActionKind::kRefineFormation:
      return "REFINE-FORMATION";
    case ActionKind::kSearch:
      return "SEARCH";
    case ActionKind::kTerrainSupport:
      return "TERRAIN-SUPPORT";
    case ActionKind::kClassification:
      return "CLASSIFICATION";
  }
  return "?";
}

ActionKind parse_action_kind(const std::string& text)
{
  for (auto kind : {ActionKind::kRefineType, ActionKind::kRefineFormation, ActionKind::kSearch,
                    ActionKind::kTerrainSupport, ActionKind::kClassification})
  {
    if (to_string(kind) == text)
    {
      return kind;
    }
  }
  throw std::invalid_argument("unknown action kind '" + text + "'");
}

bool ActionTemplate::applies_to(const std::string& model_id) const
{
  return std::find(applicable_to.begin(), applicable_to.end(), model_id) != applicable_to.end();
}

namespace
{
std::vector<ModelNode> parse_models(const Json& doc)
{
  const Json& models = require(doc, "models", "scenario");
  if (!models.is_array() || models.empty())
  {
    throw ScenarioError("models", "must be a non-empty array");
  }
  std::vector<ModelNode> out;
  for (const auto& m : models)
  {
    ModelNode node;
    node.id = require_string(m, "id", "models");
    if (node.id == kNullLabel)
    {
      throw ScenarioError(node.id, "model id is reserved for the null label");
    }
    node.label = m.contains("label") ? require_string(m, "label", node.id) : node.id;
    node.isa_group = m.contains("isa_group") ? require_string(m, "isa_group", node.id) : node.id;
    if (m.contains("prior") && !m.at("prior").is_null())
    {
      double prior = number(m.at("prior"), node.id, "prior");
      if (!is_probability(prior))
      {
        throw ScenarioError(node.id, "prior outside [0,1]");
      }
      node.prior = prior;
    }
    if (m.contains("parts"))
    {
      if (!m.at("parts").is_array())
      {
        throw ScenarioError(node.id, "parts must be an array");
      }
      for (const auto& p : m.at("parts"))
      {
        node.parts.push_back(Part{require_string(p, "child", node.id), require_string(p, "cpt", node.id)});
      }
    }
    if (m.contains("subtypes"))
    {
      node.subtypes = string_list(m.at("subtypes"), node.id, "subtypes");
    }
    out.push_back(std::move(node));
  }
  return out;
}

ConditionalTable parse_cpt(const std::string& id, const Json& t)
{
  ConditionalTable table;
  table.id = id;
  table.parent_labels = string_list(require(t, "parent_labels", id), id, "parent_labels");
  table.child_labels = string_list(require(t, "child_labels", id), id, "child_labels");
  const Json& rows = require(t, "rows", id);
  if (rows.is_object())
  {
    for (const auto& parent : table.parent_labels)
    {
      if (!rows.contains(parent))
      {
        throw ScenarioError(id, "missing row for parent '" + parent + "'");
      }
      std::vector<double> row;
      for (const auto& x : rows.at(parent))
      {
        row.push_back(number(x, id, "row entry"));
      }
      table.rows.push_back(std::move(row));
    }
  }
  else if (rows.is_array())
  {
    for (const auto& r : rows)
    {
      std::vector<double> row;
      for (const auto& x : r)
      {
        row.push_back(number(x, id, "row entry"));
      }
      table.rows.push_back(std::move(row));
    }
  }
  else
  {
    throw ScenarioError(id, "rows must be an array or an object keyed by parent label");
  }
  try
  {
    table.validate();
  }
  catch (const std::invalid_argument& e)
  {
    throw ScenarioError(id, e.what());
  }
  return table;
}

OutcomeTable parse_outcome_table(const std::string& id, const Json& t)
{
  OutcomeTable table;
  table.id = id;
  table.outcomes = string_list(require(t, "outcomes", id), id, "outcomes");
  table.parent_labels = string_list(require(t, "parent_labels", id), id, "parent_labels");
  table.child_labels = string_list(require(t, "child_labels", id), id, "child_labels");
  table.entries.assign(table.outcomes.size() * table.parent_labels.size() * table.child_labels.size(), 0.0);
  const Json& entries = require(t, "entries", id);
  if (!entries.is_object())
  {
    throw ScenarioError(id, "entries must be an object keyed by parent label");
  }
  for (size_t p = 0; p < table.parent_labels.size(); ++p)
  {
    const auto& parent = table.parent_labels[p];
    if (!entries.contains(parent))
    {
      throw ScenarioError(id, "missing slice for parent '" + parent + "'");
    }
    const Json& slice = entries.at(parent);
    for (size_t c = 0; c < table.child_labels.size(); ++c)
    {
      const auto& child = table.child_labels[c];
      if (!slice.contains(child))
      {
        throw ScenarioError(id, "missing entry for (" + child + " | " + parent + ")");
      }
      const Json& probs = slice.at(child);
      if (!probs.is_array() || probs.size() != table.outcomes.size())
      {
        throw ScenarioError(id, "entry (" + child + " | " + parent + ") must list one probability per outcome");
      }
      for (size_t o = 0; o < table.outcomes.size(); ++o)
      {
        table.at(p, c, o) = number(probs[o], id, "entry");
      }
    }
  }
  try
  {
    table.validate();
  }
  catch (const std::invalid_argument& e)
  {
    throw ScenarioError(id, e.what());
  }
  return table;
}

int64_t parse_cost(const Json& v, const std::string& element)
{
  double cost = number(v, element, "cost");
  if (!std::isfinite(cost) || cost < 0.0)
  {
    throw ScenarioError(element, "cost must be a nonnegative duration");
  }
  if (std::floor(cost) != cost)
  {
    throw ScenarioError(element, "cost must be an integral number of milliseconds");
  }
  return static_cast<int64_t>(cost);
}

/// Depth-first cycle search over the part-of relation. Returns the ids on the
/// first cycle found, closing with the repeated id.
std::vector<std::string> find_cycle(const std::vector<std::string>& ids,
                                    const std::function<std::vector<std::string>(const std::string&)>& next)
{
  std::map<std::string, int> color;
  std::vector<std::string> stack;
  std::vector<std::string> cycle;
  std::function<bool(const std::string&)> visit = [&](const std::string& id) {
    color[id] = 1;
    stack.push_back(id);
    for (const auto& child : next(id))
    {
      if (color[child] == 1)
      {
        auto it = std::find(stack.begin(), stack.end(), child);
        cycle.assign(it, stack.end());
        cycle.push_back(child);
        return true;
      }
      if (color[child] == 0 && visit(child))
      {
        return true;
      }
    }
    stack.pop_back();
    color[id] = 2;
    return false;
  };
  for (const auto& id : ids)
  {
    if (color[id] == 0 && visit(id))
    {
      return cycle;
    }
  }
  return {};
}

}  // namespace

ModelBase ModelBase::from_json(const Json& doc)
{
  if (!doc.is_object())
  {
    throw ScenarioError("scenario", "document must be a JSON object");
  }
  ModelBase mb;
  mb.nodes_ = parse_models(doc);
  for (size_t i = 0; i < mb.nodes_.size(); ++i)
  {
    if (!mb.node_index_.emplace(mb.nodes_[i].id, i).second)
    {
      throw ScenarioError(mb.nodes_[i].id, "duplicate model id");
    }
  }

  const Json& cpts = require(doc, "cpts", "scenario");
  if (!cpts.is_object())
  {
    throw ScenarioError("cpts", "must be an object keyed by table id");
  }
  for (const auto& [id, t] : cpts.items())
  {
    mb.cpts_.emplace(id, parse_cpt(id, t));
  }
  const Json& outcome_tables = require(doc, "outcome_tables", "scenario");
  if (!outcome_tables.is_object())
  {
    throw ScenarioError("outcome_tables", "must be an object keyed by table id");
  }
  for (const auto& [id, t] : outcome_tables.items())
  {
    mb.outcome_tables_.emplace(id, parse_outcome_table(id, t));
  }

  // Dangling references and the part-of DAG.
  std::vector<std::string> ids;
  for (const auto& n : mb.nodes_)
  {
    ids.push_back(n.id);
    for (const auto& part : n.parts)
    {
      if (!mb.has_node(part.child))
      {
        throw ScenarioError(n.id, "part '" + part.child + "' is not a model");
      }
      if (!mb.cpts_.count(part.cpt))
      {
        throw ScenarioError(n.id, "part table '" + part.cpt + "' does not exist");
      }
    }
    for (const auto& sub : n.subtypes)
    {
      if (!mb.has_node(sub))
      {
        throw ScenarioError(n.id, "subtype '" + sub + "' is not a model");
      }
    }
  }
  auto cycle = find_cycle(ids, [&](const std::string& id) {
    std::vector<std::string> out;
    for (const auto& part : mb.node(id).parts)
    {
      out.push_back(part.child);
    }
    return out;
  });
  if (!cycle.empty())
  {
    throw ScenarioError(cycle.front(), "part-of cycle " + join(cycle, " -> "));
  }

  // Confusion groups and their hypothesis sets.
  std::vector<std::string> group_ids;
  std::map<std::string, std::vector<std::string>> members;
  for (const auto& n : mb.nodes_)
  {
    if (!members.count(n.isa_group))
    {
      group_ids.push_back(n.isa_group);
    }
    members[n.isa_group].push_back(n.id);
  }
  for (const auto& gid : group_ids)
  {
    const auto& ms = members[gid];
    size_t explicit_count = 0;
    for (const auto& m : ms)
    {
      explicit_count += mb.node(m).prior.has_value() ? 1 : 0;
    }
    std::vector<double> priors;
    if (explicit_count == ms.size())
    {
      double sum = 0.0;
      for (const auto& m : ms)
      {
        priors.push_back(*mb.node(m).prior);
        sum += priors.back();
      }
      if (sum > 1.0 + kProbabilityTolerance)
      {
        throw ScenarioError(gid, "member priors sum to more than 1");
      }
      priors.push_back(std::max(0.0, 1.0 - sum));
    }
    else if (explicit_count == 0)
    {
      for (size_t i = 0; i < ms.size(); ++i)
      {
        priors.push_back(0.5 / static_cast<double>(ms.size()));
      }
      priors.push_back(0.5);
    }
    else
    {
      throw ScenarioError(gid, "group mixes explicit and default priors");
    }
    auto labels = ms;
    labels.push_back(kNullLabel);
    IsaGroup group;
    group.id = gid;
    group.members = ms;
    try
    {
      group.hypotheses = HypothesisSet(labels, priors, std::string(kNullLabel));
    }
    catch (const std::invalid_argument& e)
    {
      throw ScenarioError(gid, e.what());
    }
    mb.groups_.emplace(gid, std::move(group));
  }

  // Group-level part-of links: one table per ordered pair of groups.
  for (const auto& n : mb.nodes_)
  {
    for (const auto& part : n.parts)
    {
      const std::string& pg = n.isa_group;
      const std::string& cg = mb.node(part.child).isa_group;
      if (pg == cg)
      {
        throw ScenarioError(n.id, "part '" + part.child + "' is in the same confusion group");
      }
      auto key = std::make_pair(pg, cg);
      auto [it, inserted] = mb.link_cpts_.emplace(key, part.cpt);
      if (!inserted && it->second != part.cpt)
      {
        throw ScenarioError(n.id, "groups " + pg + " -> " + cg + " linked by both '" + it->second + "' and '" +
                                      part.cpt + "'");
      }
      if (inserted)
      {
        const auto& table = mb.cpts_.at(part.cpt);
        if (table.parent_labels != mb.groups_.at(pg).hypotheses.labels() ||
            table.child_labels != mb.groups_.at(cg).hypotheses.labels())
        {
          throw ScenarioError(part.cpt, "labels do not match groups " + pg + " -> " + cg);
        }
        mb.groups_.at(pg).child_groups.push_back(cg);
        mb.groups_.at(cg).parent_groups.push_back(pg);
      }
    }
  }
  auto group_cycle = find_cycle(group_ids, [&](const std::string& g) { return mb.groups_.at(g).child_groups; });
  if (!group_cycle.empty())
  {
    throw ScenarioError(group_cycle.front(), "confusion-group cycle " + join(group_cycle, " -> "));
  }
  {
    std::map<std::string, size_t> indegree;
    for (const auto& g : group_ids)
    {
      indegree[g] = mb.groups_.at(g).parent_groups.size();
    }
    std::vector<std::string> ready;
    for (const auto& g : group_ids)
    {
      if (indegree[g] == 0)
      {
        ready.push_back(g);
      }
    }
    while (!ready.empty())
    {
      std::string g = ready.front();
      ready.erase(ready.begin());
      mb.group_order_.push_back(g);
      for (const auto& c : mb.groups_.at(g).child_groups)
      {
        if (--indegree[c] == 0)
        {
          ready.push_back(c);
        }
      }
    }
  }

  // Action templates.
  const Json& actions = require(doc, "actions", "scenario");
  if (!actions.is_array())
  {
    throw ScenarioError("actions", "must be an array");
  }
  std::set<std::string> template_ids;
  for (const auto& a : actions)
  {
    ActionTemplate t;
    t.id = require_string(a, "id", "actions");
    if (!template_ids.insert(t.id).second)
    {
      throw ScenarioError(t.id, "duplicate action template id");
    }
    try
    {
      t.kind = parse_action_kind(require_string(a, "kind", t.id));
    }
    catch (const std::invalid_argument& e)
    {
      throw ScenarioError(t.id, e.what());
    }
    t.applicable_to = string_list(require(a, "applicable_to", t.id), t.id, "applicable_to");
    t.cost = parse_cost(require(a, "cost", t.id), t.id);
    t.outcome_table = require_string(a, "outcome_table", t.id);
    t.repeatable = a.value("repeatable", false);
    t.bundle = a.value("bundle", false);
    if (a.contains("refine_to"))
    {
      t.refine_to = require_string(a, "refine_to", t.id);
    }
    if (a.contains("match_outcome"))
    {
      t.match_outcome = require_string(a, "match_outcome", t.id);
    }
    if (a.contains("min_confidence"))
    {
      t.min_confidence = number(a.at("min_confidence"), t.id, "min_confidence");
      if (!is_probability(t.min_confidence))
      {
        throw ScenarioError(t.id, "min_confidence outside [0,1]");
      }
    }
    if (!mb.outcome_tables_.count(t.outcome_table))
    {
      throw ScenarioError(t.id, "outcome table '" + t.outcome_table + "' does not exist");
    }
    if (t.applicable_to.empty())
    {
      throw ScenarioError(t.id, "applicable_to is empty");
    }
    for (const auto& m : t.applicable_to)
    {
      if (!mb.has_node(m))
      {
        throw ScenarioError(t.id, "applicable model '" + m + "' does not exist");
      }
      const auto& g = mb.node(m).isa_group;
      if (t.group.empty())
      {
        t.group = g;
      }
      else if (t.group != g)
      {
        throw ScenarioError(t.id, "applicable models span more than one confusion group");
      }
    }
    const auto& table = mb.outcome_tables_.at(t.outcome_table);
    const IsaGroup& target = mb.groups_.at(t.group);
    const IsaGroup& child_side = t.refine_to ? mb.group(*t.refine_to) : target;
    if (t.refine_to)
    {
      if (t.kind != ActionKind::kRefineType)
      {
        throw ScenarioError(t.id, "refine_to is only meaningful for REFINE-TYPE");
      }
      try
      {
        (void)mb.refinement(t.group, *t.refine_to);
      }
      catch (const ScenarioError& e)
      {
        throw ScenarioError(t.id, e.what());
      }
    }
    if (table.child_labels != child_side.hypotheses.labels())
    {
      throw ScenarioError(t.id, "outcome table child labels do not match group " + child_side.id);
    }
    auto expected_parents = [&](const IsaGroup& g) {
      if (g.parent_groups.empty())
      {
        return g.hypotheses.labels();
      }
      return mb.groups_.at(g.parent_groups.front()).hypotheses.labels();
    };
    for (const IsaGroup* g : {&target, &child_side})
    {
      for (const auto& pg : g->parent_groups)
      {
        if (mb.groups_.at(pg).hypotheses.labels() != table.parent_labels)
        {
          throw ScenarioError(t.id, "outcome table parent labels do not match parent group " + pg);
        }
      }
      if (table.parent_labels != expected_parents(*g))
      {
        throw ScenarioError(t.id, "outcome table parent labels do not match the hierarchy above " + g->id);
      }
    }
    if (t.match_outcome)
    {
      if (t.kind != ActionKind::kSearch)
      {
        throw ScenarioError(t.id, "match_outcome is only meaningful for SEARCH");
      }
      if (!table.outcome_index(*t.match_outcome))
      {
        throw ScenarioError(t.id, "match outcome '" + *t.match_outcome + "' is not an outcome of the table");
      }
      if (target.parent_groups.empty())
      {
        throw ScenarioError(t.id, "SEARCH with a match outcome needs a parent group above " + target.id);
      }
    }
    mb.templates_.push_back(std::move(t));
  }

  // Goal values.
  const Json& goals = require(doc, "goal_values", "scenario");
  if (!goals.is_object() || goals.empty())
  {
    throw ScenarioError("goal_values", "must be a non-empty object");
  }
  bool any_positive = false;
  bool any_model = false;
  for (const auto& [label, v] : goals.items())
  {
    double value = number(v, "goal_values", "goal value");
    if (!std::isfinite(value) || value < 0.0)
    {
      throw ScenarioError(label, "goal value must be nonnegative");
    }
    if (label != kNullLabel && !mb.has_node(label))
    {
      throw ScenarioError(label, "goal label is not a model");
    }
    any_model = any_model || label != kNullLabel;
    any_positive = any_positive || value > 0.0;
    mb.goal_values_[label] = value;
  }
  if (!any_positive)
  {
    throw ScenarioError("goal_values", "at least one goal value must be positive");
  }
  if (!any_model)
  {
    throw ScenarioError("goal_values", "no goal model named");
  }
  return mb;
}

const ModelNode& ModelBase::node(const std::string& id) const
{
  auto it = node_index_.find(id);
  if (it == node_index_.end())
  {
    throw std::out_of_range("unknown model node '" + id + "'");
  }
  return nodes_[it->second];
}

std::vector<ActionTemplate> ModelBase::templates_for(const std::string& id) const
{
  (void)node(id);
  std::vector<ActionTemplate> out;
  for (const auto& t : templates_)
  {
    if (t.applies_to(id))
    {
      out.push_back(t);
    }
  }
  return out;
}

const ActionTemplate& ModelBase::action_template(const std::string& id) const
{
  for (const auto& t : templates_)
  {
    if (t.id == id)
    {
      return t;
    }
  }
  throw std::out_of_range("unknown action template '" + id + "'");
}

const IsaGroup& ModelBase::group(const std::string& id) const
{
  auto it = groups_.find(id);
  if (it == groups_.end())
  {
    throw std::out_of_range("unknown confusion group '" + id + "'");
  }
  return it->second;
}

const ConditionalTable& ModelBase::cpt(const std::string& id) const
{
  auto it = cpts_.find(id);
  if (it == cpts_.end())
  {
    throw std::out_of_range("unknown conditional table '" + id + "'");
  }
  return it->second;
}

const OutcomeTable& ModelBase::outcome_table(const std::string& id) const
{
  auto it = outcome_tables_.find(id);
  if (it == outcome_tables_.end())
  {
    throw std::out_of_range("unknown outcome table '" + id + "'");
  }
  return it->second;
}

const ConditionalTable* ModelBase::link_table(const std::string& parent_group, const std::string& child_group) const
{
  auto it = link_cpts_.find({parent_group, child_group});
  if (it == link_cpts_.end())
  {
    return nullptr;
  }
  return &cpts_.at(it->second);
}

ModelBase::Refinement ModelBase::refinement(const std::string& coarse, const std::string& fine) const
{
  auto cit = groups_.find(coarse);
  auto fit = groups_.find(fine);
  if (cit == groups_.end() || fit == groups_.end())
  {
    throw ScenarioError(cit == groups_.end() ? coarse : fine, "unknown confusion group");
  }
  const HypothesisSet& ch = cit->second.hypotheses;
  const HypothesisSet& fh = fit->second.hypotheses;
  Refinement r;
  r.coarse_index.assign(fh.size(), 0);
  r.split.assign(fh.size(), 0.0);
  std::vector<double> mass(ch.size(), 0.0);
  std::vector<size_t> count(ch.size(), 0);
  for (size_t f = 0; f < fh.size(); ++f)
  {
    const auto& label = fh.labels()[f];
    std::optional<size_t> parent;
    if (fh.null_index() == f)
    {
      parent = ch.null_index();
    }
    else
    {
      for (const auto& m : cit->second.members)
      {
        const auto& subs = node(m).subtypes;
        if (std::find(subs.begin(), subs.end(), label) != subs.end())
        {
          if (parent)
          {
            throw ScenarioError(label, "refines more than one label of " + coarse);
          }
          parent = ch.index_of(m);
        }
      }
    }
    if (!parent)
    {
      throw ScenarioError(label, "is not a subtype of any label of " + coarse);
    }
    r.coarse_index[f] = *parent;
    mass[*parent] += fh.priors()[f];
    count[*parent] += 1;
  }
  for (size_t c = 0; c < ch.size(); ++c)
  {
    if (count[c] == 0)
    {
      throw ScenarioError(ch.labels()[c], "has no refinement in group " + fine);
    }
  }
  for (size_t f = 0; f < fh.size(); ++f)
  {
    size_t c = r.coarse_index[f];
    r.split[f] = mass[c] > 0.0 ? fh.priors()[f] / mass[c] : 1.0 / static_cast<double>(count[c]);
  }
  return r;
}

bool ModelBase::is_goal_group(const std::string& group_id) const
{
  for (const auto& m : group(group_id).members)
  {
    if (goal_values_.count(m))
    {
      return true;
    }
  }
  return false;
}

std::vector<double> ModelBase::goal_values_for(const std::string& group_id) const
{
  const auto& labels = group(group_id).hypotheses.labels();
  std::vector<double> out(labels.size(), 0.0);
  if (!is_goal_group(group_id))
  {
    return out;
  }
  for (size_t i = 0; i < labels.size(); ++i)
  {
    auto it = goal_values_.find(labels[i]);
    if (it != goal_values_.end())
    {
      out[i] = it->second;
    }
  }
  return out;
}

std::vector<std::string> ModelBase::topological_order() const
{
  std::map<std::string, size_t> indegree;
  for (const auto& n : nodes_)
  {
    indegree.emplace(n.id, 0);
  }
  for (const auto& n : nodes_)
  {
    for (const auto& p : n.parts)
    {
      indegree[p.child] += 1;
    }
  }
  std::vector<std::string> order;
  std::vector<std::string> ready;
  for (const auto& n : nodes_)
  {
    if (indegree[n.id] == 0)
    {
      ready.push_back(n.id);
    }
  }
  while (!ready.empty())
  {
    std::string id = ready.front();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const auto& p : node(id).parts)
    {
      if (--indegree[p.child] == 0)
      {
        ready.push_back(p.child);
      }
    }
  }
  return order;
}

}  // namespace percept
