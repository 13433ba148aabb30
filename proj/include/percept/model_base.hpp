#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace percept
{
using Json = nlohmann::ordered_json;

/// Raised for any malformed or inconsistent scenario content. element() names
/// the offending model, table, or section.
class ScenarioError : public std::runtime_error
{
public:
  ScenarioError(std::string element, const std::string& message)
      : std::runtime_error(element + ": " + message), element_(std::move(element))
  {
  }

  const std::string& element() const { return element_; }

private:
  std::string element_;
};

inline constexpr double kProbabilityTolerance = 1e-9;

/// Label reserved for the "none of the above" alternative of every confusion
/// group.
inline constexpr const char* kNullLabel = "other";

/// An ordered set of mutually exclusive, exhaustive hypothesis labels with a
/// prior over them. Construction validates distinct labels and a prior that
/// sums to one.
class HypothesisSet
{
public:
  HypothesisSet() = default;
  HypothesisSet(std::vector<std::string> labels, std::vector<double> priors,
                std::optional<std::string> null_label = std::nullopt);

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<double>& priors() const { return priors_; }
  size_t size() const { return labels_.size(); }
  std::optional<size_t> index_of(const std::string& label) const;
  std::optional<size_t> null_index() const { return null_index_; }

  bool operator==(const HypothesisSet&) const = default;

private:
  std::vector<std::string> labels_;
  std::vector<double> priors_;
  std::optional<size_t> null_index_;
};

/// p(child label | parent label), one row per parent label.
struct ConditionalTable
{
  std::string id;
  std::vector<std::string> parent_labels;
  std::vector<std::string> child_labels;
  std::vector<std::vector<double>> rows;

  double at(size_t parent, size_t child) const { return rows[parent][child]; }
  /// Throws std::invalid_argument unless every row is a distribution.
  void validate() const;

  bool operator==(const ConditionalTable&) const = default;
};

/// The stored joint p(child label, outcome | parent label) of one action type.
struct OutcomeTable
{
  std::string id;
  std::vector<std::string> outcomes;
  std::vector<std::string> parent_labels;
  std::vector<std::string> child_labels;
  // Flattened [parent][child][outcome].
  std::vector<double> entries;

  double at(size_t parent, size_t child, size_t outcome) const
  {
    return entries[(parent * child_labels.size() + child) * outcomes.size() + outcome];
  }
  double& at(size_t parent, size_t child, size_t outcome)
  {
    return entries[(parent * child_labels.size() + child) * outcomes.size() + outcome];
  }
  /// Sum over outcomes: p(child | parent) as seen through this action.
  double child_marginal(size_t parent, size_t child) const;
  std::optional<size_t> outcome_index(const std::string& outcome) const;
  void validate() const;

  bool operator==(const OutcomeTable&) const = default;
};

enum class ActionKind
{
  kRefineType,
  kRefineFormation,
  kSearch,
  kTerrainSupport,
  kClassification,
};

std::string to_string(ActionKind kind);
ActionKind parse_action_kind(const std::string& text);

struct ActionTemplate
{
  std::string id;
  ActionKind kind = ActionKind::kSearch;
  std::vector<std::string> applicable_to;
  int64_t cost = 0;
  std::string outcome_table;
  bool repeatable = false;
  // One instance over every eligible node instead of one per node.
  bool bundle = false;
  // REFINE-TYPE only: the finer confusion group the target is replaced by.
  std::optional<std::string> refine_to;
  // SEARCH only: the outcome that proposes parent hypotheses.
  std::optional<std::string> match_outcome;
  // Eligible only when the target's best non-null label has at least this
  // belief.
  double min_confidence = 0.0;
  // Derived at load: the confusion group of applicable_to.
  std::string group;

  bool applies_to(const std::string& model_id) const;
  bool operator==(const ActionTemplate&) const = default;
};

struct Part
{
  std::string child;
  std::string cpt;
  bool operator==(const Part&) const = default;
};

struct ModelNode
{
  std::string id;
  std::string label;
  std::vector<Part> parts;
  std::string isa_group;
  std::optional<double> prior;
  // Finer model nodes this one is refined into (is-a children).
  std::vector<std::string> subtypes;

  bool operator==(const ModelNode&) const = default;
};

/// A confusion group: the model nodes that share one hypothesis node, plus the
/// null label.
struct IsaGroup
{
  std::string id;
  std::vector<std::string> members;
  HypothesisSet hypotheses;
  std::vector<std::string> parent_groups;
  std::vector<std::string> child_groups;

  bool operator==(const IsaGroup&) const = default;
};

/// Immutable a priori model space.
class ModelBase
{
public:
  static ModelBase from_json(const Json& doc);

  const std::vector<ModelNode>& nodes() const { return nodes_; }
  const ModelNode& node(const std::string& id) const;
  bool has_node(const std::string& id) const { return node_index_.count(id) != 0; }

  const std::vector<Part>& parts_of(const std::string& id) const { return node(id).parts; }
  std::vector<ActionTemplate> templates_for(const std::string& id) const;
  const std::vector<ActionTemplate>& templates() const { return templates_; }
  const ActionTemplate& action_template(const std::string& id) const;

  const std::map<std::string, IsaGroup>& groups() const { return groups_; }
  const IsaGroup& group(const std::string& id) const;
  const IsaGroup& group_of(const std::string& model_id) const { return group(node(model_id).isa_group); }
  /// Ordered list of groups, parents before children.
  const std::vector<std::string>& group_order() const { return group_order_; }

  const ConditionalTable& cpt(const std::string& id) const;
  const OutcomeTable& outcome_table(const std::string& id) const;
  /// Table for an instantiated part-of link between two confusion groups, or
  /// nullptr when the model has no such relation.
  const ConditionalTable* link_table(const std::string& parent_group,
                                     const std::string& child_group) const;

  /// For a refinement from `coarse` to `fine`, the coarse label index each
  /// fine label maps to, and the share of the coarse prior it receives.
  struct Refinement
  {
    std::vector<size_t> coarse_index;
    std::vector<double> split;
  };
  Refinement refinement(const std::string& coarse, const std::string& fine) const;

  const std::map<std::string, double>& goal_values() const { return goal_values_; }
  bool is_goal_group(const std::string& group_id) const;
  /// Goal value of each label of a goal group (zero where unassigned).
  std::vector<double> goal_values_for(const std::string& group_id) const;

  /// Model node ids ordered so that every whole precedes its parts.
  std::vector<std::string> topological_order() const;

  bool operator==(const ModelBase&) const = default;

private:
  std::vector<ModelNode> nodes_;
  std::map<std::string, size_t> node_index_;
  std::map<std::string, IsaGroup> groups_;
  std::vector<std::string> group_order_;
  std::map<std::string, ConditionalTable> cpts_;
  std::map<std::string, OutcomeTable> outcome_tables_;
  std::map<std::pair<std::string, std::string>, std::string> link_cpts_;
  std::vector<ActionTemplate> templates_;
  std::map<std::string, double> goal_values_;
};

}  // namespace percept
