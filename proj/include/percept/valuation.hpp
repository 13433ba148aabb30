#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "percept/bayes_net.hpp"
#include "percept/model_base.hpp"

namespace percept
{
enum class ValueMode
{
  // |p(P | H_k, A) - p(P)| with the outcome marginalized out.
  kPaperLiteral,
  // Expected |p(P | H_k, outcome) - p(P)| over the action's outcomes.
  kExpectedAbsChange,
};

std::string to_string(ValueMode mode);
ValueMode parse_value_mode(const std::string& text);

class ValuationError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct ActionInstance
{
  std::string id;
  ActionKind kind = ActionKind::kSearch;
  std::string template_id;
  // Bundled actions act on several nodes; the first is the nominal target.
  std::vector<NodeId> targets;
  int64_t cost = 0;
  double value = 0.0;
  std::string outcome_table;

  NodeId target_node() const { return targets.front(); }
};

/// The level above a hypothesis node as seen by valuation: the belief and the
/// worth of each parent label, plus the part-of table linking the two levels.
struct ParentContext
{
  std::string source;
  std::vector<std::string> labels;
  std::vector<double> belief;
  std::vector<double> value;
  // p(child label | parent label); null when the node is valued against its
  // own labels (top of the hierarchy).
  const ConditionalTable* link = nullptr;
};

struct ValuationStats
{
  // One count per (child hypothesis, parent context) posterior evaluation.
  uint64_t posterior_evaluations = 0;
};

/// p(Parent = parent_label | Child = child_label, Action) by Bayes' rule with
/// p(Child, Action | Parent) taken as the table's outcome-summed entry.
/// Throws ValuationError when p(Child, Action) is zero.
double posterior_given_action(const OutcomeTable& table, size_t child_label, size_t parent_label,
                              std::span<const double> parent_belief);
std::vector<double> posterior_given_action(const OutcomeTable& table, size_t child_label,
                                           std::span<const double> parent_belief);

/// V(H_k, A) against one parent context. Child labels with zero probability
/// under the context contribute nothing.
double value_of_action_at_hypothesis(const OutcomeTable& table, size_t child_label, const ParentContext& parents,
                                     ValueMode mode, ValuationStats* stats = nullptr);

/// V(N, A): sum of V(H_k, A) over the table's child labels and every parent
/// context of the node.
double value_of_action_at_node(const OutcomeTable& table, std::span<const ParentContext> parents, ValueMode mode,
                               ValuationStats* stats = nullptr);

/// Values candidate actions against one snapshot of the net. Parent contexts
/// and label values are computed once per node and reused.
class Valuator
{
public:
  Valuator(const BayesNet& net, const ModelBase& models, ValueMode mode);

  /// Confusion group of an instantiated node, from its model refs.
  std::string group_of(NodeId node) const;

  /// Instantiated parents if any; otherwise the a priori parent groups with a
  /// belief predicted from this node; otherwise the node's own labels.
  const std::vector<ParentContext>& parent_contexts(NodeId node);

  /// Worth of resolving each of the node's labels, seeded by goal values.
  const std::vector<double>& label_values(NodeId node);

  /// Worth of each label of an uninstantiated group.
  const std::vector<double>& group_values(const std::string& group);

  double value(const ActionInstance& action);

  const ValuationStats& stats() const { return stats_; }

private:
  const BayesNet& net_;
  const ModelBase& models_;
  ValueMode mode_;
  ValuationStats stats_;
  std::map<NodeId, std::vector<ParentContext>> contexts_;
  std::map<NodeId, std::vector<double>> label_values_;
  std::map<std::string, std::vector<double>> group_values_;
};

/// Returns the candidates with their value filled in.
std::vector<ActionInstance> value_all_candidates(const BayesNet& net, const ModelBase& models,
                                                 std::vector<ActionInstance> candidates, ValueMode mode,
                                                 ValuationStats* stats = nullptr);

}  // namespace percept
