#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "percept/model_base.hpp"

namespace percept
{
struct NodeId
{
  uint32_t value = 0;
  auto operator<=>(const NodeId&) const = default;
};

/// Printable form, e.g. "B12".
std::string to_string(NodeId id);
NodeId parse_node_id(const std::string& text);

/// Evidence whose combination has probability zero.
class InconsistentEvidence : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A link that would break single connectedness. witness() is the existing
/// undirected path between the two endpoints.
class PolytreeViolation : public std::invalid_argument
{
public:
  PolytreeViolation(const std::string& message, std::vector<NodeId> witness)
      : std::invalid_argument(message), witness_(std::move(witness))
  {
  }
  const std::vector<NodeId>& witness() const { return witness_; }

private:
  std::vector<NodeId> witness_;
};

struct BayesNode
{
  NodeId id;
  HypothesisSet hypotheses;
  // Hypothesis label -> model node id; the null label has no entry.
  std::map<std::string, std::string> model_refs;
  std::vector<double> belief;
  std::vector<std::vector<double>> lambda_evidence;
};

struct NetEdge
{
  NodeId parent;
  NodeId child;
  std::string table;
};

/// Dynamically instantiated, singly connected Bayes net with exact
/// propagation.
///
/// Each node carries a distribution over its own mutually exclusive labels.
/// Roots use their hypothesis-set prior; a node with parents u_1..u_m uses
///   p(x | u_1..u_m) proportional to prod_j t_j(x | u_j),
/// where t_j is the table on the link from the j-th parent. With one parent
/// this is the link table itself.
///
/// propagate() runs two deterministic sweeps per connected component, leaves
/// to root and back, rooted at the component's smallest node id. Every
/// message is renormalized after each hop.
class BayesNet
{
public:
  NodeId instantiate_node(HypothesisSet hypotheses, std::map<std::string, std::string> model_refs = {});

  /// Throws std::out_of_range for unknown nodes, std::invalid_argument on a
  /// dimension mismatch, and PolytreeViolation when the endpoints are already
  /// connected.
  NetEdge link(NodeId parent, NodeId child, const ConditionalTable& table);

  void attach_evidence(NodeId node, std::vector<double> likelihood);

  void propagate();

  const std::vector<double>& belief(NodeId node) const { return get(node).node.belief; }
  const BayesNode& node(NodeId node) const { return get(node).node; }
  bool contains(NodeId node) const { return nodes_.count(node) != 0; }
  size_t size() const { return nodes_.size(); }

  std::vector<NodeId> node_ids() const;
  const std::vector<NodeId>& parents(NodeId node) const { return get(node).parents; }
  const std::vector<NodeId>& children(NodeId node) const { return get(node).children; }
  const ConditionalTable& link_table(NodeId parent, NodeId child) const;
  std::vector<NetEdge> edges() const;

  /// Swap a node for one over a different label set. Each new label maps to
  /// one old label (old_index); attached evidence is carried over through
  /// that map and existing links are rebuilt with the supplied tables.
  struct Replacement
  {
    HypothesisSet hypotheses;
    std::map<std::string, std::string> model_refs;
    std::vector<size_t> old_index;
    std::function<ConditionalTable(NodeId parent)> parent_table;
    std::function<ConditionalTable(NodeId child)> child_table;
  };
  NodeId replace_node(NodeId old, const Replacement& replacement);

  /// True iff the skeleton is a forest and every link is directed.
  bool is_singly_connected() const;

  /// {nodes:[{id, labels, belief}], edges:[{parent, child}]}
  Json snapshot() const;

private:
  struct NodeState
  {
    BayesNode node;
    std::vector<NodeId> parents;
    std::vector<NodeId> children;
    // p(x | parent configuration), flattened [config][x], parents in link
    // order. Empty for roots.
    std::vector<double> cpt;
  };

  NodeState& get(NodeId node);
  const NodeState& get(NodeId node) const;
  void rebuild_cpt(NodeState& state);
  std::vector<NodeId> undirected_path(NodeId from, NodeId to) const;
  std::vector<double> local_evidence(const NodeState& state) const;
  std::vector<double> prior_message(const NodeState& state) const;
  std::vector<double> message(NodeId from, NodeId to) const;

  uint32_t next_id_ = 1;
  std::map<NodeId, NodeState> nodes_;
  std::map<std::pair<NodeId, NodeId>, ConditionalTable> tables_;
  // Keyed by (parent, child): pi flows down, lambda flows up; both are
  // distributions over the parent's labels.
  std::map<std::pair<NodeId, NodeId>, std::vector<double>> pi_;
  std::map<std::pair<NodeId, NodeId>, std::vector<double>> lambda_;
};

}  // namespace percept
