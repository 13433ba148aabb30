#include "percept/bayes_net.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

namespace percept
{
std::string to_string(NodeId id) { return "B" + std::to_string(id.value); }

NodeId parse_node_id(const std::string& text)
{
  if (text.size() < 2 || text[0] != 'B')
  {
    throw std::invalid_argument("bad node id '" + text + "'");
  }
  size_t used = 0;
  unsigned long v = std::stoul(text.substr(1), &used);
  if (used != text.size() - 1)
  {
    throw std::invalid_argument("bad node id '" + text + "'");
  }
  return NodeId{static_cast<uint32_t>(v)};
}

namespace
{
void normalize(std::vector<double>& v, const std::string& where)
{
  double sum = 0.0;
  for (double x : v)
  {
    sum += x;
  }
  if (!(sum > 0.0) || !std::isfinite(sum))
  {
    throw InconsistentEvidence("evidence has zero probability at " + where);
  }
  for (double& x : v)
  {
    x /= sum;
  }
}

std::string path_text(const std::vector<NodeId>& path)
{
  std::string out;
  for (size_t i = 0; i < path.size(); ++i)
  {
    out += (i ? "-" : "") + to_string(path[i]);
  }
  return out;
}
}  // namespace

BayesNet::NodeState& BayesNet::get(NodeId node)
{
  auto it = nodes_.find(node);
  if (it == nodes_.end())
  {
    throw std::out_of_range("unknown Bayes node " + to_string(node));
  }
  return it->second;
}

const BayesNet::NodeState& BayesNet::get(NodeId node) const
{
  auto it = nodes_.find(node);
  if (it == nodes_.end())
  {
    throw std::out_of_range("unknown Bayes node " + to_string(node));
  }
  return it->second;
}

NodeId BayesNet::instantiate_node(HypothesisSet hypotheses, std::map<std::string, std::string> model_refs)
{
  NodeId id{next_id_++};
  NodeState state;
  state.node.id = id;
  state.node.belief = hypotheses.priors();
  state.node.hypotheses = std::move(hypotheses);
  state.node.model_refs = std::move(model_refs);
  nodes_.emplace(id, std::move(state));
  return id;
}

std::vector<NodeId> BayesNet::undirected_path(NodeId from, NodeId to) const
{
  std::map<NodeId, NodeId> came_from;
  std::deque<NodeId> queue{from};
  came_from[from] = from;
  while (!queue.empty())
  {
    NodeId cur = queue.front();
    queue.pop_front();
    if (cur == to)
    {
      std::vector<NodeId> path{to};
      while (path.back() != from)
      {
        path.push_back(came_from.at(path.back()));
      }
      std::reverse(path.begin(), path.end());
      return path;
    }
    const NodeState& s = get(cur);
    for (const auto* list : {&s.parents, &s.children})
    {
      for (NodeId next : *list)
      {
        if (!came_from.count(next))
        {
          came_from[next] = cur;
          queue.push_back(next);
        }
      }
    }
  }
  return {};
}

void BayesNet::rebuild_cpt(NodeState& state)
{
  state.cpt.clear();
  if (state.parents.empty())
  {
    return;
  }
  const size_t nx = state.node.hypotheses.size();
  std::vector<size_t> radix;
  size_t configs = 1;
  for (NodeId p : state.parents)
  {
    radix.push_back(get(p).node.hypotheses.size());
    configs *= radix.back();
  }
  state.cpt.assign(configs * nx, 0.0);
  std::vector<size_t> u(radix.size(), 0);
  for (size_t cfg = 0; cfg < configs; ++cfg)
  {
    double z = 0.0;
    for (size_t x = 0; x < nx; ++x)
    {
      double prod = 1.0;
      for (size_t j = 0; j < radix.size(); ++j)
      {
        prod *= tables_.at({state.parents[j], state.node.id}).at(u[j], x);
      }
      state.cpt[cfg * nx + x] = prod;
      z += prod;
    }
    if (!(z > 0.0))
    {
      throw std::invalid_argument("link tables into " + to_string(state.node.id) +
                                  " have no common support under some parent configuration");
    }
    for (size_t x = 0; x < nx; ++x)
    {
      state.cpt[cfg * nx + x] /= z;
    }
    for (size_t j = radix.size(); j-- > 0;)
    {
      if (++u[j] < radix[j])
      {
        break;
      }
      u[j] = 0;
    }
  }
}

NetEdge BayesNet::link(NodeId parent, NodeId child, const ConditionalTable& table)
{
  NodeState& ps = get(parent);
  NodeState& cs = get(child);
  if (parent == child)
  {
    throw PolytreeViolation("cannot link " + to_string(parent) + " to itself", {parent});
  }
  if (table.parent_labels != ps.node.hypotheses.labels() || table.child_labels != cs.node.hypotheses.labels())
  {
    throw std::invalid_argument("table '" + table.id + "' does not match the labels of " + to_string(parent) +
                                " -> " + to_string(child));
  }
  table.validate();
  auto existing = undirected_path(parent, child);
  if (!existing.empty())
  {
    throw PolytreeViolation("link " + to_string(parent) + " -> " + to_string(child) +
                                " would add a second path; existing path " + path_text(existing),
                            existing);
  }
  tables_[{parent, child}] = table;
  ps.children.push_back(child);
  cs.parents.push_back(parent);
  try
  {
    rebuild_cpt(cs);
  }
  catch (...)
  {
    tables_.erase({parent, child});
    ps.children.pop_back();
    cs.parents.pop_back();
    rebuild_cpt(cs);
    throw;
  }
  return NetEdge{parent, child, table.id};
}

void BayesNet::attach_evidence(NodeId node, std::vector<double> likelihood)
{
  NodeState& s = get(node);
  if (likelihood.size() != s.node.hypotheses.size())
  {
    throw std::invalid_argument("likelihood for " + to_string(node) + " has " + std::to_string(likelihood.size()) +
                                " entries, node has " + std::to_string(s.node.hypotheses.size()) + " labels");
  }
  bool any_positive = false;
  for (double x : likelihood)
  {
    if (!std::isfinite(x) || x < 0.0)
    {
      throw std::invalid_argument("likelihood for " + to_string(node) + " has a negative or non-finite entry");
    }
    any_positive = any_positive || x > 0.0;
  }
  if (!any_positive)
  {
    throw InconsistentEvidence("all-zero likelihood attached to " + to_string(node));
  }
  auto combined = local_evidence(s);
  bool still_possible = false;
  for (size_t i = 0; i < combined.size(); ++i)
  {
    still_possible = still_possible || combined[i] * likelihood[i] > 0.0;
  }
  if (!still_possible)
  {
    throw InconsistentEvidence("likelihood contradicts earlier evidence at " + to_string(node));
  }
  s.node.lambda_evidence.push_back(std::move(likelihood));
}

std::vector<double> BayesNet::local_evidence(const NodeState& state) const
{
  std::vector<double> out(state.node.hypotheses.size(), 1.0);
  for (const auto& lik : state.node.lambda_evidence)
  {
    double peak = 0.0;
    for (size_t i = 0; i < out.size(); ++i)
    {
      out[i] *= lik[i];
      peak = std::max(peak, out[i]);
    }
    // Rescale to keep long products away from underflow.
    if (peak > 0.0)
    {
      for (double& x : out)
      {
        x /= peak;
      }
    }
  }
  return out;
}

std::vector<double> BayesNet::prior_message(const NodeState& state) const
{
  if (state.parents.empty())
  {
    return state.node.hypotheses.priors();
  }
  const size_t nx = state.node.hypotheses.size();
  std::vector<double> pi(nx, 0.0);
  std::vector<size_t> radix;
  for (NodeId p : state.parents)
  {
    radix.push_back(get(p).node.hypotheses.size());
  }
  std::vector<size_t> u(radix.size(), 0);
  const size_t configs = state.cpt.size() / nx;
  for (size_t cfg = 0; cfg < configs; ++cfg)
  {
    double w = 1.0;
    for (size_t j = 0; j < radix.size(); ++j)
    {
      w *= pi_.at({state.parents[j], state.node.id})[u[j]];
    }
    if (w > 0.0)
    {
      for (size_t x = 0; x < nx; ++x)
      {
        pi[x] += w * state.cpt[cfg * nx + x];
      }
    }
    for (size_t j = radix.size(); j-- > 0;)
    {
      if (++u[j] < radix[j])
      {
        break;
      }
      u[j] = 0;
    }
  }
  return pi;
}

std::vector<double> BayesNet::message(NodeId from, NodeId to) const
{
  const NodeState& s = get(from);
  const size_t nx = s.node.hypotheses.size();
  auto lambda = local_evidence(s);
  for (NodeId c : s.children)
  {
    if (c == to)
    {
      continue;
    }
    const auto& msg = lambda_.at({from, c});
    for (size_t x = 0; x < nx; ++x)
    {
      lambda[x] *= msg[x];
    }
  }

  auto is_child = std::find(s.children.begin(), s.children.end(), to) != s.children.end();
  if (is_child)
  {
    auto pi = prior_message(s);
    for (size_t x = 0; x < nx; ++x)
    {
      pi[x] *= lambda[x];
    }
    normalize(pi, to_string(from));
    return pi;
  }

  // Lambda message to parent `to`: sum out this node and the other parents.
  size_t target = 0;
  std::vector<size_t> radix;
  for (size_t j = 0; j < s.parents.size(); ++j)
  {
    radix.push_back(get(s.parents[j]).node.hypotheses.size());
    if (s.parents[j] == to)
    {
      target = j;
    }
  }
  std::vector<double> out(radix[target], 0.0);
  std::vector<size_t> u(radix.size(), 0);
  const size_t configs = s.cpt.size() / nx;
  for (size_t cfg = 0; cfg < configs; ++cfg)
  {
    double w = 1.0;
    for (size_t j = 0; j < radix.size(); ++j)
    {
      if (j != target)
      {
        w *= pi_.at({s.parents[j], from})[u[j]];
      }
    }
    if (w > 0.0)
    {
      double acc = 0.0;
      for (size_t x = 0; x < nx; ++x)
      {
        acc += lambda[x] * s.cpt[cfg * nx + x];
      }
      out[u[target]] += w * acc;
    }
    for (size_t j = radix.size(); j-- > 0;)
    {
      if (++u[j] < radix[j])
      {
        break;
      }
      u[j] = 0;
    }
  }
  normalize(out, to_string(from));
  return out;
}

void BayesNet::propagate()
{
  pi_.clear();
  lambda_.clear();
  std::set<NodeId> visited;
  for (auto& [root, unused] : nodes_)
  {
    (void)unused;
    if (visited.count(root))
    {
      continue;
    }
    // Undirected BFS order from the component's smallest id.
    std::vector<NodeId> order;
    std::map<NodeId, NodeId> toward_root;
    std::deque<NodeId> queue{root};
    visited.insert(root);
    while (!queue.empty())
    {
      NodeId cur = queue.front();
      queue.pop_front();
      order.push_back(cur);
      const NodeState& s = get(cur);
      for (const auto* list : {&s.parents, &s.children})
      {
        for (NodeId next : *list)
        {
          if (visited.insert(next).second)
          {
            toward_root[next] = cur;
            queue.push_back(next);
          }
        }
      }
    }

    auto send = [&](NodeId from, NodeId to) {
      auto msg = message(from, to);
      const auto& children = get(from).children;
      if (std::find(children.begin(), children.end(), to) != children.end())
      {
        pi_[{from, to}] = std::move(msg);
      }
      else
      {
        lambda_[{to, from}] = std::move(msg);
      }
    };
    for (size_t i = order.size(); i-- > 1;)
    {
      send(order[i], toward_root.at(order[i]));
    }
    for (NodeId cur : order)
    {
      const NodeState& s = get(cur);
      for (const auto* list : {&s.parents, &s.children})
      {
        for (NodeId next : *list)
        {
          if (toward_root.count(cur) && toward_root.at(cur) == next)
          {
            continue;
          }
          send(cur, next);
        }
      }
    }

    for (NodeId cur : order)
    {
      NodeState& s = get(cur);
      auto belief = prior_message(s);
      auto lambda = local_evidence(s);
      for (NodeId c : s.children)
      {
        const auto& msg = lambda_.at({cur, c});
        for (size_t x = 0; x < lambda.size(); ++x)
        {
          lambda[x] *= msg[x];
        }
      }
      for (size_t x = 0; x < belief.size(); ++x)
      {
        belief[x] *= lambda[x];
      }
      normalize(belief, to_string(cur));
      s.node.belief = std::move(belief);
    }
  }
}

std::vector<NodeId> BayesNet::node_ids() const
{
  std::vector<NodeId> out;
  for (const auto& [id, unused] : nodes_)
  {
    (void)unused;
    out.push_back(id);
  }
  return out;
}

const ConditionalTable& BayesNet::link_table(NodeId parent, NodeId child) const
{
  auto it = tables_.find({parent, child});
  if (it == tables_.end())
  {
    throw std::out_of_range("no link " + to_string(parent) + " -> " + to_string(child));
  }
  return it->second;
}

std::vector<NetEdge> BayesNet::edges() const
{
  std::vector<NetEdge> out;
  for (const auto& [key, table] : tables_)
  {
    out.push_back(NetEdge{key.first, key.second, table.id});
  }
  return out;
}

NodeId BayesNet::replace_node(NodeId old, const Replacement& r)
{
  const NodeState old_state = get(old);
  const size_t n_old = old_state.node.hypotheses.size();
  if (r.old_index.size() != r.hypotheses.size())
  {
    throw std::invalid_argument("replacement label map has wrong length");
  }
  for (size_t idx : r.old_index)
  {
    if (idx >= n_old)
    {
      throw std::invalid_argument("replacement label map points past the old labels");
    }
  }
  // Build the new tables before touching the net so a failure leaves it
  // unchanged.
  std::vector<std::pair<NodeId, ConditionalTable>> parent_tables;
  std::vector<std::pair<NodeId, ConditionalTable>> child_tables;
  for (NodeId p : old_state.parents)
  {
    parent_tables.emplace_back(p, r.parent_table(p));
  }
  for (NodeId c : old_state.children)
  {
    child_tables.emplace_back(c, r.child_table(c));
  }

  NodeId fresh = instantiate_node(r.hypotheses, r.model_refs);
  NodeState& ns = get(fresh);
  for (const auto& lik : old_state.node.lambda_evidence)
  {
    std::vector<double> mapped(r.hypotheses.size());
    for (size_t f = 0; f < mapped.size(); ++f)
    {
      mapped[f] = lik[r.old_index[f]];
    }
    ns.node.lambda_evidence.push_back(std::move(mapped));
  }

  for (NodeId p : old_state.parents)
  {
    tables_.erase({p, old});
    auto& kids = get(p).children;
    kids.erase(std::find(kids.begin(), kids.end(), old));
  }
  for (NodeId c : old_state.children)
  {
    tables_.erase({old, c});
    auto& ps = get(c).parents;
    ps.erase(std::find(ps.begin(), ps.end(), old));
  }
  nodes_.erase(old);
  for (auto& [p, table] : parent_tables)
  {
    link(p, fresh, table);
  }
  for (auto& [c, table] : child_tables)
  {
    link(fresh, c, table);
  }
  return fresh;
}

bool BayesNet::is_singly_connected() const
{
  // A forest has exactly (nodes - components) edges.
  std::set<NodeId> visited;
  size_t components = 0;
  for (const auto& [root, unused] : nodes_)
  {
    (void)unused;
    if (visited.count(root))
    {
      continue;
    }
    ++components;
    std::deque<NodeId> queue{root};
    visited.insert(root);
    while (!queue.empty())
    {
      NodeId cur = queue.front();
      queue.pop_front();
      const NodeState& s = get(cur);
      for (const auto* list : {&s.parents, &s.children})
      {
        for (NodeId next : *list)
        {
          if (visited.insert(next).second)
          {
            queue.push_back(next);
          }
        }
      }
    }
  }
  return tables_.size() + components == nodes_.size();
}

Json BayesNet::snapshot() const
{
  Json nodes = Json::array();
  for (const auto& [id, s] : nodes_)
  {
    nodes.push_back({{"id", to_string(id)}, {"labels", s.node.hypotheses.labels()}, {"belief", s.node.belief}});
  }
  Json edges = Json::array();
  for (const auto& [key, table] : tables_)
  {
    (void)table;
    edges.push_back({{"parent", to_string(key.first)}, {"child", to_string(key.second)}});
  }
  return Json{{"nodes", nodes}, {"edges", edges}};
}

}  // namespace percept
