#include "percept/world_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace percept
{
namespace
{
const Json& need(const Json& obj, const char* key, const std::string& element)
{
  if (!obj.is_object() || !obj.contains(key))
  {
    throw ScenarioError(element, std::string("missing required key '") + key + "'");
  }
  return obj.at(key);
}

double finite_number(const Json& v, const std::string& element, const std::string& what)
{
  if (!v.is_number() || !std::isfinite(v.get<double>()))
  {
    throw ScenarioError(element, what + " must be a finite number");
  }
  return v.get<double>();
}

size_t count_value(const Json& v, const std::string& element, const std::string& what)
{
  if (!v.is_number_unsigned())
  {
    throw ScenarioError(element, what + " must be a nonnegative integer");
  }
  return v.get<size_t>();
}

std::pair<double, double> strength_range(const Json& v, const std::string& what)
{
  if (!v.is_array() || v.size() != 2)
  {
    throw ScenarioError("world", what + " must be [low, high]");
  }
  double lo = finite_number(v[0], "world", what);
  double hi = finite_number(v[1], "world", what);
  if (lo < 0.0 || hi > 1.0 || lo > hi)
  {
    throw ScenarioError("world", what + " must satisfy 0 <= low <= high <= 1");
  }
  return {lo, hi};
}

double distance(Point a, Point b)
{
  return std::hypot(a.x - b.x, a.y - b.y);
}

bool point_less(Point a, Point b)
{
  return a.x < b.x || (a.x == b.x && a.y < b.y);
}

uint64_t splitmix(uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class UnionFind
{
public:
  explicit UnionFind(size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), size_t{0}); }
  size_t find(size_t x)
  {
    while (parent_[x] != x)
    {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(size_t a, size_t b)
  {
    a = find(a);
    b = find(b);
    if (a != b)
    {
      parent_[std::max(a, b)] = std::min(a, b);
    }
  }

private:
  std::vector<size_t> parent_;
};

TerrainGrid parse_terrain(const Json& t)
{
  TerrainGrid grid;
  const std::string element = "world.terrain";
  grid.width = static_cast<int>(count_value(need(t, "width", element), element, "width"));
  grid.height = static_cast<int>(count_value(need(t, "height", element), element, "height"));
  if (grid.width <= 0 || grid.height <= 0)
  {
    throw ScenarioError(element, "grid must have at least one cell");
  }
  if (t.contains("cell_size"))
  {
    grid.cell_size = finite_number(t.at("cell_size"), element, "cell_size");
    if (grid.cell_size <= 0.0)
    {
      throw ScenarioError(element, "cell_size must be positive");
    }
  }
  const Json& cells = need(t, "cells", element);
  if (!cells.is_array())
  {
    throw ScenarioError(element, "cells must be an array");
  }
  for (const auto& row : cells)
  {
    if (row.is_string())
    {
      grid.cells.push_back(row.get<std::string>());
    }
    else if (row.is_array())
    {
      for (const auto& c : row)
      {
        if (!c.is_string())
        {
          throw ScenarioError(element, "terrain classes must be strings");
        }
        grid.cells.push_back(c.get<std::string>());
      }
    }
    else
    {
      throw ScenarioError(element, "cells must hold strings or rows of strings");
    }
  }
  if (grid.cells.size() != static_cast<size_t>(grid.width) * static_cast<size_t>(grid.height))
  {
    throw ScenarioError(element, "expected " + std::to_string(grid.width * grid.height) + " cells, got " +
                                     std::to_string(grid.cells.size()));
  }
  if (t.contains("rules"))
  {
    for (const auto& [cls, by_type] : t.at("rules").items())
    {
      for (const auto& [type, outcome] : by_type.items())
      {
        if (!outcome.is_string())
        {
          throw ScenarioError(element, "rule outcome for " + cls + "/" + type + " must be a string");
        }
        grid.rules[cls][type] = outcome.get<std::string>();
      }
    }
  }
  return grid;
}

}  // namespace

bool TerrainGrid::inside(Point p) const
{
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= extent_x() && p.y <= extent_y();
}

Point TerrainGrid::clamp(Point p) const
{
  return {std::clamp(p.x, 0.0, extent_x()), std::clamp(p.y, 0.0, extent_y())};
}

const std::string& TerrainGrid::class_at(Point p) const
{
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !inside(p))
  {
    throw std::out_of_range("position (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                            ") lies outside the terrain grid");
  }
  const int i = std::min(static_cast<int>(p.x / cell_size), width - 1);
  const int j = std::min(static_cast<int>(p.y / cell_size), height - 1);
  return cells[static_cast<size_t>(j) * static_cast<size_t>(width) + static_cast<size_t>(i)];
}

void ClusterParams::validate() const
{
  if (!(max_intervehicle_distance > 0.0) || !(max_extent > 0.0))
  {
    throw std::invalid_argument("cluster distances must be positive");
  }
  if (min_count > max_count)
  {
    throw std::invalid_argument("cluster min_count exceeds max_count");
  }
}

WorldSpec WorldSpec::from_json(const Json& doc, const ModelBase& models)
{
  WorldSpec w;
  if (!doc.is_object())
  {
    throw ScenarioError("world", "must be an object");
  }
  std::set<std::string> ids;
  for (const auto& e : need(doc, "entities", "world"))
  {
    WorldEntity entity;
    const Json& id = need(e, "id", "world.entities");
    if (!id.is_string())
    {
      throw ScenarioError("world.entities", "entity id must be a string");
    }
    entity.id = id.get<std::string>();
    const Json& type = need(e, "type", entity.id);
    if (!type.is_string())
    {
      throw ScenarioError(entity.id, "type must be a string");
    }
    entity.type = type.get<std::string>();
    entity.position = {finite_number(need(e, "x", entity.id), entity.id, "x"),
                       finite_number(need(e, "y", entity.id), entity.id, "y")};
    if (e.contains("member_of") && !e.at("member_of").is_null())
    {
      entity.member_of = e.at("member_of").get<std::string>();
    }
    if (!ids.insert(entity.id).second)
    {
      throw ScenarioError(entity.id, "duplicate entity id");
    }
    w.entities.push_back(std::move(entity));
  }
  for (const auto& e : w.entities)
  {
    if (e.member_of && !ids.count(*e.member_of))
    {
      throw ScenarioError(e.id, "member_of '" + *e.member_of + "' is not an entity");
    }
    // Walking up more steps than there are entities means a loop.
    const WorldEntity* cur = &e;
    for (size_t hops = 0; cur->member_of; ++hops)
    {
      if (hops > w.entities.size())
      {
        throw ScenarioError(e.id, "membership cycle");
      }
      cur = w.entity(*cur->member_of);
    }
  }
  for (const auto& e : w.entities)
  {
    bool is_unit = std::any_of(w.entities.begin(), w.entities.end(),
                               [&](const WorldEntity& o) { return o.member_of == e.id; });
    if (is_unit && !models.has_node(e.type))
    {
      throw ScenarioError(e.id, "type '" + e.type + "' is not a model");
    }
  }

  w.terrain = parse_terrain(need(doc, "terrain", "world"));

  w.detect_prob = finite_number(need(doc, "detect_prob", "world"), "world", "detect_prob");
  w.false_alarm_rate = finite_number(need(doc, "false_alarm_rate", "world"), "world", "false_alarm_rate");
  if (w.detect_prob < 0.0 || w.detect_prob > 1.0 || w.false_alarm_rate < 0.0 || w.false_alarm_rate > 1.0)
  {
    throw ScenarioError("world", "detect_prob and false_alarm_rate must lie in [0, 1]");
  }

  const Json& cp = need(doc, "cluster_params", "world");
  const std::string cpe = "world.cluster_params";
  w.cluster_params.max_intervehicle_distance =
      finite_number(need(cp, "max_intervehicle_distance", cpe), cpe, "max_intervehicle_distance");
  w.cluster_params.min_count = count_value(need(cp, "min_count", cpe), cpe, "min_count");
  w.cluster_params.max_count = count_value(need(cp, "max_count", cpe), cpe, "max_count");
  w.cluster_params.max_extent = finite_number(need(cp, "max_extent", cpe), cpe, "max_extent");
  try
  {
    w.cluster_params.validate();
  }
  catch (const std::invalid_argument& ex)
  {
    throw ScenarioError(cpe, ex.what());
  }

  const Json& sg = need(doc, "seed_group", "world");
  if (!sg.is_string() || !models.groups().count(sg.get<std::string>()))
  {
    throw ScenarioError("world", "seed_group must name a confusion group");
  }
  w.seed_group = sg.get<std::string>();
  if (doc.contains("true_strength"))
  {
    w.true_strength = strength_range(doc.at("true_strength"), "true_strength");
  }
  if (doc.contains("false_strength"))
  {
    w.false_strength = strength_range(doc.at("false_strength"), "false_strength");
  }

  for (const auto& t : models.templates())
  {
    if (t.kind != ActionKind::kTerrainSupport)
    {
      continue;
    }
    for (const auto& cls : w.terrain.cells)
    {
      auto it = w.terrain.rules.find(cls);
      if (it == w.terrain.rules.end() || !it->second.count("*"))
      {
        throw ScenarioError("world.terrain", "terrain class '" + cls + "' has no '*' rule");
      }
    }
    const OutcomeTable& table = models.outcome_table(t.outcome_table);
    for (const auto& [cls, by_type] : w.terrain.rules)
    {
      for (const auto& [type, outcome] : by_type)
      {
        if (!table.outcome_index(outcome))
        {
          throw ScenarioError("world.terrain", "rule " + cls + "/" + type + " yields '" + outcome +
                                                   "', which table " + table.id + " does not list");
        }
      }
    }
  }
  return w;
}

const WorldEntity* WorldSpec::entity(const std::string& id) const
{
  for (const auto& e : entities)
  {
    if (e.id == id)
    {
      return &e;
    }
  }
  return nullptr;
}

std::vector<const WorldEntity*> WorldSpec::vehicles() const
{
  std::set<std::string> units;
  for (const auto& e : entities)
  {
    if (e.member_of)
    {
      units.insert(*e.member_of);
    }
  }
  std::vector<const WorldEntity*> out;
  for (const auto& e : entities)
  {
    if (!units.count(e.id))
    {
      out.push_back(&e);
    }
  }
  return out;
}

uint64_t stream_seed(uint64_t seed, uint64_t step, const std::string& tag)
{
  // FNV-1a over the tag keeps streams stable across platforms.
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag)
  {
    h = (h ^ c) * 0x100000001b3ULL;
  }
  return splitmix(splitmix(splitmix(seed) ^ step) ^ h);
}

std::vector<Detection> generate_detections(const WorldSpec& world, double detect_prob, double false_alarm_rate,
                                           std::mt19937_64& rng)
{
  std::vector<Detection> out;
  std::bernoulli_distribution detected(std::clamp(detect_prob, 0.0, 1.0));
  std::uniform_real_distribution<double> true_strength(world.true_strength.first, world.true_strength.second);
  for (const auto* v : world.vehicles())
  {
    if (detected(rng))
    {
      out.push_back({v->position, true_strength(rng), false, v->id});
    }
  }
  const double area = world.terrain.extent_x() * world.terrain.extent_y();
  const double mean = false_alarm_rate * area;
  if (mean > 0.0)
  {
    std::poisson_distribution<int> count(mean);
    std::uniform_real_distribution<double> ux(0.0, world.terrain.extent_x());
    std::uniform_real_distribution<double> uy(0.0, world.terrain.extent_y());
    std::uniform_real_distribution<double> false_strength(world.false_strength.first, world.false_strength.second);
    const int n = count(rng);
    for (int i = 0; i < n; ++i)
    {
      Point p{ux(rng), uy(rng)};
      out.push_back({p, false_strength(rng), true, std::nullopt});
    }
  }
  return out;
}

std::vector<ClusterHypothesis> cluster_detections(const std::vector<Detection>& detections,
                                                  const ClusterParams& params)
{
  params.validate();
  const size_t n = detections.size();
  UnionFind uf(n);
  for (size_t i = 0; i < n; ++i)
  {
    for (size_t j = i + 1; j < n; ++j)
    {
      if (distance(detections[i].position, detections[j].position) <= params.max_intervehicle_distance)
      {
        uf.unite(i, j);
      }
    }
  }
  std::map<size_t, std::vector<size_t>> components;
  for (size_t i = 0; i < n; ++i)
  {
    components[uf.find(i)].push_back(i);
  }

  std::vector<ClusterHypothesis> out;
  for (auto& [root, members] : components)
  {
    if (members.size() < params.min_count || members.size() > params.max_count)
    {
      continue;
    }
    std::sort(members.begin(), members.end(), [&](size_t a, size_t b) {
      const Point pa = detections[a].position;
      const Point pb = detections[b].position;
      if (pa == pb)
      {
        return detections[a].strength < detections[b].strength;
      }
      return point_less(pa, pb);
    });
    double extent = 0.0;
    for (size_t a = 0; a < members.size(); ++a)
    {
      for (size_t b = a + 1; b < members.size(); ++b)
      {
        extent = std::max(extent, distance(detections[members[a]].position, detections[members[b]].position));
      }
    }
    if (extent > params.max_extent)
    {
      continue;
    }
    ClusterHypothesis c;
    c.members = members;
    for (size_t m : members)
    {
      c.centroid.x += detections[m].position.x;
      c.centroid.y += detections[m].position.y;
      c.strength += detections[m].strength;
    }
    const double k = static_cast<double>(members.size());
    c.centroid = {c.centroid.x / k, c.centroid.y / k};
    c.strength /= k;
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [&](const ClusterHypothesis& a, const ClusterHypothesis& b) {
    return point_less(detections[a.members.front()].position, detections[b.members.front()].position);
  });
  return out;
}

void assign_truth(std::vector<ClusterHypothesis>& clusters, const std::vector<Detection>& detections,
                  const WorldSpec& world)
{
  for (auto& c : clusters)
  {
    std::map<std::string, size_t> votes;
    for (size_t m : c.members)
    {
      const auto& d = detections[m];
      if (d.is_false_alarm || !d.source)
      {
        continue;
      }
      const WorldEntity* v = world.entity(*d.source);
      if (v && v->member_of)
      {
        ++votes[*v->member_of];
      }
    }
    c.truth.reset();
    size_t best = 0;
    for (const auto& [unit, n] : votes)
    {
      if (n > best)
      {
        best = n;
        c.truth = unit;
      }
    }
  }
}

std::string terrain_support(Point p, const TerrainGrid& terrain, const std::string& force_type)
{
  const std::string& cls = terrain.class_at(p);
  auto rules = terrain.rules.find(cls);
  if (rules != terrain.rules.end())
  {
    if (auto it = rules->second.find(force_type); it != rules->second.end())
    {
      return it->second;
    }
    if (auto it = rules->second.find("*"); it != rules->second.end())
    {
      return it->second;
    }
  }
  throw std::out_of_range("no terrain rule for class '" + cls + "' and force '" + force_type + "'");
}

WorldSim::WorldSim(WorldSpec spec, const ModelBase& models) : spec_(std::move(spec)), models_(models)
{
  for (size_t i = 0; i < spec_.entities.size(); ++i)
  {
    entity_index_.emplace(spec_.entities[i].id, i);
  }
}

void WorldSim::bind(NodeId node, std::optional<std::string> entity, Point position)
{
  if (entity && !entity_index_.count(*entity))
  {
    throw std::invalid_argument("unknown entity '" + *entity + "'");
  }
  bindings_[node] = {std::move(entity), position};
}

void WorldSim::rebind(NodeId old, NodeId fresh)
{
  auto it = bindings_.find(old);
  if (it == bindings_.end())
  {
    return;
  }
  bindings_[fresh] = it->second;
  bindings_.erase(old);
}

std::optional<std::string> WorldSim::truth(NodeId node) const
{
  auto it = bindings_.find(node);
  return it == bindings_.end() ? std::nullopt : it->second.entity;
}

Point WorldSim::position(NodeId node) const
{
  auto it = bindings_.find(node);
  if (it == bindings_.end())
  {
    throw std::out_of_range(to_string(node) + " is not placed in the world");
  }
  return it->second.position;
}

std::optional<NodeId> WorldSim::node_for(const std::string& entity, const std::string& group,
                                         const BayesNet& net) const
{
  for (const auto& [node, binding] : bindings_)
  {
    if (binding.entity != entity || !net.contains(node))
    {
      continue;
    }
    const auto& refs = net.node(node).model_refs;
    if (!refs.empty() && models_.node(refs.begin()->second).isa_group == group)
    {
      return node;
    }
  }
  return std::nullopt;
}

bool WorldSim::falls_under(const std::string& type, const std::string& model) const
{
  if (type == model)
  {
    return true;
  }
  if (!models_.has_node(model))
  {
    return false;
  }
  const auto& subs = models_.node(model).subtypes;
  return std::any_of(subs.begin(), subs.end(), [&](const std::string& s) { return falls_under(type, s); });
}

size_t WorldSim::label_for(const std::optional<std::string>& entity, const std::vector<std::string>& labels) const
{
  if (entity)
  {
    const WorldEntity& e = spec_.entities.at(entity_index_.at(*entity));
    for (size_t i = 0; i < labels.size(); ++i)
    {
      if (labels[i] != kNullLabel && falls_under(e.type, labels[i]))
      {
        return i;
      }
    }
  }
  auto it = std::find(labels.begin(), labels.end(), kNullLabel);
  if (it == labels.end())
  {
    throw std::invalid_argument("label set has no '" + std::string(kNullLabel) + "' alternative");
  }
  return static_cast<size_t>(it - labels.begin());
}

ExecutionResult WorldSim::execute_action(const ActionInstance& action, const BayesNet& net, std::mt19937_64& rng,
                                         double cost_jitter) const
{
  const OutcomeTable& table = models_.outcome_table(action.outcome_table);
  const ActionTemplate& tmpl = models_.action_template(action.template_id);
  ExecutionResult result;
  result.duration = action.cost;
  if (cost_jitter > 0.0)
  {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double scaled = static_cast<double>(action.cost) * (1.0 + cost_jitter * u(rng));
    result.duration = std::max<int64_t>(0, std::llround(scaled));
  }

  for (NodeId target : action.targets)
  {
    const BayesNode& node = net.node(target);
    const auto truth_entity = truth(target);
    const std::string group = models_.node(node.model_refs.begin()->second).isa_group;
    const size_t child = label_for(truth_entity, table.child_labels);

    std::optional<std::string> parent_entity;
    if (models_.group(group).parent_groups.empty())
    {
      parent_entity = truth_entity;
    }
    else if (truth_entity)
    {
      parent_entity = spec_.entities.at(entity_index_.at(*truth_entity)).member_of;
    }
    const size_t parent = label_for(parent_entity, table.parent_labels);

    std::string outcome;
    if (action.kind == ActionKind::kTerrainSupport)
    {
      const std::string force =
          truth_entity ? spec_.entities.at(entity_index_.at(*truth_entity)).type : std::string(kNullLabel);
      outcome = terrain_support(spec_.terrain.clamp(position(target)), spec_.terrain, force);
    }
    else
    {
      const size_t no = table.outcomes.size();
      std::vector<double> weights(no, 0.0);
      for (size_t o = 0; o < no; ++o)
      {
        weights[o] = table.at(parent, child, o);
      }
      // A truth the table deems impossible under its parent: fall back to the
      // child's slice across all parents, then to the parent's whole row.
      if (std::accumulate(weights.begin(), weights.end(), 0.0) <= 0.0)
      {
        for (size_t p = 0; p < table.parent_labels.size(); ++p)
        {
          for (size_t o = 0; o < no; ++o)
          {
            weights[o] += table.at(p, child, o);
          }
        }
      }
      if (std::accumulate(weights.begin(), weights.end(), 0.0) <= 0.0)
      {
        for (size_t c = 0; c < table.child_labels.size(); ++c)
        {
          for (size_t o = 0; o < no; ++o)
          {
            weights[o] += table.at(parent, c, o);
          }
        }
      }
      std::discrete_distribution<size_t> pick(weights.begin(), weights.end());
      outcome = table.outcomes[pick(rng)];
    }

    if (tmpl.match_outcome && outcome == *tmpl.match_outcome && truth_entity)
    {
      const auto& member_of = spec_.entities.at(entity_index_.at(*truth_entity)).member_of;
      if (member_of)
      {
        result.matches[*member_of].push_back(target);
      }
    }
    result.outcomes.push_back({target, std::move(outcome)});
  }
  return result;
}

}  // namespace percept
