#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "percept/bayes_net.hpp"
#include "percept/model_base.hpp"
#include "percept/valuation.hpp"

namespace percept
{
struct Point
{
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

struct WorldEntity
{
  std::string id;
  // Model node id for units; any tag (e.g. "vehicle") for leaves.
  std::string type;
  Point position;
  std::optional<std::string> member_of;
};

/// Rectangular grid of terrain classes. Cell (i, j) covers
/// [i*cell_size, (i+1)*cell_size) x [j*cell_size, (j+1)*cell_size); cells are
/// stored row by row starting at j = 0.
struct TerrainGrid
{
  int width = 0;
  int height = 0;
  double cell_size = 1.0;
  std::vector<std::string> cells;
  // terrain class -> force type -> outcome; "*" matches any force type.
  std::map<std::string, std::map<std::string, std::string>> rules;

  double extent_x() const { return width * cell_size; }
  double extent_y() const { return height * cell_size; }
  bool inside(Point p) const;
  Point clamp(Point p) const;
  /// Class of the cell holding p; points on the far edges use the last cell.
  /// Throws std::out_of_range outside the grid.
  const std::string& class_at(Point p) const;
};

struct ClusterParams
{
  double max_intervehicle_distance = 1.0;
  size_t min_count = 1;
  size_t max_count = 1;
  double max_extent = 1.0;

  void validate() const;
};

struct Detection
{
  Point position;
  double strength = 0.0;
  // Hidden from the engine.
  bool is_false_alarm = false;
  std::optional<std::string> source;
};

struct ClusterHypothesis
{
  std::vector<size_t> members;
  Point centroid;
  double strength = 0.0;
  // Unit most of the true detections belong to; empty for clutter.
  std::optional<std::string> truth;
};

struct WorldSpec
{
  std::vector<WorldEntity> entities;
  TerrainGrid terrain;
  double detect_prob = 1.0;
  // Expected false alarms per unit area.
  double false_alarm_rate = 0.0;
  ClusterParams cluster_params;
  // Confusion group that cluster hypotheses are instantiated in.
  std::string seed_group;
  std::pair<double, double> true_strength{0.6, 0.95};
  std::pair<double, double> false_strength{0.05, 0.5};

  static WorldSpec from_json(const Json& doc, const ModelBase& models);

  const WorldEntity* entity(const std::string& id) const;
  /// Entities nothing else is a member of.
  std::vector<const WorldEntity*> vehicles() const;
};

/// Seed of an independent random stream derived from a master seed.
uint64_t stream_seed(uint64_t seed, uint64_t step, const std::string& tag);

std::vector<Detection> generate_detections(const WorldSpec& world, double detect_prob, double false_alarm_rate,
                                           std::mt19937_64& rng);

/// Single-linkage clusters at max_intervehicle_distance, kept when the member
/// count lies in [min_count, max_count] and no two members are farther apart
/// than max_extent. Sorted by smallest member position.
std::vector<ClusterHypothesis> cluster_detections(const std::vector<Detection>& detections,
                                                  const ClusterParams& params);

/// Sets each cluster's truth to the unit most of its true detections belong
/// to, the smallest id on ties.
void assign_truth(std::vector<ClusterHypothesis>& clusters, const std::vector<Detection>& detections,
                  const WorldSpec& world);

/// Outcome id for a force of the given type standing at p.
std::string terrain_support(Point p, const TerrainGrid& terrain, const std::string& force_type);

struct TargetOutcome
{
  NodeId target;
  std::string outcome;
};

struct ExecutionResult
{
  std::vector<TargetOutcome> outcomes;
  int64_t duration = 0;
  // Targets with a match outcome, keyed by the entity they belong to.
  std::map<std::string, std::vector<NodeId>> matches;
};

/// Ground truth plus the binding between net nodes and the world entities
/// they stand for.
class WorldSim
{
public:
  WorldSim(WorldSpec spec, const ModelBase& models);

  const WorldSpec& spec() const { return spec_; }

  void bind(NodeId node, std::optional<std::string> entity, Point position);
  /// Moves the binding of a replaced node to its successor.
  void rebind(NodeId old, NodeId fresh);
  std::optional<std::string> truth(NodeId node) const;
  Point position(NodeId node) const;
  /// A node of the given group already bound to the entity.
  std::optional<NodeId> node_for(const std::string& entity, const std::string& group, const BayesNet& net) const;

  /// Index in labels of the label an entity of this type falls under, or the
  /// null label when none does.
  size_t label_for(const std::optional<std::string>& entity, const std::vector<std::string>& labels) const;

  ExecutionResult execute_action(const ActionInstance& action, const BayesNet& net, std::mt19937_64& rng,
                                 double cost_jitter = 0.0) const;

private:
  bool falls_under(const std::string& type, const std::string& model) const;

  WorldSpec spec_;
  const ModelBase& models_;
  std::map<std::string, size_t> entity_index_;
  struct Binding
  {
    std::optional<std::string> entity;
    Point position;
  };
  std::map<NodeId, Binding> bindings_;
};

}  // namespace percept
