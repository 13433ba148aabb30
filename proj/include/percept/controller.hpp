#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "percept/bayes_net.hpp"
#include "percept/model_base.hpp"
#include "percept/planner.hpp"
#include "percept/scenario.hpp"
#include "percept/valuation.hpp"
#include "percept/world_sim.hpp"

namespace percept
{
enum class RunStatus
{
  kContinue,
  kTerminated,
  kQuiescent,
  kMaxWall,
  kStepLimit,
};

std::string to_string(RunStatus status);

/// (template id, node) pairs that may not fire again.
using ExhaustedSet = std::set<std::pair<std::string, NodeId>>;

/// Every applicable, non-exhausted template instantiated once per node, or
/// once over all eligible nodes for bundled templates. Ordered by first
/// target, then kind, then template id. Values are left at zero.
std::vector<ActionInstance> enumerate_candidates(const BayesNet& net, const ModelBase& models,
                                                 const ExhaustedSet& exhausted = {});

/// kTerminated when some goal-group node has a label with belief at least
/// termination_belief, kContinue otherwise.
RunStatus check_termination(const BayesNet& net, const ModelBase& models, double termination_belief);

/// Likelihood over the table's child labels implied by observing `outcome`,
/// with every parent label weighted alike.
std::vector<double> outcome_likelihood(const OutcomeTable& table, const std::string& outcome);

struct Completion
{
  std::string action_id;
  // One outcome per target, joined with '+'; "CANCELLED" when cut short.
  std::string outcome;
  int64_t start_time = 0;
  int64_t finish_time = 0;
  bool cancelled = false;
};

struct StepRecord
{
  size_t step = 0;
  std::vector<ActionInstance> candidates;
  // Selected actions in dispatch order.
  std::vector<ActionInstance> plan;
  std::vector<Completion> completions;
  int64_t start_time = 0;
  int64_t end_time = 0;
  size_t max_in_flight = 0;
  RunStatus status = RunStatus::kContinue;
  Json beliefs_after;

  int64_t selected_cost() const;
};

struct Report
{
  std::vector<StepRecord> steps;
  RunStatus status = RunStatus::kContinue;
  int64_t simulated_time = 0;
  std::optional<NodeId> goal_node;
  std::string winner;
  // Node -> label -> belief.
  std::map<std::string, std::map<std::string, double>> final_beliefs;

  /// {steps, final_beliefs, winner, terminated_reason, simulated_time,
  /// goal_node}
  Json to_json() const;
};

/// The recognition loop: enumerate, value, select, execute on the simulated
/// pool, accrue evidence, test termination.
class Controller
{
public:
  /// Seeds the net with one node per detection cluster.
  Controller(const ModelBase& models, WorldSpec world, ControlConfig config);
  explicit Controller(const Scenario& scenario);

  const BayesNet& net() const { return net_; }
  const WorldSim& world() const { return world_; }
  const ControlConfig& config() const { return config_; }
  const std::vector<NodeId>& seeded() const { return seeded_; }
  const std::vector<ClusterHypothesis>& clusters() const { return clusters_; }
  const std::vector<Detection>& detections() const { return detections_; }
  int64_t clock() const { return clock_; }
  size_t steps_taken() const { return step_; }

  std::vector<ActionInstance> candidates() const;
  RunStatus status() const;

  /// One control step. With a forced plan the listed action ids are
  /// dispatched in that order and valuation is skipped.
  StepRecord run_step(const std::optional<std::vector<std::string>>& forced_plan = std::nullopt);

  /// Applies one finished action. Throws std::invalid_argument for an action
  /// that is not in flight.
  void on_completion(const std::string& action_id);

  Report run();
  /// Re-executes recorded plans, one per step, with the planner out of the
  /// loop.
  Report replay(const std::vector<std::vector<std::string>>& plans);

private:
  struct InFlight
  {
    ActionInstance action;
    ExecutionResult result;
    int64_t start = 0;
  };

  void seed_from_world();
  NodeId resolve(NodeId node, std::vector<double>* likelihood = nullptr) const;
  void attach(NodeId node, const OutcomeTable& table, const std::string& outcome);
  NodeId refine(NodeId node, const ActionTemplate& tmpl);
  void instantiate_parents(const ExecutionResult& result);
  std::string group_of(NodeId node) const;
  Report finish(std::vector<StepRecord> steps, RunStatus status) const;

  const ModelBase& models_;
  ControlConfig config_;
  WorldSim world_;
  BayesNet net_;
  std::vector<Detection> detections_;
  std::vector<ClusterHypothesis> clusters_;
  std::vector<NodeId> seeded_;
  ExhaustedSet exhausted_;
  std::map<std::string, InFlight> in_flight_;
  struct Replaced
  {
    NodeId fresh;
    std::vector<size_t> old_index;
  };
  std::map<NodeId, Replaced> replaced_;
  int64_t clock_ = 0;
  size_t step_ = 0;
  RunStatus status_ = RunStatus::kContinue;
};

}  // namespace percept
