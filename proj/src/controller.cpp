#include "percept/controller.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

namespace percept
{
namespace
{
constexpr double kTerminationSlack = 1e-12;

std::map<std::string, std::string> refs_for(const IsaGroup& group)
{
  std::map<std::string, std::string> refs;
  for (const auto& m : group.members)
  {
    refs.emplace(m, m);
  }
  return refs;
}

std::string join_targets(const std::vector<NodeId>& targets)
{
  std::string out;
  for (NodeId t : targets)
  {
    if (!out.empty())
    {
      out += '+';
    }
    out += to_string(t);
  }
  return out;
}

double best_real_label(const BayesNode& node)
{
  double best = 0.0;
  for (size_t i = 0; i < node.belief.size(); ++i)
  {
    if (node.hypotheses.null_index() != i)
    {
      best = std::max(best, node.belief[i]);
    }
  }
  return best;
}

}  // namespace

std::string to_string(RunStatus status)
{
  switch (status)
  {
    case RunStatus::kContinue:
      return "continue";
    case RunStatus::kTerminated:
      return "terminated";
    case RunStatus::kQuiescent:
      return "quiescent";
    case RunStatus::kMaxWall:
      return "max_wall";
    case RunStatus::kStepLimit:
      return "step_limit";
  }
  return "unknown";
}

std::vector<ActionInstance> enumerate_candidates(const BayesNet& net, const ModelBase& models,
                                                 const ExhaustedSet& exhausted)
{
  std::vector<ActionInstance> out;
  const auto ids = net.node_ids();
  for (const auto& t : models.templates())
  {
    std::vector<NodeId> eligible;
    for (NodeId id : ids)
    {
      const BayesNode& node = net.node(id);
      const bool applies = std::any_of(node.model_refs.begin(), node.model_refs.end(),
                                       [&](const auto& ref) { return t.applies_to(ref.second); });
      if (!applies)
      {
        continue;
      }
      if (!t.repeatable && exhausted.count({t.id, id}))
      {
        continue;
      }
      if (t.min_confidence > 0.0 && best_real_label(node) < t.min_confidence)
      {
        continue;
      }
      if (t.match_outcome && !net.parents(id).empty())
      {
        continue;
      }
      eligible.push_back(id);
    }
    auto make = [&](std::vector<NodeId> targets) {
      ActionInstance a;
      a.id = t.id + "@" + join_targets(targets);
      a.kind = t.kind;
      a.template_id = t.id;
      a.targets = std::move(targets);
      a.cost = t.cost;
      a.outcome_table = t.outcome_table;
      out.push_back(std::move(a));
    };
    if (t.bundle)
    {
      if (!eligible.empty())
      {
        make(eligible);
      }
    }
    else
    {
      for (NodeId id : eligible)
      {
        make({id});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const ActionInstance& a, const ActionInstance& b) {
    if (a.targets.front() != b.targets.front())
    {
      return a.targets.front() < b.targets.front();
    }
    if (a.kind != b.kind)
    {
      return a.kind < b.kind;
    }
    return a.template_id < b.template_id;
  });
  return out;
}

RunStatus check_termination(const BayesNet& net, const ModelBase& models, double termination_belief)
{
  for (NodeId id : net.node_ids())
  {
    const BayesNode& node = net.node(id);
    if (node.model_refs.empty() || !models.is_goal_group(models.node(node.model_refs.begin()->second).isa_group))
    {
      continue;
    }
    const double top = *std::max_element(node.belief.begin(), node.belief.end());
    if (top >= termination_belief - kTerminationSlack)
    {
      return RunStatus::kTerminated;
    }
  }
  return RunStatus::kContinue;
}

std::vector<double> outcome_likelihood(const OutcomeTable& table, const std::string& outcome)
{
  const auto o = table.outcome_index(outcome);
  if (!o)
  {
    throw std::invalid_argument("table " + table.id + " has no outcome '" + outcome + "'");
  }
  std::vector<double> lik(table.child_labels.size(), 0.0);
  for (size_t c = 0; c < lik.size(); ++c)
  {
    double hit = 0.0;
    double total = 0.0;
    for (size_t p = 0; p < table.parent_labels.size(); ++p)
    {
      hit += table.at(p, c, *o);
      total += table.child_marginal(p, c);
    }
    lik[c] = total > 0.0 ? hit / total : 0.0;
  }
  return lik;
}

int64_t StepRecord::selected_cost() const
{
  int64_t total = 0;
  for (const auto& a : plan)
  {
    total += a.cost;
  }
  return total;
}

Json Report::to_json() const
{
  Json doc;
  doc["steps"] = steps.size();
  Json beliefs = Json::object();
  for (const auto& [node, labels] : final_beliefs)
  {
    Json row = Json::object();
    for (const auto& [label, p] : labels)
    {
      row[label] = p;
    }
    beliefs[node] = std::move(row);
  }
  doc["final_beliefs"] = std::move(beliefs);
  doc["winner"] = winner.empty() ? Json(nullptr) : Json(winner);
  doc["terminated_reason"] = to_string(status);
  doc["simulated_time"] = simulated_time;
  doc["goal_node"] = goal_node ? Json(to_string(*goal_node)) : Json(nullptr);
  return doc;
}

Controller::Controller(const ModelBase& models, WorldSpec world, ControlConfig config)
    : models_(models), config_(config), world_(std::move(world), models)
{
  config_.validate();
  seed_from_world();
}

Controller::Controller(const Scenario& scenario) : Controller(scenario.models, scenario.world, scenario.control)
{
}

void Controller::seed_from_world()
{
  const WorldSpec& spec = world_.spec();
  std::mt19937_64 rng(stream_seed(config_.seed, 0, "detections"));
  detections_ = generate_detections(spec, spec.detect_prob, spec.false_alarm_rate, rng);
  clusters_ = cluster_detections(detections_, spec.cluster_params);
  assign_truth(clusters_, detections_, spec);

  const IsaGroup& group = models_.group(spec.seed_group);
  for (const auto& c : clusters_)
  {
    NodeId id = net_.instantiate_node(group.hypotheses, refs_for(group));
    std::vector<double> lik(group.hypotheses.size(), c.strength);
    if (auto null = group.hypotheses.null_index())
    {
      lik[*null] = 1.0 - c.strength;
    }
    net_.attach_evidence(id, lik);
    world_.bind(id, c.truth, c.centroid);
    seeded_.push_back(id);
  }
  net_.propagate();
}

std::string Controller::group_of(NodeId node) const
{
  return models_.node(net_.node(node).model_refs.begin()->second).isa_group;
}

std::vector<ActionInstance> Controller::candidates() const
{
  return enumerate_candidates(net_, models_, exhausted_);
}

RunStatus Controller::status() const
{
  return status_;
}

NodeId Controller::resolve(NodeId node, std::vector<double>* likelihood) const
{
  for (auto it = replaced_.find(node); it != replaced_.end(); it = replaced_.find(node))
  {
    if (likelihood)
    {
      std::vector<double> mapped(it->second.old_index.size());
      for (size_t f = 0; f < mapped.size(); ++f)
      {
        mapped[f] = (*likelihood)[it->second.old_index[f]];
      }
      *likelihood = std::move(mapped);
    }
    node = it->second.fresh;
  }
  return node;
}

void Controller::attach(NodeId node, const OutcomeTable& table, const std::string& outcome)
{
  const auto table_lik = outcome_likelihood(table, outcome);
  const auto& labels = net_.node(node).hypotheses.labels();
  std::vector<double> lik(labels.size());
  for (size_t i = 0; i < labels.size(); ++i)
  {
    auto it = std::find(table.child_labels.begin(), table.child_labels.end(), labels[i]);
    if (it == table.child_labels.end())
    {
      throw std::logic_error("table " + table.id + " does not cover label '" + labels[i] + "' of " +
                             to_string(node));
    }
    lik[i] = table_lik[static_cast<size_t>(it - table.child_labels.begin())];
  }
  net_.attach_evidence(node, std::move(lik));
}

NodeId Controller::refine(NodeId node, const ActionTemplate& tmpl)
{
  const std::string coarse = group_of(node);
  const std::string& fine = *tmpl.refine_to;
  if (coarse == fine)
  {
    return node;
  }
  const auto ref = models_.refinement(coarse, fine);
  const IsaGroup& fg = models_.group(fine);
  const auto& old_priors = net_.node(node).hypotheses.priors();
  std::vector<double> priors(fg.hypotheses.size());
  for (size_t f = 0; f < priors.size(); ++f)
  {
    priors[f] = old_priors[ref.coarse_index[f]] * ref.split[f];
  }
  const double z = std::accumulate(priors.begin(), priors.end(), 0.0);
  for (double& p : priors)
  {
    p /= z;
  }

  BayesNet::Replacement r;
  r.hypotheses = HypothesisSet(fg.hypotheses.labels(), priors, std::string(kNullLabel));
  r.model_refs = refs_for(fg);
  r.old_index = ref.coarse_index;
  r.parent_table = [&](NodeId p) {
    const ConditionalTable* t = models_.link_table(group_of(p), fine);
    if (!t)
    {
      throw std::logic_error("no part-of table from " + group_of(p) + " to " + fine);
    }
    return *t;
  };
  r.child_table = [&](NodeId c) {
    const ConditionalTable* t = models_.link_table(fine, group_of(c));
    if (!t)
    {
      throw std::logic_error("no part-of table from " + fine + " to " + group_of(c));
    }
    return *t;
  };
  NodeId fresh = net_.replace_node(node, r);
  world_.rebind(node, fresh);
  replaced_[node] = {fresh, ref.coarse_index};
  return fresh;
}

void Controller::instantiate_parents(const ExecutionResult& result)
{
  for (const auto& [entity, targets] : result.matches)
  {
    std::vector<NodeId> kids;
    for (NodeId t : targets)
    {
      NodeId cur = resolve(t);
      if (net_.contains(cur) && net_.parents(cur).empty())
      {
        kids.push_back(cur);
      }
    }
    if (kids.empty())
    {
      continue;
    }
    std::optional<std::string> parent_group;
    for (const auto& pg : models_.group(group_of(kids.front())).parent_groups)
    {
      const auto& hs = models_.group(pg).hypotheses;
      if (world_.label_for(entity, hs.labels()) != hs.null_index())
      {
        parent_group = pg;
        break;
      }
    }
    if (!parent_group)
    {
      continue;
    }
    NodeId parent;
    if (auto existing = world_.node_for(entity, *parent_group, net_))
    {
      parent = *existing;
    }
    else
    {
      const IsaGroup& g = models_.group(*parent_group);
      parent = net_.instantiate_node(g.hypotheses, refs_for(g));
      Point centre;
      for (NodeId k : kids)
      {
        centre.x += world_.position(k).x;
        centre.y += world_.position(k).y;
      }
      centre = {centre.x / static_cast<double>(kids.size()), centre.y / static_cast<double>(kids.size())};
      world_.bind(parent, entity, centre);
    }
    for (NodeId k : kids)
    {
      const ConditionalTable* table = models_.link_table(*parent_group, group_of(k));
      if (!table)
      {
        continue;
      }
      try
      {
        net_.link(parent, k, *table);
      }
      catch (const PolytreeViolation&)
      {
      }
    }
  }
}

void Controller::on_completion(const std::string& action_id)
{
  auto it = in_flight_.find(action_id);
  if (it == in_flight_.end())
  {
    throw std::invalid_argument("action '" + action_id + "' is not in flight");
  }
  InFlight done = std::move(it->second);
  in_flight_.erase(it);

  const ActionTemplate& tmpl = models_.action_template(done.action.template_id);
  const OutcomeTable& table = models_.outcome_table(done.action.outcome_table);
  for (const auto& [target, outcome] : done.result.outcomes)
  {
    NodeId cur = resolve(target);
    if (tmpl.kind == ActionKind::kRefineType && tmpl.refine_to)
    {
      cur = refine(cur, tmpl);
      attach(cur, table, outcome);
      continue;
    }
    if (cur == target)
    {
      attach(target, table, outcome);
      continue;
    }
    // Evidence over the pre-refinement labels.
    auto lik = outcome_likelihood(table, outcome);
    cur = resolve(target, &lik);
    net_.attach_evidence(cur, std::move(lik));
  }
  if (tmpl.match_outcome)
  {
    instantiate_parents(done.result);
  }
  net_.propagate();
}

StepRecord Controller::run_step(const std::optional<std::vector<std::string>>& forced_plan)
{
  StepRecord rec;
  rec.step = ++step_;
  rec.start_time = clock_;

  auto cands = enumerate_candidates(net_, models_, exhausted_);
  std::vector<ActionInstance> order;
  if (forced_plan)
  {
    for (const auto& id : *forced_plan)
    {
      auto it = std::find_if(cands.begin(), cands.end(), [&](const ActionInstance& a) { return a.id == id; });
      if (it == cands.end())
      {
        throw std::invalid_argument("recorded action '" + id + "' is not a candidate at step " +
                                    std::to_string(rec.step));
      }
      order.push_back(*it);
    }
  }
  else
  {
    cands = value_all_candidates(net_, models_, std::move(cands), config_.value_mode);
    KnapsackInstance inst;
    inst.budget = config_.budget_T;
    for (const auto& a : cands)
    {
      inst.items.push_back({a.id, a.value, a.cost});
    }
    const Plan plan = config_.epsilon > 0.0 ? solve_approx(inst, config_.epsilon) : solve_exact(inst);
    for (const auto& a : cands)
    {
      if (plan.contains(a.id))
      {
        order.push_back(a);
      }
    }
    std::stable_sort(order.begin(), order.end(), [](const ActionInstance& a, const ActionInstance& b) {
      if (a.value != b.value)
      {
        return a.value > b.value;
      }
      return a.id < b.id;
    });
  }
  rec.candidates = std::move(cands);
  rec.plan = order;

  if (order.empty())
  {
    status_ = RunStatus::kQuiescent;
  }

  std::deque<ActionInstance> pending(order.begin(), order.end());
  std::set<std::pair<int64_t, std::string>> events;
  auto dispatch = [&] {
    while (in_flight_.size() < static_cast<size_t>(config_.processors) && !pending.empty())
    {
      ActionInstance a = std::move(pending.front());
      pending.pop_front();
      ActionInstance current = a;
      for (auto& t : current.targets)
      {
        t = resolve(t);
      }
      std::mt19937_64 rng(stream_seed(config_.seed, rec.step, a.id));
      ExecutionResult result = world_.execute_action(current, net_, rng, config_.cost_jitter);
      // Outcomes stay keyed by the planned targets.
      for (auto& o : result.outcomes)
      {
        auto pos = std::find(current.targets.begin(), current.targets.end(), o.target);
        o.target = a.targets[static_cast<size_t>(pos - current.targets.begin())];
      }
      if (!models_.action_template(a.template_id).repeatable)
      {
        for (NodeId t : current.targets)
        {
          exhausted_.insert({a.template_id, t});
        }
      }
      events.insert({clock_ + result.duration, a.id});
      in_flight_[a.id] = {std::move(current), std::move(result), clock_};
      rec.max_in_flight = std::max(rec.max_in_flight, in_flight_.size());
    }
  };

  dispatch();
  while (!events.empty() && status_ == RunStatus::kContinue)
  {
    const auto [finish, id] = *events.begin();
    if (config_.max_wall > 0 && finish > config_.max_wall)
    {
      clock_ = std::max(clock_, config_.max_wall);
      status_ = RunStatus::kMaxWall;
      break;
    }
    events.erase(events.begin());
    clock_ = finish;
    const InFlight& f = in_flight_.at(id);
    Completion c;
    c.action_id = id;
    c.start_time = f.start;
    c.finish_time = finish;
    for (const auto& o : f.result.outcomes)
    {
      c.outcome += (c.outcome.empty() ? "" : "+") + o.outcome;
    }
    on_completion(id);
    rec.completions.push_back(std::move(c));
    if (check_termination(net_, models_, config_.termination_belief) == RunStatus::kTerminated)
    {
      status_ = RunStatus::kTerminated;
      break;
    }
    dispatch();
  }

  for (const auto& [finish, id] : events)
  {
    (void)finish;
    rec.completions.push_back({id, "CANCELLED", in_flight_.at(id).start, clock_, true});
    in_flight_.erase(id);
  }
  for (const auto& a : pending)
  {
    rec.completions.push_back({a.id, "CANCELLED", clock_, clock_, true});
  }

  if (status_ == RunStatus::kContinue)
  {
    if (config_.max_wall > 0 && clock_ >= config_.max_wall)
    {
      status_ = RunStatus::kMaxWall;
    }
    else if (step_ >= config_.max_steps)
    {
      status_ = RunStatus::kStepLimit;
    }
  }
  rec.end_time = clock_;
  rec.status = status_;
  rec.beliefs_after = net_.snapshot();
  return rec;
}

Report Controller::finish(std::vector<StepRecord> steps, RunStatus status) const
{
  Report report;
  report.steps = std::move(steps);
  report.status = status;
  report.simulated_time = clock_;
  double best = -1.0;
  for (NodeId id : net_.node_ids())
  {
    const BayesNode& node = net_.node(id);
    auto& row = report.final_beliefs[to_string(id)];
    for (size_t i = 0; i < node.belief.size(); ++i)
    {
      row[node.hypotheses.labels()[i]] = node.belief[i];
    }
    if (node.model_refs.empty() || !models_.is_goal_group(group_of(id)))
    {
      continue;
    }
    const auto top = std::max_element(node.belief.begin(), node.belief.end());
    if (*top > best)
    {
      best = *top;
      report.goal_node = id;
      report.winner = node.hypotheses.labels()[static_cast<size_t>(top - node.belief.begin())];
    }
  }
  return report;
}

Report Controller::run()
{
  std::vector<StepRecord> steps;
  if (status_ == RunStatus::kContinue)
  {
    status_ = check_termination(net_, models_, config_.termination_belief);
  }
  while (status_ == RunStatus::kContinue)
  {
    steps.push_back(run_step());
  }
  return finish(std::move(steps), status_);
}

Report Controller::replay(const std::vector<std::vector<std::string>>& plans)
{
  std::vector<StepRecord> steps;
  if (status_ == RunStatus::kContinue)
  {
    status_ = check_termination(net_, models_, config_.termination_belief);
  }
  for (const auto& plan : plans)
  {
    if (status_ != RunStatus::kContinue)
    {
      break;
    }
    steps.push_back(run_step(plan));
  }
  return finish(std::move(steps), status_);
}

}  // namespace percept
