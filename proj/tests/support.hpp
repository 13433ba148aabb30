#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "oracles/joint_enumeration.hpp"
#include "percept/bayes_net.hpp"
#include "percept/planner.hpp"

namespace testing_support
{
inline std::filesystem::path scenario_path(const std::string& name)
{
  return std::filesystem::path(PERCEPT_SCENARIO_DIR) / name;
}

/// Step-1 values and costs of the published brigade run.
inline std::vector<percept::KnapsackItem> step1_items()
{
  return {{"refine_type", 11522, 1600}, {"search", 5761, 842},  {"terrain_a", 1125, 820},
          {"terrain_b", 769, 820},      {"terrain_c", 769, 820}, {"terrain_d", 217, 820}};
}

inline std::vector<double> random_distribution(std::mt19937_64& rng, size_t n, double floor = 0.02)
{
  std::uniform_real_distribution<double> u(floor, 1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& x : p)
  {
    x = u(rng);
    s += x;
  }
  for (auto& x : p)
  {
    x /= s;
  }
  return p;
}

inline std::vector<std::string> labels_of(size_t n)
{
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i)
  {
    out.push_back("h" + std::to_string(i));
  }
  return out;
}

/// A random polytree held both as a BayesNet and as an oracle description.
struct RandomPolytree
{
  percept::BayesNet net;
  std::vector<percept::NodeId> ids;
  std::vector<oracle::Node> spec;
};

inline RandomPolytree random_polytree(std::mt19937_64& rng, size_t max_nodes = 8, size_t max_labels = 4)
{
  RandomPolytree t;
  std::uniform_int_distribution<size_t> count(1, max_nodes);
  std::uniform_int_distribution<size_t> labels(2, max_labels);
  const size_t n = count(rng);
  std::vector<size_t> sizes(n);
  for (auto& s : sizes)
  {
    s = labels(rng);
  }
  t.spec.resize(n);
  for (size_t i = 0; i < n; ++i)
  {
    t.spec[i].prior = random_distribution(rng, sizes[i]);
    t.ids.push_back(t.net.instantiate_node(percept::HypothesisSet(labels_of(sizes[i]), t.spec[i].prior)));
  }
  // Tree skeleton: node i hangs off a random earlier node, edge direction at
  // random.
  std::bernoulli_distribution coin(0.5);
  for (size_t i = 1; i < n; ++i)
  {
    const size_t other = std::uniform_int_distribution<size_t>(0, i - 1)(rng);
    const bool down = coin(rng);
    const size_t parent = down ? other : i;
    const size_t child = down ? i : other;
    percept::ConditionalTable table;
    table.id = "t" + std::to_string(parent) + "_" + std::to_string(child);
    table.parent_labels = labels_of(sizes[parent]);
    table.child_labels = labels_of(sizes[child]);
    for (size_t r = 0; r < sizes[parent]; ++r)
    {
      table.rows.push_back(random_distribution(rng, sizes[child]));
    }
    t.net.link(t.ids[parent], t.ids[child], table);
    t.spec[child].parents.push_back(parent);
    t.spec[child].tables.push_back(table.rows);
  }
  return t;
}

/// Random evidence on some nodes; attached to both representations.
inline std::vector<std::pair<size_t, std::vector<double>>> random_evidence(std::mt19937_64& rng, RandomPolytree& t)
{
  std::vector<std::pair<size_t, std::vector<double>>> ev;
  std::bernoulli_distribution pick(0.4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (size_t i = 0; i < t.spec.size(); ++i)
  {
    const size_t reps = pick(rng) ? (pick(rng) ? 2 : 1) : 0;
    for (size_t r = 0; r < reps; ++r)
    {
      std::vector<double> lik(t.spec[i].size());
      for (auto& x : lik)
      {
        x = 0.05 + u(rng);
      }
      ev.push_back({i, lik});
    }
  }
  return ev;
}

}  // namespace testing_support
