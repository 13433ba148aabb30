#include "percept/scenario.hpp"

#include <cmath>
#include <fstream>

namespace percept
{
namespace
{
int64_t integral(const Json& v, const char* what)
{
  if (v.is_number_integer())
  {
    return v.get<int64_t>();
  }
  if (v.is_number_float())
  {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e18)
    {
      return static_cast<int64_t>(d);
    }
  }
  throw ScenarioError("control", std::string(what) + " must be an integer");
}

double real(const Json& v, const char* what)
{
  if (!v.is_number())
  {
    throw ScenarioError("control", std::string(what) + " must be a number");
  }
  return v.get<double>();
}

}  // namespace

ControlConfig ControlConfig::from_json(const Json& doc)
{
  if (!doc.is_object())
  {
    throw ScenarioError("control", "must be an object");
  }
  ControlConfig c;
  if (!doc.contains("budget_T"))
  {
    throw ScenarioError("control", "missing required key 'budget_T'");
  }
  c.budget_T = integral(doc.at("budget_T"), "budget_T");
  if (doc.contains("epsilon"))
  {
    c.epsilon = real(doc.at("epsilon"), "epsilon");
  }
  if (doc.contains("processors"))
  {
    c.processors = static_cast<int>(integral(doc.at("processors"), "processors"));
  }
  if (doc.contains("termination_belief") && doc.contains("termination_ratio"))
  {
    throw ScenarioError("control", "give termination_belief or termination_ratio, not both");
  }
  if (doc.contains("termination_belief"))
  {
    c.termination_belief = real(doc.at("termination_belief"), "termination_belief");
  }
  if (doc.contains("termination_ratio"))
  {
    const double r = real(doc.at("termination_ratio"), "termination_ratio");
    if (!(r > 1.0) || !std::isfinite(r))
    {
      throw ScenarioError("control", "termination_ratio must be a finite number above 1");
    }
    c.termination_belief = r / (1.0 + r);
  }
  if (doc.contains("max_wall"))
  {
    c.max_wall = integral(doc.at("max_wall"), "max_wall");
  }
  if (doc.contains("seed"))
  {
    c.seed = static_cast<uint64_t>(integral(doc.at("seed"), "seed"));
  }
  if (doc.contains("value_mode"))
  {
    try
    {
      c.value_mode = parse_value_mode(doc.at("value_mode").get<std::string>());
    }
    catch (const std::exception& ex)
    {
      throw ScenarioError("control", ex.what());
    }
  }
  if (doc.contains("cost_jitter"))
  {
    c.cost_jitter = real(doc.at("cost_jitter"), "cost_jitter");
  }
  if (doc.contains("max_steps"))
  {
    c.max_steps = static_cast<size_t>(integral(doc.at("max_steps"), "max_steps"));
  }
  try
  {
    c.validate();
  }
  catch (const std::invalid_argument& ex)
  {
    throw ScenarioError("control", ex.what());
  }
  return c;
}

Json ControlConfig::to_json() const
{
  return {{"budget_T", budget_T},
          {"epsilon", epsilon},
          {"processors", processors},
          {"termination_belief", termination_belief},
          {"max_wall", max_wall},
          {"seed", seed},
          {"value_mode", to_string(value_mode)},
          {"cost_jitter", cost_jitter},
          {"max_steps", max_steps}};
}

void ControlConfig::validate() const
{
  if (budget_T < 0)
  {
    throw std::invalid_argument("budget_T must be nonnegative");
  }
  if (!(epsilon >= 0.0 && epsilon < 1.0))
  {
    throw std::invalid_argument("epsilon must lie in [0, 1)");
  }
  if (processors < 1)
  {
    throw std::invalid_argument("processors must be at least 1");
  }
  if (!(termination_belief > 0.5 && termination_belief <= 1.0))
  {
    throw std::invalid_argument("termination_belief must lie in (0.5, 1]");
  }
  if (max_wall < 0)
  {
    throw std::invalid_argument("max_wall must be nonnegative");
  }
  if (!(cost_jitter >= 0.0 && cost_jitter < 1.0))
  {
    throw std::invalid_argument("cost_jitter must lie in [0, 1)");
  }
}

Scenario parse_scenario(const Json& doc)
{
  if (!doc.is_object())
  {
    throw ScenarioError("scenario", "document must be a JSON object");
  }
  for (const char* key : {"models", "cpts", "outcome_tables", "actions", "goal_values", "world", "control"})
  {
    if (!doc.contains(key))
    {
      throw ScenarioError("scenario", std::string("missing required section '") + key + "'");
    }
  }
  ModelBase models = ModelBase::from_json(doc);
  WorldSpec world = WorldSpec::from_json(doc.at("world"), models);
  ControlConfig control = ControlConfig::from_json(doc.at("control"));
  return {std::move(models), std::move(world), control};
}

Scenario load_scenario(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw ScenarioError(path.string(), "cannot open file");
  }
  Json doc;
  try
  {
    doc = Json::parse(in);
  }
  catch (const Json::parse_error& ex)
  {
    throw ScenarioError(path.string(), std::string("parse error: ") + ex.what());
  }
  return parse_scenario(doc);
}

}  // namespace percept
