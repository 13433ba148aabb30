#include "percept/trace.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace percept
{
namespace
{
const char* const kTraceHeader = "step\taction_kind\ttarget\tvalue\tcost\toutcome\tfinish_time\tstart_time";

std::string targets_of(const ActionInstance& a)
{
  std::string out;
  for (NodeId t : a.targets)
  {
    out += (out.empty() ? "" : "+") + to_string(t);
  }
  return out;
}

std::vector<std::string> split_tabs(const std::string& line)
{
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t'))
  {
    out.push_back(field);
  }
  if (!line.empty() && line.back() == '\t')
  {
    out.emplace_back();
  }
  return out;
}

int64_t to_int(const std::string& s, size_t line)
{
  size_t used = 0;
  int64_t v = 0;
  try
  {
    v = std::stoll(s, &used);
  }
  catch (const std::exception&)
  {
    used = 0;
  }
  if (used == 0 || used != s.size())
  {
    throw std::invalid_argument("trace line " + std::to_string(line) + ": bad integer '" + s + "'");
  }
  return v;
}

double to_double(const std::string& s, size_t line)
{
  size_t used = 0;
  double v = 0.0;
  try
  {
    v = std::stod(s, &used);
  }
  catch (const std::exception&)
  {
    used = 0;
  }
  if (used == 0 || used != s.size())
  {
    throw std::invalid_argument("trace line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::string format_number(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<TraceRow> trace_rows(const std::vector<StepRecord>& steps)
{
  std::vector<TraceRow> rows;
  for (const auto& rec : steps)
  {
    for (const auto& c : rec.completions)
    {
      auto it = std::find_if(rec.plan.begin(), rec.plan.end(),
                             [&](const ActionInstance& a) { return a.id == c.action_id; });
      if (it == rec.plan.end())
      {
        throw std::logic_error("completion of unplanned action " + c.action_id);
      }
      rows.push_back(
          {rec.step, to_string(it->kind), targets_of(*it), it->value, it->cost, c.outcome, c.finish_time, c.start_time});
    }
  }
  return rows;
}

void write_trace(std::ostream& out, const std::vector<TraceRow>& rows)
{
  out << kTraceHeader << '\n';
  for (const auto& r : rows)
  {
    out << r.step << '\t' << r.action_kind << '\t' << r.target << '\t' << format_number(r.value) << '\t' << r.cost
        << '\t' << r.outcome << '\t' << r.finish_time << '\t' << r.start_time << '\n';
  }
}

std::vector<TraceRow> read_trace(std::istream& in)
{
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
  {
    throw std::invalid_argument("trace header missing or unexpected");
  }
  std::vector<TraceRow> rows;
  size_t n = 1;
  while (std::getline(in, line))
  {
    ++n;
    if (line.empty())
    {
      continue;
    }
    auto f = split_tabs(line);
    if (f.size() != 8)
    {
      throw std::invalid_argument("trace line " + std::to_string(n) + ": expected 8 columns, got " +
                                  std::to_string(f.size()));
    }
    TraceRow r;
    r.step = static_cast<size_t>(to_int(f[0], n));
    r.action_kind = f[1];
    r.target = f[2];
    r.value = to_double(f[3], n);
    r.cost = to_int(f[4], n);
    r.outcome = f[5];
    r.finish_time = to_int(f[6], n);
    r.start_time = to_int(f[7], n);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_candidates(std::ostream& out, const std::vector<StepRecord>& steps)
{
  out << "step\taction\tkind\ttarget\tvalue\tcost\tselected\n";
  for (const auto& rec : steps)
  {
    for (const auto& a : rec.candidates)
    {
      const bool selected = std::any_of(rec.plan.begin(), rec.plan.end(),
                                        [&](const ActionInstance& p) { return p.id == a.id; });
      out << rec.step << '\t' << a.id << '\t' << to_string(a.kind) << '\t' << targets_of(a) << '\t'
          << format_number(a.value) << '\t' << a.cost << '\t' << (selected ? 1 : 0) << '\n';
    }
  }
}

std::vector<std::vector<std::string>> recorded_plans(const std::vector<StepRecord>& steps)
{
  std::vector<std::vector<std::string>> plans;
  for (const auto& rec : steps)
  {
    std::vector<std::string> ids;
    for (const auto& a : rec.plan)
    {
      ids.push_back(a.id);
    }
    plans.push_back(std::move(ids));
  }
  return plans;
}

Json plans_to_json(const std::vector<std::vector<std::string>>& plans)
{
  Json doc = Json::array();
  for (const auto& p : plans)
  {
    doc.push_back(p);
  }
  return doc;
}

std::vector<std::vector<std::string>> plans_from_json(const Json& doc)
{
  if (!doc.is_array())
  {
    throw std::invalid_argument("recorded plans must be an array of arrays of action ids");
  }
  std::vector<std::vector<std::string>> plans;
  for (const auto& p : doc)
  {
    plans.push_back(p.get<std::vector<std::string>>());
  }
  return plans;
}

AuditResult audit_trace(const std::vector<TraceRow>& rows, int processors, int64_t budget)
{
  AuditResult result;
  std::map<size_t, int64_t> step_cost;
  // (time, +1 start / -1 end); ends sort first so back-to-back actions do
  // not overlap.
  std::vector<std::pair<int64_t, int>> events;
  for (const auto& r : rows)
  {
    step_cost[r.step] += r.cost;
    if (r.finish_time < r.start_time)
    {
      result.violations.push_back("step " + std::to_string(r.step) + ": " + r.action_kind + " on " + r.target +
                                  " finishes before it starts");
    }
    if (r.finish_time > r.start_time)
    {
      events.push_back({r.start_time, +1});
      events.push_back({r.finish_time, -1});
    }
  }
  std::sort(events.begin(), events.end());
  int64_t running = 0;
  for (const auto& [t, delta] : events)
  {
    running += delta;
    result.max_in_flight = std::max(result.max_in_flight, static_cast<size_t>(std::max<int64_t>(running, 0)));
    if (running > processors)
    {
      result.violations.push_back("t=" + std::to_string(t) + ": " + std::to_string(running) +
                                  " actions in flight on " + std::to_string(processors) + " processors");
    }
  }
  for (const auto& [step, cost] : step_cost)
  {
    result.max_step_cost = std::max(result.max_step_cost, cost);
    if (cost > budget)
    {
      result.violations.push_back("step " + std::to_string(step) + " selects " + std::to_string(cost) +
                                  " ms against a budget of " + std::to_string(budget));
    }
  }
  result.ok = result.violations.empty();
  return result;
}

}  // namespace percept
