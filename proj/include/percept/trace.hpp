#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "percept/controller.hpp"

namespace percept
{
/// One row of the run trace: a selected action and how it ended.
struct TraceRow
{
  size_t step = 0;
  std::string action_kind;
  // Node ids joined with '+'.
  std::string target;
  double value = 0.0;
  int64_t cost = 0;
  std::string outcome;
  int64_t finish_time = 0;
  int64_t start_time = 0;

  bool operator==(const TraceRow&) const = default;
};

/// Shortest text that reads back to the same double.
std::string format_number(double x);

std::vector<TraceRow> trace_rows(const std::vector<StepRecord>& steps);

/// Columns: step, action_kind, target, value, cost, outcome, finish_time,
/// start_time.
void write_trace(std::ostream& out, const std::vector<TraceRow>& rows);
/// Throws std::invalid_argument on a malformed trace.
std::vector<TraceRow> read_trace(std::istream& in);

/// Columns: step, action, kind, target, value, cost, selected.
void write_candidates(std::ostream& out, const std::vector<StepRecord>& steps);

/// Selected action ids per step, in dispatch order.
std::vector<std::vector<std::string>> recorded_plans(const std::vector<StepRecord>& steps);
Json plans_to_json(const std::vector<std::vector<std::string>>& plans);
std::vector<std::vector<std::string>> plans_from_json(const Json& doc);

struct AuditResult
{
  bool ok = true;
  size_t max_in_flight = 0;
  int64_t max_step_cost = 0;
  std::vector<std::string> violations;
};

/// Checks that no instant has more than `processors` actions running and no
/// step selects more than `budget` worth of actions.
AuditResult audit_trace(const std::vector<TraceRow>& rows, int processors, int64_t budget);

}  // namespace percept
