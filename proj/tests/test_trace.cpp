#include <gtest/gtest.h>

#include <sstream>

#include "percept/trace.hpp"
#include "support.hpp"

using namespace percept;

namespace
{
TraceRow row(size_t step, int64_t cost, int64_t start, int64_t finish)
{
  return {step, "SEARCH", "B1", 0.5, cost, "match", finish, start};
}
}  // namespace

TEST(Trace, RoundTrip)
{
  auto s = load_scenario(testing_support::scenario_path("brigade.json"));
  Controller c(s);
  auto r = c.run();
  auto rows = trace_rows(r.steps);
  ASSERT_FALSE(rows.empty());
  std::ostringstream out;
  write_trace(out, rows);
  std::istringstream in(out.str());
  auto back = read_trace(in);
  EXPECT_EQ(back, rows);
  std::ostringstream again;
  write_trace(again, back);
  EXPECT_EQ(again.str(), out.str());
}

TEST(Trace, FormatNumberIsExact)
{
  for (double x : {0.1, 1.0 / 3, 11522.0, 1e-300, 0.99312542569662221})
  {
    EXPECT_EQ(std::stod(format_number(x)), x);
  }
}

TEST(Trace, RejectsMalformed)
{
  std::istringstream no_header("1\tSEARCH\tB1\t0.5\t10\tmatch\t10\t0\n");
  EXPECT_THROW(read_trace(no_header), std::invalid_argument);
  std::istringstream short_row("step\taction_kind\ttarget\tvalue\tcost\toutcome\tfinish_time\tstart_time\n1\tSEARCH\n");
  EXPECT_THROW(read_trace(short_row), std::invalid_argument);
  std::istringstream bad_number(
      "step\taction_kind\ttarget\tvalue\tcost\toutcome\tfinish_time\tstart_time\n1\tSEARCH\tB1\tx\t10\tm\t10\t0\n");
  EXPECT_THROW(read_trace(bad_number), std::invalid_argument);
}

TEST(Trace, PlansJson)
{
  std::vector<std::vector<std::string>> plans{{"a@B1", "b@B2"}, {}, {"c@B3"}};
  EXPECT_EQ(plans_from_json(plans_to_json(plans)), plans);
  EXPECT_THROW(plans_from_json(Json::object()), std::invalid_argument);
}

TEST(Audit, CleanTrace)
{
  std::vector<TraceRow> rows{row(1, 10, 0, 10), row(1, 10, 0, 10), row(1, 5, 10, 15), row(2, 20, 15, 35)};
  auto a = audit_trace(rows, 2, 25);
  EXPECT_TRUE(a.ok);
  EXPECT_EQ(a.max_in_flight, 2u);
  EXPECT_EQ(a.max_step_cost, 25);
}

TEST(Audit, FlagsOverlapAndOverspend)
{
  std::vector<TraceRow> rows{row(1, 10, 0, 10), row(1, 10, 0, 10), row(1, 10, 5, 15)};
  auto a = audit_trace(rows, 2, 25);
  EXPECT_FALSE(a.ok);
  EXPECT_EQ(a.max_in_flight, 3u);
  EXPECT_EQ(a.violations.size(), 2u);
  std::vector<TraceRow> backwards{row(1, 10, 10, 5)};
  EXPECT_FALSE(audit_trace(backwards, 1, 100).ok);
}
