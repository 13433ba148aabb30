#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "percept/cli.hpp"
#include "percept/trace.hpp"
#include "support.hpp"

using namespace percept;
namespace fs = std::filesystem;

namespace
{
struct CliResult
{
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args)
{
  args.insert(args.begin(), "percept");
  std::vector<const char*> argv;
  for (const auto& a : args)
  {
    argv.push_back(a.c_str());
  }
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string brigade()
{
  return testing_support::scenario_path("brigade.json").string();
}

fs::path scratch(const std::string& name)
{
  auto p = fs::temp_directory_path() / ("percept_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class EnvGuard
{
public:
  explicit EnvGuard(const char* value)
  {
    if (value)
    {
      setenv("PERCEPT_SEED", value, 1);
    }
    else
    {
      unsetenv("PERCEPT_SEED");
    }
  }
  ~EnvGuard() { unsetenv("PERCEPT_SEED"); }
};
}  // namespace

TEST(Cli, RunBrigade)
{
  EnvGuard env(nullptr);
  auto dir = scratch("run");
  auto r = cli({"run", "--scenario", brigade(), "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("terminated"), std::string::npos);
  auto report = Json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(report["winner"], "brigade");
  EXPECT_TRUE(fs::exists(dir / "trace.tsv"));
  EXPECT_TRUE(fs::exists(dir / "candidates.tsv"));
  EXPECT_TRUE(fs::exists(dir / "plans.json"));
  EXPECT_FALSE(fs::exists(dir / "beliefs.jsonl"));
  std::istringstream trace(slurp(dir / "trace.tsv"));
  EXPECT_NO_THROW(read_trace(trace));
}

TEST(Cli, RunIsByteIdentical)
{
  EnvGuard env(nullptr);
  auto a = scratch("same_a");
  auto b = scratch("same_b");
  cli({"run", "--scenario", brigade(), "--out", a.string(), "--trace-level", "2"});
  cli({"run", "--scenario", brigade(), "--out", b.string(), "--trace-level", "2"});
  for (const char* f : {"trace.tsv", "report.json", "candidates.tsv", "plans.json", "beliefs.jsonl"})
  {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_FALSE(slurp(a / f).empty()) << f;
  }
}

TEST(Cli, SeedPrecedence)
{
  auto flag = scratch("seed_flag");
  auto env_dir = scratch("seed_env");
  auto plain = scratch("seed_plain");
  {
    EnvGuard env("77");
    cli({"run", "--scenario", brigade(), "--out", env_dir.string()});
    cli({"run", "--scenario", brigade(), "--out", flag.string(), "--seed", "1988"});
  }
  {
    EnvGuard env(nullptr);
    cli({"run", "--scenario", brigade(), "--out", plain.string()});
  }
  EXPECT_EQ(slurp(flag / "trace.tsv"), slurp(plain / "trace.tsv"));
  EXPECT_NE(slurp(env_dir / "trace.tsv"), slurp(plain / "trace.tsv"));
  EnvGuard bad("abc");
  EXPECT_EQ(cli({"run", "--scenario", brigade(), "--out", plain.string()}).code, 1);
}

TEST(Cli, RunFailures)
{
  EnvGuard env(nullptr);
  auto dir = scratch("fail");
  fs::create_directories(dir);
  std::ofstream(dir / "broken.json") << "{ not json";
  auto r = cli({"run", "--scenario", (dir / "broken.json").string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error"), std::string::npos);
  EXPECT_EQ(cli({"run", "--scenario", brigade(), "--budget", "0", "--out", dir.string()}).code, 2);
  EXPECT_EQ(cli({"run", "--out", dir.string()}).code, 1);
  EXPECT_EQ(cli({"run", "--scenario", brigade(), "--trace-level", "5"}).code, 1);
  EXPECT_EQ(cli({"fly"}).code, 1);
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, Sweep)
{
  EnvGuard env(nullptr);
  auto r = cli({"sweep", "--scenario", brigade(), "0", "5000", "10000", "1000000"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("minimum_budget\t5000"), std::string::npos) << r.out;
  auto again = cli({"sweep", "--scenario", brigade(), "0", "5000", "10000", "1000000"});
  EXPECT_EQ(again.out, r.out);
  EXPECT_EQ(cli({"sweep", "--scenario", brigade()}).code, 1);
  EXPECT_EQ(cli({"sweep", "--scenario", brigade(), "10", "5"}).code, 1);
}

TEST(Cli, Knapsack)
{
  auto dir = scratch("knap");
  fs::create_directories(dir);
  KnapsackInstance inst{testing_support::step1_items(), 5722};
  std::ofstream(dir / "step1.json") << inst.to_json().dump();
  auto all = cli({"knapsack", (dir / "step1.json").string(), "--exact"});
  EXPECT_EQ(all.code, 0);
  EXPECT_EQ(Json::parse(all.out)["selected"].size(), 6u);
  auto tight = cli({"knapsack", (dir / "step1.json").string(), "--budget", "1600"});
  EXPECT_EQ(Json::parse(tight.out)["selected"], Json::array({"refine_type"}));
  auto approx = cli({"knapsack", (dir / "step1.json").string(), "--epsilon", "0.1", "--budget", "2442"});
  EXPECT_EQ(Json::parse(approx.out)["selected"].size(), 2u);
  std::ofstream(dir / "empty.json") << R"({"budget_T": 100, "items": []})";
  auto empty = cli({"knapsack", (dir / "empty.json").string()});
  EXPECT_EQ(empty.code, 0);
  EXPECT_TRUE(Json::parse(empty.out)["selected"].empty());
  EXPECT_EQ(cli({"knapsack", (dir / "step1.json").string(), "--epsilon", "2"}).code, 1);
  EXPECT_EQ(cli({"knapsack", (dir / "step1.json").string(), "--exact", "--epsilon", "0.1"}).code, 1);
}

TEST(Cli, Validate)
{
  EnvGuard env(nullptr);
  auto r = cli({"validate", "--scenario", brigade()});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("ok:", 0), 0u);
  EXPECT_EQ(cli({"validate", "--scenario", "/nonexistent.json"}).code, 1);
}
