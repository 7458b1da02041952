#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "jarcast/cli.hpp"
#include "jarcast/data.hpp"
#include "test_util.hpp"

using namespace jarcast;
using jarcast::testing::slurp;
using jarcast::testing::spit;
using jarcast::testing::TempDir;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return CliRun{code, out.str(), err.str()};
}

std::string write_sine(const TempDir& dir, const std::string& name, std::size_t length, std::uint64_t seed = 2) {
  std::ostringstream s;
  write_values(s, synthetic_sine(length, 12, 0.1, seed));
  const std::string path = dir.file(name);
  spit(path, s.str());
  return path;
}

CliRun train_small(const std::string& data, const std::string& ckpt, int epochs = 2) {
  return cli({"train", "--data", data, "--out", ckpt, "--history-len", "6", "--d-model", "8", "--n-head", "2",
              "--batch-size", "4", "--epochs", std::to_string(epochs), "--seed", "3"});
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Cli, MissingDataFileIsNamed) {
  const CliRun r = cli({"train", "--data", "/nonexistent/trace.csv", "--epochs", "1"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("/nonexistent/trace.csv"), std::string::npos) << r.err;
}

TEST(Cli, UnknownCommandFails) {
  EXPECT_NE(cli({"fly"}).code, 0);
  EXPECT_NE(cli({}).code, 0);
}

TEST(Cli, TrainWritesCheckpointHistoryAndManifest) {
  TempDir dir("cli-train");
  const std::string data = write_sine(dir, "s.csv", 60);
  const CliRun r = train_small(data, dir.file("m.ckpt"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("# jarcast 0.1.0 command=train seed=3 config_hash=", 0), 0u) << r.out;
  EXPECT_NE(r.out.find("best_epoch:"), std::string::npos);
  EXPECT_EQ(count_lines(slurp(dir.file("m.ckpt.history.csv"))), 3u);
  EXPECT_NE(slurp(dir.file("m.ckpt.manifest")).find("history_len: 6"), std::string::npos);
}

TEST(Cli, TrainTwiceIsBitwiseIdentical) {
  TempDir dir("cli-twice");
  const std::string data = write_sine(dir, "s.csv", 60);
  ASSERT_EQ(train_small(data, dir.file("a.ckpt")).code, 0);
  ASSERT_EQ(train_small(data, dir.file("b.ckpt")).code, 0);
  EXPECT_EQ(slurp(dir.file("a.ckpt")), slurp(dir.file("b.ckpt")));
  EXPECT_EQ(slurp(dir.file("a.ckpt.history.csv")), slurp(dir.file("b.ckpt.history.csv")));
}

TEST(Cli, ConstantTrainingSegmentWarns) {
  TempDir dir("cli-flat");
  std::string flat;
  for (int i = 0; i < 60; ++i) flat += "5\n";
  spit(dir.file("flat.csv"), flat);
  const CliRun r = train_small(dir.file("flat.csv"), dir.file("m.ckpt"), 1);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning: training segment is constant"), std::string::npos) << r.err;
}

TEST(Cli, PredictOneRowPerWindow) {
  TempDir dir("cli-predict");
  const std::string data = write_sine(dir, "s.csv", 60);
  ASSERT_EQ(train_small(data, dir.file("m.ckpt"), 1).code, 0);
  // A series of exactly n values has one window.
  std::string six;
  for (int i = 0; i < 6; ++i) six += std::to_string(90 + i) + "\n";
  spit(dir.file("six.csv"), six);
  const CliRun one = cli({"predict", "--checkpoint", dir.file("m.ckpt"), "--data", dir.file("six.csv")});
  ASSERT_EQ(one.code, 0) << one.err;
  EXPECT_NE(one.out.find("window,step,predicted\n0,1,"), std::string::npos) << one.out;
  EXPECT_EQ(count_lines(one.out), 3u);  // header comment, column header, one row

  const CliRun all = cli({"predict", "--checkpoint", dir.file("m.ckpt"), "--data", data});
  ASSERT_EQ(all.code, 0);
  EXPECT_EQ(count_lines(all.out), 2u + 55u);
}

TEST(Cli, HorizonNeedsRecursive) {
  TempDir dir("cli-horizon");
  const std::string data = write_sine(dir, "s.csv", 60);
  ASSERT_EQ(train_small(data, dir.file("m.ckpt"), 1).code, 0);
  const CliRun refused = cli({"predict", "--checkpoint", dir.file("m.ckpt"), "--data", data, "--horizon", "3"});
  EXPECT_NE(refused.code, 0);
  EXPECT_NE(refused.err.find("--recursive"), std::string::npos) << refused.err;
  const CliRun ok =
      cli({"predict", "--checkpoint", dir.file("m.ckpt"), "--data", data, "--horizon", "3", "--recursive"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(count_lines(ok.out), 2u + 3u * 55u);
}

TEST(Cli, EvaluateReportsAndRefusesMismatchedData) {
  TempDir dir("cli-eval");
  const std::string data = write_sine(dir, "s.csv", 60);
  ASSERT_EQ(train_small(data, dir.file("m.ckpt"), 1).code, 0);
  const CliRun r = cli({"evaluate", "--checkpoint", dir.file("m.ckpt"), "--data", data, "--csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("mape"), std::string::npos) << r.out;

  const std::string other = write_sine(dir, "o.csv", 60, 9);
  const CliRun bad = cli({"evaluate", "--checkpoint", dir.file("m.ckpt"), "--data", other});
  EXPECT_NE(bad.code, 0);
  EXPECT_NE(bad.err.find("does not match"), std::string::npos) << bad.err;
  EXPECT_NE(bad.err.find("dataset manifest"), std::string::npos) << bad.err;
}

TEST(Cli, SimulatePerfectForecastHasNoErrors) {
  TempDir dir("cli-sim");
  spit(dir.file("f.csv"), "interval,predicted\n0,3\n1,5\n2,0\n");
  spit(dir.file("a.csv"), "interval,count\n0,3\n1,5\n2,0\n");
  const CliRun r = cli({"simulate", "--forecast", dir.file("f.csv"), "--actual", dir.file("a.csv"), "--csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("under_rate_percent: 0"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("over_rate_percent: 0"), std::string::npos) << r.out;

  spit(dir.file("short.csv"), "interval,count\n0,3\n");
  EXPECT_NE(cli({"simulate", "--forecast", dir.file("f.csv"), "--actual", dir.file("short.csv")}).code, 0);
}

TEST(Cli, SimulateFromCheckpoint) {
  TempDir dir("cli-simck");
  const std::string data = write_sine(dir, "s.csv", 60);
  ASSERT_EQ(train_small(data, dir.file("m.ckpt"), 1).code, 0);
  const CliRun r = cli({"simulate", "--checkpoint", dir.file("m.ckpt"), "--data", data});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("rate_definition: count-based"), std::string::npos) << r.out;
}

TEST(Cli, IngestEventsToCounts) {
  TempDir dir("cli-ingest");
  spit(dir.file("ev.csv"), "t\n0\n30\n70\n130\n");
  const CliRun r = cli({"ingest", "--input", dir.file("ev.csv"), "--format", "events", "--interval-minutes", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("2\n1\n1\n"), std::string::npos) << r.out;
}

TEST(Cli, OnePointGridSearch) {
  TempDir dir("cli-grid");
  const std::string data = write_sine(dir, "s.csv", 80);
  spit(dir.file("g.ini"),
       "[grid]\nhistory_lens = 6\nbatch_sizes = 4\nd_models = 8\nn_heads = 2\n[train]\nepochs = 1\nseed = 1\n");
  const CliRun r = cli({"grid-search", "--config", dir.file("g.ini"), "--data", data, "--checkpoint", dir.file("b.ckpt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("best: index=0 history_len=6 batch_size=4 d_model=8 n_head=2"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("checkpoint: "), std::string::npos);
  const CliRun eval = cli({"evaluate", "--checkpoint", dir.file("b.ckpt"), "--data", data});
  EXPECT_EQ(eval.code, 0) << eval.err;
}
