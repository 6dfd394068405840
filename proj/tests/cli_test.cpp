// Copyright 2026 The L2G Retrieval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "l2g/cli.hpp"
#include "test_util.hpp"

namespace l2g {
namespace {

using testing::read_bytes;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "l2g");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// One small benchmark, indexed once for every test in this file.
class CliFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir;
    ASSERT_EQ(run_cli({"synth", "--out", dir_->path(), "--seed", "5", "--n-db", "120", "--n-queries", "6",
                       "--n-distractors", "40"})
                  .code,
              0);
    ASSERT_EQ(run_cli({"build-index", "--manifest", file("manifest.json"), "--out", file("exact.l2gi")}).code, 0);
    ASSERT_EQ(run_cli({"sparse", "--index", file("exact.l2gi"), "--k-nn", "30", "--out", file("nn.l2gd")}).code, 0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  static std::string file(const std::string& name) { return dir_->file(name); }

  static std::vector<std::string> inputs(bool with_globals = true) {
    std::vector<std::string> args{"--index", file("exact.l2gi"), "--sparse", file("nn.l2gd"),
                                  "--queries", file("queries.l2gf"), "--k-mds", "20", "--M", "40",
                                  "--dim", "8", "--threads", "1"};
    if (with_globals) args.insert(args.end(), {"--globals", file("db.l2gg"), file("queries.l2gg")});
    return args;
  }

  static std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }

  static nlohmann::json query_json(const std::vector<std::string>& extra, bool with_globals = true) {
    const auto r = run_cli(cat(cat({"query", "--no-timing"}, inputs(with_globals)), extra));
    EXPECT_EQ(r.code, 0) << r.err;
    return nlohmann::json::parse(r.out);
  }

  static testing::TempDir* dir_;
};

testing::TempDir* CliFixture::dir_ = nullptr;

TEST_F(CliFixture, MissingFeaturesIsUsageError) {
  const auto r = run_cli({"build-index", "--out", file("x.l2gi")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--features"), std::string::npos);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
}

TEST_F(CliFixture, LibraryErrorsMapToCodes) {
  EXPECT_EQ(run_cli({"build-index", "--features", file("nope.l2gf"), "--out", file("x.l2gi")}).code,
            cli::exit_code(ErrorCode::kIoFailure));
  EXPECT_EQ(run_cli({"sparse", "--index", file("exact.l2gi"), "--k-nn", "160", "--out", file("x.l2gd")}).code,
            cli::exit_code(ErrorCode::kKTooLarge));
}

TEST_F(CliFixture, ApproximateIndexIsReproducible) {
  for (const char* name : {"a1.l2gi", "a2.l2gi"}) {
    ASSERT_EQ(run_cli({"build-index", "--manifest", file("manifest.json"), "--mode", "approx", "--seed", "7",
                       "--out", file(name)})
                  .code,
              0);
  }
  EXPECT_EQ(read_bytes(file("a1.l2gi")), read_bytes(file("a2.l2gi")));
}

TEST_F(CliFixture, RankingsAreByteStableWithoutTiming) {
  const auto args = cat(cat({"query", "--no-timing"}, inputs()), {"--out", file("r1.json")});
  ASSERT_EQ(run_cli(args).code, 0);
  auto again = args;
  again.back() = file("r2.json");
  ASSERT_EQ(run_cli(again).code, 0);
  EXPECT_EQ(read_bytes(file("r1.json")), read_bytes(file("r2.json")));
  const auto doc = nlohmann::json::parse(read_bytes(file("r1.json")));
  EXPECT_EQ(doc["schema"], "l2g.rankings/1");
  ASSERT_EQ(doc["queries"].size(), 6u);
  EXPECT_EQ(doc["queries"][0]["ids"].size(), 160u);
  EXPECT_FALSE(doc["queries"][0].contains("timing_ms"));
  const auto timed = nlohmann::json::parse(run_cli(cat({"query"}, inputs())).out);
  EXPECT_TRUE(timed["queries"][0].contains("timing_ms"));
}

TEST_F(CliFixture, ConfigPrecedence) {
  testing::write_bytes(file("cfg.json"), R"({"k-mds": 25, "w": 0.5})");
  const auto defaults = query_json({"--top", "1"});
  EXPECT_EQ(defaults["config"]["k-mds"], 20);  // the fixture passes --k-mds 20
  EXPECT_EQ(defaults["config"]["beta"], 0.31);
  EXPECT_EQ(defaults["config"]["w"], 0.19);
  const auto from_file = run_cli({"query", "--no-timing", "--top", "1", "--index", file("exact.l2gi"), "--sparse",
                                  file("nn.l2gd"), "--queries", file("queries.l2gf"), "--globals", file("db.l2gg"),
                                  file("queries.l2gg"), "--config", file("cfg.json")});
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  const auto doc = nlohmann::json::parse(from_file.out);
  EXPECT_EQ(doc["config"]["k-mds"], 25);
  EXPECT_EQ(doc["config"]["w"], 0.5);
  const auto flag_wins = query_json({"--top", "1", "--config", file("cfg.json")});
  EXPECT_EQ(flag_wins["config"]["k-mds"], 20);
  EXPECT_EQ(flag_wins["config"]["w"], 0.5);
}

TEST_F(CliFixture, UnknownConfigKey) {
  testing::write_bytes(file("bad.json"), R"({"kmds": 25})");
  EXPECT_EQ(run_cli(cat(cat({"query"}, inputs()), {"--config", file("bad.json")})).code,
            cli::exit_code(ErrorCode::kSchemaViolation));
}

TEST_F(CliFixture, UnitWeightEqualsMdsMode) {
  const auto merged = query_json({"--rerank-mode", "mds+sg", "--w", "1.0"});
  const auto mds = query_json({"--rerank-mode", "mds"});
  for (std::size_t q = 0; q < 6; ++q) EXPECT_EQ(merged["queries"][q]["ids"], mds["queries"][q]["ids"]);
}

TEST_F(CliFixture, MissingGlobalsExitCode) {
  const auto r = run_cli(cat(cat({"query"}, inputs(false)), {"--rerank-mode", "mds+sg"}));
  EXPECT_EQ(r.code, 25);
  EXPECT_EQ(r.code, cli::exit_code(ErrorCode::kMissingGlobals));
  EXPECT_EQ(run_cli(cat(cat({"query"}, inputs(false)), {"--rerank-mode", "mds"})).code, 0);
}

TEST_F(CliFixture, EvalReportsBothProtocols) {
  ASSERT_EQ(run_cli(cat(cat({"query", "--no-timing"}, inputs()), {"--out", file("r.json")})).code, 0);
  const auto r = run_cli({"eval", "--rankings", file("r.json"), "--gt", file("gt.json"), "--recall-kmax", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["schema"], "l2g.metrics/1");
  for (const char* p : {"medium", "hard"}) {
    const double map = doc["protocols"][p]["map"];
    EXPECT_GE(map, 0.0);
    EXPECT_LE(map, 100.0);
    EXPECT_EQ(doc["protocols"][p]["recall"]["k"].size(), 5u);
  }
  EXPECT_EQ(run_cli({"eval", "--rankings", file("r.json"), "--gt", file("gt.json"), "--recall-kmax", "0"}).code, 2);
}

TEST_F(CliFixture, AblationRows) {
  const auto r = run_cli(cat(cat({"ablate"}, inputs()), {"--gt", file("gt.json")}));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  ASSERT_EQ(doc["rows"].size(), 4u);
  EXPECT_EQ(doc["rows"][0]["name"], "full");
  EXPECT_TRUE(doc["reference"].contains("global_search"));
  EXPECT_TRUE(doc["reference"].contains("local_search"));

  // Plugin row: Chamfer similarities supplied as an external table.
  const auto db = load_collection(file("db.l2gf"), LoadOptions{0});
  auto all = db;
  all.append(load_collection(file("distractors.l2gf"), LoadOptions{0}));
  const auto queries = load_collection(file("queries.l2gf"), LoadOptions{0});
  ExternalSimilarity sim;
  const auto n = static_cast<std::uint32_t>(all.size());
  for (std::uint32_t i = 0; i < n + queries.size(); ++i) {
    const auto& source = i < n ? all[i] : queries[i - n];
    for (std::uint32_t j = 0; j < n; ++j) sim.set(i, j, static_cast<float>(chamfer_similarity(source, all[j])));
  }
  save_external_similarity(sim, file("plugin.l2gs"));
  ASSERT_EQ(run_cli({"sparse", "--index", file("exact.l2gi"), "--similarity", file("plugin.l2gs"), "--k-nn", "30",
                     "--out", file("plugin.l2gd")})
                .code,
            0);
  const auto with_plugin = run_cli(cat(cat({"ablate"}, inputs()), {"--gt", file("gt.json"), "--plugin-similarity",
                                                                    file("plugin.l2gs"), "--plugin-sparse",
                                                                    file("plugin.l2gd")}));
  ASSERT_EQ(with_plugin.code, 0) << with_plugin.err;
  const auto plugin_doc = nlohmann::json::parse(with_plugin.out);
  ASSERT_EQ(plugin_doc["rows"].size(), 5u);
  EXPECT_EQ(plugin_doc["rows"][4]["name"], "external_similarity");
  EXPECT_EQ(run_cli(cat(cat({"ablate"}, inputs()), {"--gt", file("gt.json"), "--plugin-similarity",
                                                    file("plugin.l2gs")}))
                .code,
            2);
}

TEST_F(CliFixture, SweepRows) {
  const auto one = run_cli(cat(cat({"sweep"}, inputs()), {"--gt", file("gt.json"), "--param", "w", "--values", "0.5"}));
  ASSERT_EQ(one.code, 0) << one.err;
  const auto doc = nlohmann::json::parse(one.out);
  ASSERT_EQ(doc["rows"].size(), 1u);
  EXPECT_EQ(doc["rows"][0]["value"], 0.5);
  const auto two = run_cli(cat(cat({"sweep"}, inputs()), {"--gt", file("gt.json"), "--param", "k-mds", "--values",
                                                           "10,30"}));
  ASSERT_EQ(two.code, 0) << two.err;
  EXPECT_EQ(nlohmann::json::parse(two.out)["rows"].size(), 2u);
}

TEST_F(CliFixture, EmptySweepListIsUsageError) {
  for (const char* values : {"", ",", "abc", "0.5,x"}) {
    const auto r = run_cli(cat(cat({"sweep"}, inputs(false)), {"--gt", file("gt.json"), "--param", "w", "--values",
                                                               values}));
    EXPECT_EQ(r.code, 2) << "values '" << values << "': " << r.err;
  }
}

TEST(CliSweepValues, Parsing) {
  EXPECT_EQ(cli::parse_sweep_values({"1", " ", "2.5"}), (std::vector<double>{1.0, 2.5}));
  EXPECT_THROW(cli::parse_sweep_values({}), cli::UsageError);
  EXPECT_THROW(cli::parse_sweep_values({"1e400"}), cli::UsageError);
}

TEST(CliBinary, ExitCodesFromTheRealProcess) {
  testing::TempDir dir;
  const std::string bin = L2G_CLI_BINARY;
  const auto status = [](const std::string& command) {
    const int raw = std::system((command + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status(bin + " build-index --out " + dir.file("x.l2gi")), 2);
  EXPECT_EQ(status(bin + " synth --out " + dir.file("s") + " --n-db 20 --n-queries 2 --n-distractors 5"), 0);
  EXPECT_EQ(status(bin + " build-index --features " + dir.file("s/db.l2gf") + " --out " + dir.file("x.l2gi")), 0);
  EXPECT_EQ(status(bin + " build-index --features " + dir.file("missing.l2gf") + " --out " + dir.file("y.l2gi")),
            cli::exit_code(ErrorCode::kIoFailure));
}

}  // namespace
}  // namespace l2g
