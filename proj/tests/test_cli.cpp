#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oneshot/experiment/run.hpp"
#include "test_support.hpp"

using namespace oneshot;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Runs the CLI with `args`, output discarded; returns the exit status.
int cli(const std::string& args) {
  const std::string cmd = std::string(ONESHOT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallConfig = R"({
  "dataset": {"classes": ["Shoot", "Goggles", "WindUp"]},
  "synthesis": {"m_des": 4},
  "classifiers": {"selected": ["DTW", "SVM"]},
  "enactment": {"enabled": false},
  "test": {"per_class": 2},
  "replicates": 1,
  "output": {"intermediates": true}
})";

}  // namespace

TEST(Cli, MetricsOnHandBuiltRecords) {
  const auto dir = oneshot::testing::temp_dir("cli_metrics");
  spit(dir / "r.csv",
       "instance_id,true_label,predicted_label,recognizer_id\n"
       "a,Shoot,Shoot,M\n"
       "b,Shoot,Throw,M\n"
       "c,Throw,Throw,M\n"
       "d,Throw,Throw,M\n");
  ASSERT_EQ(cli("metrics " + (dir / "r.csv").string() + " -o " + (dir / "m.json").string()), 0);
  const auto doc = read_json(dir / "m.json");
  EXPECT_DOUBLE_EQ(doc["recognizers"]["M"]["accuracy"].get<double>(), 0.75);
  EXPECT_EQ(doc["recognizers"]["M"]["records"].get<int>(), 4);
}

TEST(Cli, StagedCommandsReproduceRunIntermediates) {
  const auto dir = oneshot::testing::temp_dir("cli_staged");
  spit(dir / "config.json", kSmallConfig);
  const std::string cfg = " --config " + (dir / "config.json").string();
  ASSERT_EQ(cli("run --seed 42 -o " + (dir / "run").string() + cfg), 0);
  const fs::path run = dir / "run";
  ASSERT_TRUE(fs::exists(run / "report.json"));

  const auto seeds = replicate_seeds(42, 1);
  ASSERT_EQ(cli("ingest --bundled 3 -o " + (dir / "all.json").string() + cfg), 0);
  ASSERT_EQ(cli("gist -i " + (dir / "all.json").string() + " -o " + (dir / "gists").string() + " --seeds-out " +
                (dir / "seeds.json").string() + cfg),
            0);
  EXPECT_EQ(slurp(dir / "seeds.json"), slurp(run / "instances" / "seeds.json"));
  for (const char* g : {"Shoot", "Goggles", "WindUp"}) {
    EXPECT_EQ(slurp(dir / "gists" / (std::string(g) + ".json")), slurp(run / "gists" / (std::string(g) + ".json")))
        << g;
  }

  ASSERT_EQ(cli("synth -g " + (dir / "gists").string() + " -s " + (dir / "seeds.json").string() + " --rng-seed " +
                std::to_string(seeds.synthesis) + " -o " + (dir / "ds.json").string() + cfg),
            0);
  EXPECT_EQ(slurp(dir / "ds.json"), slurp(run / "datasets" / "dataset_r01.json"));

  ASSERT_EQ(cli("train -d " + (dir / "ds.json").string() + " -c SVM --classifier-seed " +
                std::to_string(seeds.classifier) + " -o " + (dir / "svm.json").string() + cfg),
            0);
  EXPECT_EQ(slurp(dir / "svm.json"), slurp(run / "models" / "SVM_r01.json"));

  ASSERT_EQ(cli("classify -m " + (dir / "svm.json").string() + " -i " + (run / "instances" / "test_r01.json").string() +
                " -o " + (dir / "svm.csv").string()),
            0);
  EXPECT_EQ(slurp(dir / "svm.csv"), slurp(run / "records" / "SVM_r01.csv"));
}

TEST(Cli, RenderReportIsIdempotentAndMatchesRun) {
  const auto dir = oneshot::testing::temp_dir("cli_render");
  spit(dir / "config.json", kSmallConfig);
  ASSERT_EQ(cli("run --seed 3 -o " + (dir / "run").string() + " --config " + (dir / "config.json").string()), 0);
  const std::string report = (dir / "run" / "report.json").string();
  ASSERT_EQ(cli("render-report " + report + " -o " + (dir / "a").string()), 0);
  const std::string first = slurp(dir / "a" / "tables" / "accuracy.csv");
  ASSERT_EQ(cli("render-report " + report + " -o " + (dir / "a").string()), 0);
  EXPECT_EQ(slurp(dir / "a" / "tables" / "accuracy.csv"), first);
  EXPECT_EQ(first, slurp(dir / "run" / "tables" / "accuracy.csv"));
  EXPECT_EQ(slurp(dir / "a" / "matrices" / "confusion_DTW.svg"), slurp(dir / "run" / "matrices" / "confusion_DTW.svg"));
}

TEST(Cli, ExitCodesSeparateUsageConfigAndData) {
  const auto dir = oneshot::testing::temp_dir("cli_exit");
  EXPECT_EQ(cli(""), kExitUsage);
  EXPECT_EQ(cli("run -o " + (dir / "x").string()), kExitUsage);
  EXPECT_EQ(cli("classify -m " + (dir / "missing.json").string() + " -i " + (dir / "missing.json").string()),
            kExitUsage);
  EXPECT_EQ(cli("config --set synthesis.no_such_key=1"), kExitConfig);
  EXPECT_EQ(cli("run --seed 1 --set replicates=0 -o " + (dir / "x").string()), kExitConfig);
  spit(dir / "bad.json", "{\"format\": \"something-else\"}");
  EXPECT_EQ(cli("gist -i " + (dir / "bad.json").string() + " -o " + (dir / "g").string()), kExitData);
  EXPECT_EQ(cli("config"), kExitOk);
  EXPECT_FALSE(fs::exists(dir / "x"));
}
