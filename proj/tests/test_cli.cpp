// Copyright 2026 The ftmssm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end checks of the ftmssm binary on a deliberately tiny configuration.
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;

const char* const kTinyConfig = R"(# tiny end-to-end configuration
latent_length = 8
latent_dim = 8
channels = 8
states = 4
text_dim = 16
time_embed_dim = 8
count_static = 6
count_walk = 6
count_stumble = 6
count_transition = 6
train_steps = 4
batch_size = 4
inference_steps = 3
feature_dim = 4
pool_size = 4
diversity_subset = 4
mm_groups = 2
mm_samples_per_group = 2
mm_pairs = 2
eval_samples = 12
)";

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("ftmssm_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(path("tiny.cfg")) << kTinyConfig;
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string path(const std::string& name) { return (dir_ / name).string(); }

  // Runs the binary with the tiny config; stdout+stderr go to `log`.
  static int run(const std::string& args, const std::string& log = "last.log") {
    const std::string cmd = std::string(FTMSSM_BIN) + " " + args + " > " + path(log) + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }
  static std::string cfg() { return " --config " + path("tiny.cfg"); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static void ensure_trained() {
    if (fs::exists(path("run/checkpoint.bin"))) return;
    ASSERT_EQ(run("gen-data" + cfg() + " --out " + path("corpus.jsonl")), 0);
    ASSERT_EQ(run("train" + cfg() + " --corpus " + path("corpus.jsonl") + " --out " + path("run")), 0)
        << slurp(path("last.log"));
  }

  static fs::path dir_;
};

fs::path Cli::dir_;

TEST_F(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("dance"), 1);
  EXPECT_EQ(run("gen-data"), 1);  // --out is required
  EXPECT_EQ(run("gen-data --width 3 --out " + path("x.jsonl")), 1);
  EXPECT_EQ(run("gen-data --lr fast --out " + path("x.jsonl")), 1);
  EXPECT_EQ(run("gen-data --config /nonexistent.cfg --out " + path("x.jsonl")), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, GenDataIsByteIdenticalPerSeed) {
  ASSERT_EQ(run("gen-data" + cfg() + " --seed 3 --out " + path("a.jsonl")), 0);
  ASSERT_EQ(run("gen-data" + cfg() + " --seed 3 --out " + path("b.jsonl")), 0);
  ASSERT_EQ(run("gen-data" + cfg() + " --seed 4 --out " + path("c.jsonl")), 0);
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
  EXPECT_NE(slurp(path("a.jsonl")), slurp(path("c.jsonl")));
}

TEST_F(Cli, TrainWritesArtifacts) {
  ensure_trained();
  EXPECT_TRUE(fs::exists(path("run/loss_trace.csv")));
  EXPECT_TRUE(fs::exists(path("run/config.txt")));
  EXPECT_NE(slurp(path("run/config.txt")).find("train_steps = 4"), std::string::npos);
}

TEST_F(Cli, ResumeRequiresTheSameSeed) {
  ensure_trained();
  EXPECT_EQ(run("train" + cfg() + " --seed 99 --train_steps 6 --corpus " + path("corpus.jsonl") + " --out " +
                path("resumed") + " --resume " + path("run/checkpoint.bin")),
            1);
  EXPECT_EQ(run("train" + cfg() + " --train_steps 6 --corpus " + path("corpus.jsonl") + " --out " + path("resumed") +
                " --resume " + path("run/checkpoint.bin")),
            0);
}

TEST_F(Cli, SampleIsDeterministic) {
  ensure_trained();
  const std::string base = "sample" + cfg() + " --checkpoint " + path("run/checkpoint.bin") + " --count 3";
  ASSERT_EQ(run(base + " --class walk --out " + path("s1.jsonl") + " --svg " + path("svg")), 0);
  ASSERT_EQ(run(base + " --class walk --out " + path("s2.jsonl")), 0);
  EXPECT_EQ(slurp(path("s1.jsonl")), slurp(path("s2.jsonl")));
  EXPECT_TRUE(fs::exists(path("svg/sample_2.svg")));
  EXPECT_EQ(run(base + " --text \"a person stays still while sitting\" --out " + path("s3.jsonl")), 0);
  EXPECT_EQ(run(base + " --class dance --out " + path("s4.jsonl")), 1);
  EXPECT_EQ(run(base + " --class walk --text hi --out " + path("s4.jsonl")), 1);
}

TEST_F(Cli, CorruptCheckpointNamesTheVersion) {
  ensure_trained();
  std::string bytes = slurp(path("run/checkpoint.bin"));
  bytes[8] = 9;  // version field follows the 8-byte magic
  std::ofstream(path("bad.bin"), std::ios::binary) << bytes;
  EXPECT_EQ(run("sample" + cfg() + " --checkpoint " + path("bad.bin") + " --class walk --out " + path("s.jsonl"),
                "bad.log"),
            1);
  EXPECT_NE(slurp(path("bad.log")).find("version 9"), std::string::npos) << slurp(path("bad.log"));
}

TEST_F(Cli, EvalOfTheCorpusAgainstItself) {
  ensure_trained();
  // eval_samples above the corpus size selects every row, so both sides hold the same set.
  ASSERT_EQ(run("eval" + cfg() + " --eval_samples 100000 --generated " + path("corpus.jsonl") + " --corpus " +
                path("corpus.jsonl") + " --out " + path("self")),
            0)
      << slurp(path("last.log"));
  const auto j = nlohmann::json::parse(slurp(path("self.json")));
  EXPECT_LT(j["metrics"]["fid"].get<double>(), 1e-6);
}

TEST_F(Cli, EvalIsByteIdenticalAndReportRenders) {
  ensure_trained();
  const std::string base = "eval" + cfg() + " --checkpoint " + path("run/checkpoint.bin") + " --corpus " +
                           path("corpus.jsonl") + " --out ";
  ASSERT_EQ(run(base + path("e1")), 0) << slurp(path("last.log"));
  ASSERT_EQ(run(base + path("e2")), 0);
  EXPECT_EQ(slurp(path("e1.json")), slurp(path("e2.json")));
  EXPECT_EQ(slurp(path("e1.csv")), slurp(path("e2.csv")));
  EXPECT_TRUE(fs::exists(path("e1.timing.txt")));
  ASSERT_EQ(run("report --metrics trained=" + path("e1.json") + " --trace " + path("run/loss_trace.csv") +
                " --out " + path("report")),
            0);
  const std::string md = slurp(path("report/report.md"));
  EXPECT_NE(md.find("| trained"), std::string::npos) << md;
  EXPECT_NE(slurp(path("report/loss.svg")).find("<svg"), std::string::npos);
}

TEST_F(Cli, DivergentTrainingExitsWithTwo) {
  ensure_trained();
  EXPECT_EQ(run("train" + cfg() + " --lr 1e6 --train_steps 40 --corpus " + path("corpus.jsonl") + " --out " +
                path("diverged")),
            2)
      << slurp(path("last.log"));
}

TEST_F(Cli, GradcheckExitCodes) {
  EXPECT_EQ(run("gradcheck --out " + path("gc.json")), 0) << slurp(path("last.log"));
  EXPECT_EQ(run("gradcheck --negative-control"), 2);
}

}  // namespace
