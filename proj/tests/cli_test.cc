/* Copyright 2026 The uapseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// End-to-end runs of the command-line tool on a tiny corpus.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(fs::temp_directory_path() / "uapseg_cli_test");
    fs::remove_all(*root_);
    fs::create_directories(*root_);
    ASSERT_EQ(Run("gen-data --n 20 --size 16x16 --seed 7 --out " + P("data")),
              0);
    ASSERT_EQ(Run("train-model --data " + P("data/train") +
                  " --epochs 2 --out " + P("a.ckpt")),
              0);
  }
  static void TearDownTestSuite() {
    fs::remove_all(*root_);
    delete root_;
  }

  static std::string P(const std::string& rel) {
    return (*root_ / rel).string();
  }
  static int Run(const std::string& args) {
    const std::string cmd = std::string(UAPSEG_CLI_PATH) + " " + args + " > " +
                            (*root_ / "last.log").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  static std::string Slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  static std::size_t CountFiles(const std::string& dir) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir)) n += e.is_regular_file();
    return n;
  }

  static fs::path* root_;
};

fs::path* CliTest::root_ = nullptr;

TEST_F(CliTest, GenDataWritesSplitCorpus) {
  EXPECT_EQ(CountFiles(P("data/train/images")), 16u);
  EXPECT_EQ(CountFiles(P("data/eval/labels")), 4u);
  EXPECT_TRUE(fs::exists(P("data/manifest.txt")));
}

TEST_F(CliTest, GenDataIsReproducible) {
  ASSERT_EQ(Run("gen-data --n 20 --size 16x16 --seed 7 --out " + P("again")), 0);
  auto fingerprint = [](const std::string& manifest) {
    const auto at = manifest.find("fingerprint");
    return manifest.substr(at, manifest.find('\n', at) - at);
  };
  EXPECT_EQ(fingerprint(Slurp(P("again/manifest.txt"))),
            fingerprint(Slurp(P("data/manifest.txt"))));
}

TEST_F(CliTest, OddSizeIsPaddedWithNote) {
  ASSERT_EQ(Run("gen-data --n 5 --size 33x32 --seed 1 --out " + P("odd")), 0);
  EXPECT_NE(Slurp(P("last.log")).find("34x32"), std::string::npos);
  const std::string header = Slurp(P("odd/train/images/shape-000000.ppm"));
  EXPECT_EQ(header.rfind("P6", 0), 0u);
  EXPECT_NE(header.find("32 34"), std::string::npos);
}

TEST_F(CliTest, ZeroEpochAttackWritesZeroPerturbation) {
  ASSERT_EQ(Run("train-uap --data " + P("data/train") + " --model " +
                P("a.ckpt") + " --epochs 0 --out " + P("zero.uap")),
            0);
  ASSERT_EQ(Run("eval --data " + P("data/eval") + " --model " + P("a.ckpt") +
                " --out " + P("benign")),
            0);
  ASSERT_EQ(Run("eval --data " + P("data/eval") + " --model " + P("a.ckpt") +
                " --pert " + P("zero.uap") + " --out " + P("zero")),
            0);
  auto miou_line = [](const std::string& kv) {
    const auto at = kv.find("miou=");
    return kv.substr(at, kv.find('\n', at) - at);
  };
  EXPECT_EQ(miou_line(Slurp(P("benign.kv"))), miou_line(Slurp(P("zero.kv"))));
  EXPECT_NE(Slurp(P("benign.kv")).find("perturbation_id=benign"),
            std::string::npos);
}

TEST_F(CliTest, DefaultAttackPassesReloadCheck) {
  ASSERT_EQ(Run("train-uap --data " + P("data/train") + " --model " +
                P("a.ckpt") + " --epochs 1 --terms pd --out " + P("pd.uap")),
            0);
  EXPECT_TRUE(fs::exists(P("pd.uap")));
  const std::string manifest = Slurp(P("pd.uap.manifest.txt"));
  EXPECT_NE(manifest.find("terms"), std::string::npos);
  EXPECT_NE(manifest.find("library_version"), std::string::npos);
}

TEST_F(CliTest, SweepAndAblateWriteOrderedSummaries) {
  ASSERT_EQ(Run("sweep-eps --data " + P("data/train") + " --eval-data " +
                P("data/eval") + " --model " + P("a.ckpt") +
                " --values 10/255,2/255 --seeds 0 --epochs 1 --out " +
                P("sweep")),
            0);
  const std::string sweep = Slurp(P("sweep/summary.tsv"));
  EXPECT_LT(sweep.find("0.00784"), sweep.find("0.0392"));

  ASSERT_EQ(Run("ablate --data " + P("data/train") + " --model " + P("a.ckpt") +
                " --grid 'pd;pd,fd;pd,fd,ls' --seeds 0 --epochs 1 --out " +
                P("ablate")),
            0);
  std::istringstream rows(Slurp(P("ablate/summary.tsv")));
  std::string line;
  int n = 0;
  while (std::getline(rows, line)) n += !line.empty();
  EXPECT_EQ(n, 4);  // header + 3 subsets
}

TEST_F(CliTest, TransferIncludesBenignRow) {
  ASSERT_EQ(Run("train-uap --data " + P("data/train") + " --model " +
                P("a.ckpt") + " --epochs 0 --out " + P("t.uap")),
            0);
  ASSERT_EQ(Run("transfer --data " + P("data/eval") + " --models " +
                P("a.ckpt") + " --perts " + P("t.uap") + " --out " + P("tr")),
            0);
  EXPECT_NE(Slurp(P("tr.tsv")).find("benign"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  EXPECT_EQ(Run("train-uap --data " + P("data/train") + " --model " +
                P("a.ckpt") + " --terms '' --out " + P("x.uap")),
            2);
  EXPECT_EQ(Run("no-such-command"), 2);
}

TEST_F(CliTest, MissingFilesFailWithPath) {
  EXPECT_EQ(Run("eval --data " + P("data/eval") + " --model " +
                P("missing.ckpt")),
            1);
  EXPECT_NE(Slurp(P("last.log")).find("missing.ckpt"), std::string::npos);
}

TEST_F(CliTest, RenderAndInspect) {
  ASSERT_EQ(Run("render --in " + P("data/eval/labels/shape-000004.pgm") +
                " --out " + P("mask.ppm")),
            0);
  EXPECT_TRUE(fs::exists(P("mask.ppm")));
  ASSERT_EQ(Run("inspect-frequency --image " +
                P("data/eval/images/shape-000004.ppm") + " --out " +
                P("low.ppm")),
            0);
  EXPECT_TRUE(fs::exists(P("low.ppm")));
}

}  // namespace
