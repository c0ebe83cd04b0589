/*
 * Copyright 2026 The TAN Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Checks against the committed desk reference run in fixtures/desk.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tan/cli.h"
#include "tan/train.h"

namespace tanet {
namespace {

namespace fs = std::filesystem;

const fs::path kDesk = fs::path(TAN_FIXTURE_DIR) / "desk";

// Data rows of a CSV with '#' comments and a header line, split on commas.
std::vector<std::vector<std::string>> Rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream lines(text);
  std::string line;
  bool header = true;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream cell_stream(line);
    std::string cell;
    while (std::getline(cell_stream, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// "nan" cells mark classes without positives and must match exactly.
void ExpectCellNear(const std::string& got, const std::string& want,
                    double tol) {
  if (want == "nan" || got == "nan") {
    EXPECT_EQ(got, want);
    return;
  }
  EXPECT_NEAR(std::stod(got), std::stod(want), tol);
}

TEST(RegressionTest, FixtureIsPresent) {
  for (const char* name :
       {"model.tanckpt", "train_log.csv", "metrics.csv", "config.json"}) {
    EXPECT_TRUE(fs::exists(kDesk / name)) << name;
  }
}

TEST(RegressionTest, EvalReproducesRecordedMetrics) {
  const std::string ckpt = (kDesk / "model.tanckpt").string();
  const char* argv[] = {"tan", "eval", "--checkpoint", ckpt.c_str(), "--csv"};
  std::ostringstream out, err;
  ASSERT_EQ(RunCli(5, argv, out, err), kExitOk) << err.str();
  const auto got = Rows(out.str());
  const auto want = Rows(ReadFile(kDesk / "metrics.csv"));
  ASSERT_EQ(got.size(), want.size());
  for (size_t i = 0; i < want.size(); ++i) {
    ASSERT_EQ(got[i].size(), 3u);
    EXPECT_EQ(got[i][0], want[i][0]);
    ExpectCellNear(got[i][1], want[i][1], 1e-6);
    ExpectCellNear(got[i][2], want[i][2], 1e-6);
  }
}

TEST(RegressionTest, RecordedLossStrictlyDecreasesOverFirstFiveEpochs) {
  const auto rows = Rows(ReadFile(kDesk / "train_log.csv"));
  ASSERT_GE(rows.size(), 5u);
  for (size_t i = 1; i < 5; ++i) {
    EXPECT_LT(std::stod(rows[i][1]), std::stod(rows[i - 1][1]))
        << "epoch " << rows[i][0];
  }
}

TEST(RegressionTest, RetrainingReproducesRecordedLosses) {
  const RunConfig c = LoadRunConfig(kDesk / "config.json");
  const auto rows = Rows(ReadFile(kDesk / "train_log.csv"));
  ASSERT_EQ(static_cast<int>(rows.size()), c.epochs);
  Model<float> model = Model<float>::Build(c.arch, c.seed);
  TrainOptions o;
  o.epochs = 2;
  o.seed = c.seed;
  o.schedule = c.Schedule();
  o.accumulate = c.accumulate;
  o.eval_every = -1;
  const TrainingLog log = Train(model, Generate(c.Generator(c.seed)), o);
  ASSERT_EQ(log.epochs.size(), 2u);
  for (size_t i = 0; i < 2; ++i) {
    const double want = std::stod(rows[i][1]);
    EXPECT_NEAR(log.epochs[i].mean_loss, want, 1e-6 * want);
  }
}

}  // namespace
}  // namespace tanet
