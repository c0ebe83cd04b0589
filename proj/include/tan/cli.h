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

#ifndef TAN_CLI_H_
#define TAN_CLI_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "tan/arch_config.h"
#include "tan/data.h"
#include "tan/train.h"

namespace tanet {

// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 1,
  kExitConfig = 2,
  kExitState = 3,
};

// Everything one run needs. JSON keys are the field names below; the
// ArchConfig fields sit at top level and `generator` holds the remaining
// GeneratorConfig fields (its seed, frame count, class count and size come
// from `seed`, `temporal_len`, `num_classes` and `input_spatial`).
struct RunConfig {
  ArchConfig arch;
  uint64_t seed = 7;
  int epochs = 20;
  double lr = 5e-4;
  // Explicit [epoch, lr] pairs; empty means lr, then lr/10 after 2/3 of
  // the epochs.
  std::vector<std::pair<int, double>> lr_schedule;
  std::string dataset;       // saved or raw PPM dataset; empty: generate
  std::string eval_dataset;  // empty: generated with seed + 1000
  int num_videos = 200;
  double zero_event_prob = 0;
  double noise_amplitude = 0.08;
  int sampling_factor = 1;
  std::string output_dir = "run";
  std::string protocol = "sampled:25";
  int accumulate = 1;
  std::vector<uint64_t> ablation_seeds = {1, 2, 3, 4, 5};

  // Throws ConfigError naming the field; referenced paths must exist.
  void Validate() const;
  LrSchedule Schedule() const;
  GeneratorConfig Generator(uint64_t generator_seed) const;

  std::string ToJson() const;
  // Unknown keys and mistyped values raise ConfigError.
  static RunConfig FromJson(const std::string& text);
};

RunConfig LoadRunConfig(const std::filesystem::path& path);

// A directory holding videos/ is a saved dataset; anything else is read as
// a raw tree of per-video PPM folders with manifest.csv at its root.
Dataset OpenDataset(const std::filesystem::path& path, int num_classes,
                    int spatial);

// Parses argv (argv[0] is the program name), runs one subcommand and
// returns its exit code. Messages go to `err`, results to `out`.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace tanet

#endif  // TAN_CLI_H_
