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

#include "tan/cli.h"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "tan/analysis.h"
#include "tan/checkpoint.h"
#include "tan/diagnostics.h"
#include "tan/errors.h"
#include "tan/tape.h"

namespace tanet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr uint64_t kEvalSeedOffset = 1000;

template <typename T>
T Get(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(key + ": wrong type (" + value.dump() + ")");
  }
}

void MakeDirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) MakeDirs(path.parent_path());
  std::ofstream file(path, std::ios::binary);
  file << text;
  if (!file) throw IoError("cannot write " + path.string());
}

std::string ReadText(const fs::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

}  // namespace

void RunConfig::Validate() const {
  arch.Validate();
  Generator(seed).Validate();
  if (epochs < 0) throw ConfigError("epochs: must be >= 0");
  if (!(lr > 0)) throw ConfigError("lr: must be positive");
  Schedule().Validate();
  if (sampling_factor < 1) throw ConfigError("sampling_factor: must be >= 1");
  if (accumulate < 1) throw ConfigError("accumulate: must be >= 1");
  EvalProtocol::Parse(protocol);
  if (ablation_seeds.empty()) {
    throw ConfigError("ablation_seeds: must not be empty");
  }
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
  for (const auto& [key, path] :
       {std::pair{"dataset", dataset}, std::pair{"eval_dataset", eval_dataset}}) {
    if (!path.empty() && !fs::exists(path)) {
      throw ConfigError(std::string(key) + ": path '" + path +
                        "' does not exist");
    }
  }
}

LrSchedule RunConfig::Schedule() const {
  if (!lr_schedule.empty()) return LrSchedule{lr_schedule};
  return LrSchedule::StepDecay(lr, epochs);
}

GeneratorConfig RunConfig::Generator(uint64_t generator_seed) const {
  GeneratorConfig g;
  g.seed = generator_seed;
  g.num_videos = num_videos;
  g.temporal_len = arch.temporal_len;
  g.num_classes = arch.num_classes;
  g.spatial = arch.input_spatial;
  g.zero_event_prob = zero_event_prob;
  g.noise_amplitude = noise_amplitude;
  return g;
}

std::string RunConfig::ToJson() const {
  json j;
  j["input_spatial"] = arch.input_spatial;
  j["temporal_len"] = arch.temporal_len;
  j["channels"] = arch.channels;
  j["blocks_per_level"] = arch.blocks_per_level;
  j["ta_enabled"] = arch.ta_enabled;
  j["ta_dilations"] = arch.ta_dilations;
  j["num_classes"] = arch.num_classes;
  j["variant"] = VariantName(arch.variant);
  j["seed"] = seed;
  j["epochs"] = epochs;
  j["lr"] = lr;
  j["lr_schedule"] = lr_schedule;
  j["dataset"] = dataset;
  j["eval_dataset"] = eval_dataset;
  j["num_videos"] = num_videos;
  j["zero_event_prob"] = zero_event_prob;
  j["noise_amplitude"] = noise_amplitude;
  j["sampling_factor"] = sampling_factor;
  j["output_dir"] = output_dir;
  j["protocol"] = protocol;
  j["accumulate"] = accumulate;
  j["ablation_seeds"] = ablation_seeds;
  return j.dump(2) + "\n";
}

RunConfig RunConfig::FromJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "input_spatial") {
      c.arch.input_spatial = Get<int>(v, key);
    } else if (key == "temporal_len") {
      c.arch.temporal_len = Get<int>(v, key);
    } else if (key == "channels") {
      c.arch.channels = Get<std::vector<int>>(v, key);
    } else if (key == "blocks_per_level") {
      c.arch.blocks_per_level = Get<std::vector<int>>(v, key);
    } else if (key == "ta_enabled") {
      c.arch.ta_enabled = Get<std::vector<bool>>(v, key);
    } else if (key == "ta_dilations") {
      c.arch.ta_dilations = Get<std::vector<int>>(v, key);
    } else if (key == "num_classes") {
      c.arch.num_classes = Get<int>(v, key);
    } else if (key == "variant") {
      c.arch.variant = ParseVariant(Get<std::string>(v, key));
    } else if (key == "seed") {
      c.seed = Get<uint64_t>(v, key);
    } else if (key == "epochs") {
      c.epochs = Get<int>(v, key);
    } else if (key == "lr") {
      c.lr = Get<double>(v, key);
    } else if (key == "lr_schedule") {
      c.lr_schedule = Get<std::vector<std::pair<int, double>>>(v, key);
    } else if (key == "dataset") {
      c.dataset = Get<std::string>(v, key);
    } else if (key == "eval_dataset") {
      c.eval_dataset = Get<std::string>(v, key);
    } else if (key == "num_videos") {
      c.num_videos = Get<int>(v, key);
    } else if (key == "zero_event_prob") {
      c.zero_event_prob = Get<double>(v, key);
    } else if (key == "noise_amplitude") {
      c.noise_amplitude = Get<double>(v, key);
    } else if (key == "sampling_factor") {
      c.sampling_factor = Get<int>(v, key);
    } else if (key == "output_dir") {
      c.output_dir = Get<std::string>(v, key);
    } else if (key == "protocol") {
      c.protocol = Get<std::string>(v, key);
    } else if (key == "accumulate") {
      c.accumulate = Get<int>(v, key);
    } else if (key == "ablation_seeds") {
      c.ablation_seeds = Get<std::vector<uint64_t>>(v, key);
    } else {
      throw ConfigError(key + ": unknown key");
    }
  }
  return c;
}

RunConfig LoadRunConfig(const fs::path& path) {
  return RunConfig::FromJson(ReadText(path));
}

Dataset OpenDataset(const fs::path& path, int num_classes, int spatial) {
  Dataset dataset;
  if (fs::is_directory(path / "videos")) {
    dataset = LoadDataset(path);
  } else {
    dataset = Ingest(path, path / "manifest.csv", {num_classes, spatial});
  }
  if (dataset.num_classes != num_classes) {
    throw ConfigError("num_classes: dataset " + path.string() + " has " +
                      std::to_string(dataset.num_classes) +
                      " classes, config has " + std::to_string(num_classes));
  }
  return dataset;
}

namespace {

// Flag values; only the ones given on the command line override the config.
struct Flags {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<int> classes, frames, spatial, videos, epochs, accumulate,
      sampling_factor;
  std::optional<double> lr, zero_event_prob, noise;
  std::optional<std::string> data, eval_data, out, protocol;
  std::optional<std::vector<uint64_t>> seeds;
  // Subcommand specific.
  std::string checkpoint, resume, rf;
  bool oracle = false, csv = false, params = false, macs = false;
  std::vector<std::string> variants;
};

RunConfig Resolve(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : LoadRunConfig(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.variant) c.arch.variant = ParseVariant(*f.variant);
  if (f.classes) c.arch.num_classes = *f.classes;
  if (f.frames) c.arch.temporal_len = *f.frames;
  if (f.spatial) c.arch.input_spatial = *f.spatial;
  if (f.videos) c.num_videos = *f.videos;
  if (f.epochs) c.epochs = *f.epochs;
  if (f.accumulate) c.accumulate = *f.accumulate;
  if (f.sampling_factor) c.sampling_factor = *f.sampling_factor;
  if (f.lr) c.lr = *f.lr;
  if (f.zero_event_prob) c.zero_event_prob = *f.zero_event_prob;
  if (f.noise) c.noise_amplitude = *f.noise;
  if (f.data) c.dataset = *f.data;
  if (f.eval_data) c.eval_dataset = *f.eval_data;
  if (f.out) c.output_dir = *f.out;
  if (f.protocol) c.protocol = *f.protocol;
  if (f.seeds) c.ablation_seeds = *f.seeds;
  c.Validate();
  return c;
}

std::vector<std::string> Header(const RunConfig& c, const std::string& command) {
  std::vector<std::string> lines = {
      fmt::format("seed {}", c.seed),
      fmt::format("command {}", command),
      fmt::format("variant {}", VariantName(c.arch.variant)),
  };
  const int out_t = c.arch.OutputFrames();
  if (out_t != c.arch.temporal_len) {
    lines.push_back(fmt::format(
        "output T reduced from {} to {} by temporal striding; logits are "
        "repeated back to every input frame",
        c.arch.temporal_len, out_t));
  }
  return lines;
}

std::string HeaderText(const std::vector<std::string>& lines) {
  std::string out;
  for (const std::string& line : lines) out += "# " + line + "\n";
  return out;
}

Dataset TrainSet(const RunConfig& c) {
  Dataset d = c.dataset.empty()
                  ? Generate(c.Generator(c.seed))
                  : OpenDataset(c.dataset, c.arch.num_classes,
                                c.arch.input_spatial);
  return c.sampling_factor > 1 ? ResampleRate(d, c.sampling_factor) : d;
}

std::optional<Dataset> EvalSet(const RunConfig& c) {
  std::optional<Dataset> d;
  if (!c.eval_dataset.empty()) {
    d = OpenDataset(c.eval_dataset, c.arch.num_classes, c.arch.input_spatial);
  } else if (c.dataset.empty()) {
    d = Generate(c.Generator(c.seed + kEvalSeedOffset));
  } else {
    return d;
  }
  if (c.sampling_factor > 1) d = ResampleRate(*d, c.sampling_factor);
  return d;
}

// Data for eval/predict: the eval split when one exists, else the training
// data.
Dataset ScoringSet(const RunConfig& c) {
  std::optional<Dataset> d = EvalSet(c);
  return d ? std::move(*d) : TrainSet(c);
}

// Arch comes from --config, falling back to config.json beside the
// checkpoint.
Model<float> LoadModel(Flags& f, RunConfig& c) {
  const fs::path ckpt = f.checkpoint;
  if (f.config.empty()) {
    const fs::path sibling = ckpt.parent_path() / "config.json";
    if (fs::exists(sibling)) {
      f.config = sibling.string();
      c = Resolve(f);
    }
  }
  Model<float> model = Model<float>::Build(c.arch, c.seed);
  LoadCheckpoint(model, ckpt);
  return model;
}

int CmdGen(const Flags& f, std::ostream& out) {
  const RunConfig c = Resolve(f);
  const Dataset d = Generate(c.Generator(c.seed));
  const std::vector<std::string> header = Header(c, "gen");
  SaveDataset(d, c.output_dir,
              fmt::format("seed {} videos {} classes {} frames {} spatial {}",
                          c.seed, c.num_videos, c.arch.num_classes,
                          c.arch.temporal_len, c.arch.input_spatial));
  out << HeaderText(header)
      << fmt::format("wrote {} videos to {} (digest {:016x})\n",
                     d.videos.size(), c.output_dir, DatasetDigest(d));
  return kExitOk;
}

int CmdTrain(const Flags& f, std::ostream& out, std::ostream& err) {
  const RunConfig c = Resolve(f);
  const fs::path dir = c.output_dir;
  const Dataset train = TrainSet(c);
  const std::optional<Dataset> eval = EvalSet(c);

  Model<float> model = Model<float>::Build(c.arch, c.seed);
  TrainState state;
  std::string previous_rows;
  if (!f.resume.empty()) {
    const fs::path ckpt = f.resume;
    LoadCheckpoint(model, ckpt);
    state = LoadTrainState(ckpt.parent_path() / "optim.tanckpt");
    const fs::path old_log = ckpt.parent_path() / "train_log.csv";
    if (fs::exists(old_log)) {
      std::istringstream lines(ReadText(old_log));
      std::string line;
      while (std::getline(lines, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("epoch,", 0) == 0) {
          continue;
        }
        previous_rows += line + "\n";
      }
    }
  }

  // --epochs is the total, so a resumed run follows the original schedule.
  if (state.epochs_done > c.epochs) {
    throw ConfigError(fmt::format("epochs: checkpoint already has {} epochs, "
                                  "more than the requested total {}",
                                  state.epochs_done, c.epochs));
  }
  TrainOptions options;
  options.epochs = c.epochs - state.epochs_done;
  options.seed = c.seed;
  options.schedule = c.Schedule();
  options.accumulate = c.accumulate;
  options.protocol = EvalProtocol::Parse(c.protocol);
  options.progress = [&err](const std::string& line) { err << line << "\n"; };
  const TrainingLog log =
      Train(model, train, options, eval ? &*eval : nullptr, &state);

  std::vector<std::string> header = Header(c, "train");
  header.push_back(fmt::format("epochs {} lr {} accumulate {} sampling_factor {}",
                               c.epochs, c.lr, c.accumulate, c.sampling_factor));
  header.push_back("train " + (c.dataset.empty()
                                   ? fmt::format("generated seed {}", c.seed)
                                   : c.dataset));
  std::string csv = log.ToCsv(header);
  const size_t body = csv.find("epoch,mean_loss");
  csv.insert(csv.find('\n', body) + 1, previous_rows);

  MakeDirs(dir);
  SaveCheckpoint(model, dir / "model.tanckpt");
  SaveTrainState(state, dir / "optim.tanckpt");
  WriteText(dir / "train_log.csv", csv);
  WriteText(dir / "config.json", c.ToJson());
  const MetricReport report =
      Evaluate(model, eval ? *eval : train, options.protocol);
  WriteText(dir / "metrics.csv", HeaderText(header) + MetricReportCsv(report));
  out << HeaderText(header) << FormatMetricReport(report)
      << "wrote " << (dir / "model.tanckpt").string() << "\n";
  return kExitOk;
}

int CmdEval(Flags& f, std::ostream& out) {
  RunConfig c = Resolve(f);
  const EvalProtocol protocol = EvalProtocol::Parse(c.protocol);
  std::vector<std::string> header;
  MetricReport report;
  if (f.oracle) {
    const Dataset d = ScoringSet(c);
    std::vector<Tensor<float>> scores;
    for (const Video& v : d.videos) scores.push_back(v.labels.Clone());
    header = Header(c, "eval --oracle");
    report = EvaluateScores(scores, d, protocol);
  } else {
    if (f.checkpoint.empty()) {
      throw ConfigError("checkpoint: --checkpoint is required unless --oracle");
    }
    const Model<float> model = LoadModel(f, c);
    const Dataset d = ScoringSet(c);
    header = Header(c, "eval");
    header.push_back("checkpoint " + f.checkpoint);
    report = Evaluate(model, d, protocol);
  }
  header.push_back("protocol " + protocol.Name());
  out << HeaderText(header)
      << (f.csv ? MetricReportCsv(report) : FormatMetricReport(report));
  return kExitOk;
}

int CmdPredict(Flags& f, std::ostream& out) {
  if (f.checkpoint.empty()) throw ConfigError("checkpoint: --checkpoint is required");
  RunConfig c = Resolve(f);
  const Model<float> model = LoadModel(f, c);
  const Dataset d = ScoringSet(c);
  std::vector<std::string> header = Header(c, "predict");
  header.push_back("checkpoint " + f.checkpoint);
  out << HeaderText(header) << PredictionCsv(d, PredictScores(model, d));
  return kExitOk;
}

int CmdAnalyze(const Flags& f, std::ostream& out, std::ostream& err) {
  const RunConfig c = Resolve(f);
  out << HeaderText(Header(c, "analyze"));
  const AnalysisReport report = CountParamsFlops(c.arch);
  if (!f.rf.empty()) {
    const Axis axis = ParseAxis(f.rf);
    const ProbeResult probe = ImpulseProbe(c.arch, axis);
    const int analytic =
        axis == Axis::kTemporal ? report.temporal_rf : report.spatial_rf;
    if (probe.saturated) {
      err << "warning: impulse probe saturated at " << probe.input_extent
          << "; using the analytic value\n";
      out << analytic << "\n";
      return kExitOk;
    }
    if (probe.extent != analytic) {
      err << "warning: probe " << probe.extent << " != analytic " << analytic
          << "\n";
    }
    out << probe.extent << "\n";
    return kExitOk;
  }
  if (f.params || f.macs) {
    if (f.params) out << report.params << "\n";
    if (f.macs) out << report.macs << "\n";
    return kExitOk;
  }
  if (f.csv) {
    out << "level,spatial_rf,temporal_rf,cumulative_params,"
           "cumulative_macs_per_frame\n";
    for (const LevelReport& l : report.levels) {
      out << fmt::format("{},{},{},{},{:.0f}\n", l.name, l.spatial_rf,
                         l.temporal_rf, l.cumulative_params,
                         l.cumulative_macs_per_frame);
    }
  } else {
    out << FormatAnalysisReport(report);
  }
  return kExitOk;
}

int CmdCompare(const Flags& f, std::ostream& out) {
  const RunConfig c = Resolve(f);
  std::vector<std::string> names = f.variants;
  if (names.empty()) names = {"tan", "tan_plainconv", "res2d", "res3d"};
  std::vector<ArchConfig> configs;
  for (const std::string& name : names) {
    ArchConfig a = c.arch;
    a.variant = ParseVariant(name);
    a.Validate();
    configs.push_back(a);
  }
  const std::vector<ComparisonRow> rows = CompareVariants(configs);
  out << HeaderText({fmt::format("seed {}", c.seed), "command compare"})
      << (f.csv ? FormatComparisonCsv(rows) : FormatComparisonTable(rows));
  return kExitOk;
}

int CmdAblate(const Flags& f, std::ostream& out, std::ostream& err) {
  const RunConfig c = Resolve(f);
  const Dataset train = TrainSet(c);
  const std::optional<Dataset> eval = EvalSet(c);
  TrainOptions options;
  options.epochs = c.epochs;
  options.schedule = c.Schedule();
  options.accumulate = c.accumulate;
  options.protocol = EvalProtocol::Parse(c.protocol);
  options.progress = [&err](const std::string& line) { err << line << "\n"; };
  const std::vector<AblationRow> rows = RunAblation(
      c.arch, train, eval ? *eval : train, c.ablation_seeds, options);
  std::vector<std::string> header = Header(c, "ablate");
  std::string seeds;
  for (uint64_t s : c.ablation_seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
  header.push_back("model seeds " + seeds + ", median over seeds");
  WriteText(fs::path(c.output_dir) / "ablation.csv",
            HeaderText(header) + AblationCsv(rows));
  out << HeaderText(header)
      << (f.csv ? AblationCsv(rows) : FormatAblationTable(rows));
  return kExitOk;
}

int ExitCodeFor(const CheckpointError& e) {
  using Kind = CheckpointError::Kind;
  switch (e.kind()) {
    case Kind::kDuplicateName:
    case Kind::kMissingName:
    case Kind::kUnknownName:
    case Kind::kShapeConflict:
      return kExitState;
    default:
      return kExitIo;
  }
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Temporal aggregation network toolkit"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&f](CLI::App* cmd) {
    cmd->add_option("--config", f.config, "JSON run config")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "Seed (echoed in every header)");
    cmd->add_option("--variant", f.variant,
                    "tan, tan_plainconv, res2d or res3d");
    cmd->add_option("--classes", f.classes, "Number of classes K");
    cmd->add_option("--frames", f.frames, "Frames per clip T");
    cmd->add_option("--spatial", f.spatial, "Frame size in pixels");
    cmd->add_option("--out", f.out, "Output directory");
  };
  auto data = [&f](CLI::App* cmd) {
    cmd->add_option("--data", f.data, "Training dataset directory");
    cmd->add_option("--eval-data", f.eval_data, "Evaluation dataset directory");
    cmd->add_option("--videos", f.videos, "Videos per generated split");
    cmd->add_option("--zero-event-prob", f.zero_event_prob,
                    "Probability of an empty video");
    cmd->add_option("--noise", f.noise, "Background noise amplitude");
    cmd->add_option("--sampling-factor", f.sampling_factor,
                    "Keep every n-th frame");
  };
  auto training = [&f](CLI::App* cmd) {
    cmd->add_option("--epochs", f.epochs, "Epochs to train");
    cmd->add_option("--lr", f.lr, "Base learning rate");
    cmd->add_option("--accumulate", f.accumulate, "Clips per update");
    cmd->add_option("--protocol", f.protocol, "dense or sampled:<n>");
  };

  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  common(gen);
  data(gen);

  CLI::App* train = app.add_subcommand("train", "Train a model");
  common(train);
  data(train);
  training(train);
  train->add_option("--resume", f.resume,
                    "Checkpoint to continue from (optim.tanckpt beside it)");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  common(eval);
  data(eval);
  eval->add_option("--checkpoint", f.checkpoint, "Model checkpoint");
  eval->add_option("--protocol", f.protocol, "dense or sampled:<n>");
  eval->add_flag("--oracle", f.oracle, "Score with the ground-truth labels");
  eval->add_flag("--csv", f.csv, "CSV output");

  CLI::App* predict = app.add_subcommand("predict", "Dump per-frame scores");
  common(predict);
  data(predict);
  predict->add_option("--checkpoint", f.checkpoint, "Model checkpoint")
      ->required();

  CLI::App* analyze = app.add_subcommand("analyze", "Structural analysis");
  common(analyze);
  analyze->add_option("--rf", f.rf, "Print the receptive field on an axis")
      ->check(CLI::IsMember({"temporal", "spatial"}));
  analyze->add_flag("--params", f.params, "Print the parameter count");
  analyze->add_flag("--macs", f.macs, "Print MACs per clip");
  analyze->add_flag("--csv", f.csv, "CSV output");

  CLI::App* compare = app.add_subcommand("compare", "Compare variants");
  common(compare);
  compare->add_option("variants", f.variants, "Variant names");
  compare->add_flag("--csv", f.csv, "CSV output");

  CLI::App* ablate = app.add_subcommand("ablate", "TA placement ablation");
  common(ablate);
  data(ablate);
  training(ablate);
  ablate->add_option("--seeds", f.seeds, "Model seeds")->delimiter(',');
  ablate->add_flag("--csv", f.csv, "CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) return CmdGen(f, out);
    if (*train) return CmdTrain(f, out, err);
    if (*eval) return CmdEval(f, out);
    if (*predict) return CmdPredict(f, out);
    if (*analyze) return CmdAnalyze(f, out, err);
    if (*compare) return CmdCompare(f, out);
    if (*ablate) return CmdAblate(f, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ShapeError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return ExitCodeFor(e);
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitConfig;
}

}  // namespace tanet
