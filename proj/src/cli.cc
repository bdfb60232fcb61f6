// src/cli.cc

// Copyright 2026  The atts2s Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "atts2s/cli.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "atts2s/checkpoint.h"
#include "atts2s/eval.h"
#include "atts2s/run_config.h"

namespace atts2s {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string &what) : std::runtime_error(what) {}
};

struct Command {
  std::string name;
  std::set<std::string> required;
  std::set<std::string> optional;
};

const std::vector<Command> &Commands() {
  static const std::vector<Command> commands = {
      {"gen-data", {"out"}, {"config"}},
      {"train", {"out"}, {"config", "data", "manifest"}},
      {"convert", {"checkpoint", "input", "output"}, {"config", "attention"}},
      {"eval", {"checkpoint", "report"}, {"config", "data", "manifest", "groundtruth"}},
      {"export-attention", {"checkpoint", "input", "output"}, {"config", "target"}},
  };
  return commands;
}

struct Invocation {
  const Command *command = nullptr;
  std::map<std::string, std::string> paths;
  RunConfig config;
};

Invocation Parse(const std::vector<std::string> &args) {
  if (args.empty()) throw UsageError("missing subcommand");
  Invocation inv;
  for (const auto &c : Commands())
    if (c.name == args[0]) inv.command = &c;
  if (!inv.command) throw UsageError("unknown subcommand '" + args[0] + "'");

  CLI::App app(inv.command->name);
  app.set_help_flag();
  app.allow_extras();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::map<std::string, std::string> paths, overrides;
  for (const auto &key : inv.command->required)
    app.add_option("--" + key, paths[key])->required();
  for (const auto &key : inv.command->optional) app.add_option("--" + key, paths[key]);
  for (const auto &key : RunConfig::Keys())
    if (!paths.count(key)) app.add_option("--" + key, overrides[key]);
  // CLI11 consumes its argument list from the back.
  std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rest);
  } catch (const CLI::ParseError &e) {
    throw UsageError(inv.command->name + ": " + e.what());
  }
  for (const auto &extra : app.remaining())
    if (extra.rfind("--", 0) == 0) throw UsageError("unknown option '" + extra + "'");
  if (!app.remaining().empty())
    throw UsageError("unexpected argument '" + app.remaining().front() + "'");
  for (const auto &[key, value] : paths)
    if (app.count("--" + key)) inv.paths[key] = value;

  // File values first, then command-line overrides.
  if (inv.paths.count("config")) inv.config = LoadRunConfig(inv.paths["config"]);
  for (const auto &[key, value] : overrides)
    if (app.count("--" + key)) inv.config.Set(key, value);
  inv.config.Validate();
  return inv;
}

std::string ManifestPath(const Invocation &inv, bool prefer_test) {
  if (inv.paths.count("manifest")) return inv.paths.at("manifest");
  if (!inv.paths.count("data")) throw UsageError(inv.command->name + " needs --data or --manifest");
  const fs::path dir = inv.paths.at("data");
  if (prefer_test && fs::exists(dir / "test_manifest.tsv"))
    return (dir / "test_manifest.tsv").string();
  return (dir / "manifest.tsv").string();
}

int GenData(const Invocation &inv, std::ostream &out) {
  const SyntheticDataset ds = GenerateSynthetic(inv.config.synthetic);
  WriteSyntheticDataset(inv.paths.at("out"), ds, inv.config.synthetic);
  out << "wrote " << inv.config.synthetic.pairs << " training pairs";
  if (inv.config.synthetic.test_pairs > 0)
    out << " and " << inv.config.synthetic.test_pairs << " test pairs";
  out << " to " << inv.paths.at("out") << '\n';
  return kExitOk;
}

template <typename T>
void TrainAs(const Invocation &inv, const std::vector<ParallelPair> &pairs, const NormStats &norm,
             std::ostream &out) {
  TrainOptions opts;
  opts.out_dir = inv.paths.at("out");
  opts.norm = norm;
  opts.on_epoch = [&](const EpochLog &e) { out << FormatLogLine(e) << std::endl; };
  Train<T>(pairs, inv.config.model, inv.config.training, opts);
}

int TrainCommand(const Invocation &inv, std::ostream &out) {
  const std::vector<ParallelPair> raw = LoadPairs(ManifestPath(inv, false));
  if (raw.empty()) throw EmptyInputError("manifest lists no pairs");
  if (raw[0].source.dims() != inv.config.model.feature_dim)
    throw ConfigError("data has " + std::to_string(raw[0].source.dims()) +
                      " dims but feature_dim is " + std::to_string(inv.config.model.feature_dim));
  const NormStats norm = ComputeNorm(raw);
  const std::vector<ParallelPair> pairs = NormalizePairs(raw, norm);
  fs::create_directories(inv.paths.at("out"));
  {
    std::ofstream cfg(fs::path(inv.paths.at("out")) / "config.txt", std::ios::trunc);
    cfg << inv.config.Dump();
    if (!cfg) throw IoError("cannot write config.txt in " + inv.paths.at("out"));
  }
  if (inv.config.precision == Precision::kF64)
    TrainAs<double>(inv, pairs, norm, out);
  else
    TrainAs<float>(inv, pairs, norm, out);
  out << "wrote " << (fs::path(inv.paths.at("out")) / "final.as2s").string() << '\n';
  return kExitOk;
}

struct LoadedModel {
  Checkpoint ckpt;
  ModelConfig model;
};

LoadedModel LoadModel(const std::string &path) {
  LoadedModel m;
  m.ckpt = LoadCheckpoint(path);
  m.model = LoadModelConfig(m.ckpt);
  CheckParameters(m.ckpt, m.model);
  if (m.ckpt.norm.source_mean.empty()) {
    const auto d = std::size_t(m.model.feature_dim);
    m.ckpt.norm = {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0),
                   std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  }
  if (m.ckpt.norm.source_mean.size() != std::size_t(m.model.feature_dim))
    throw ConfigError("checkpoint normalization does not match feature_dim");
  return m;
}

template <typename T>
DecodeResult ConvertFile(const LoadedModel &m, const RunConfig &cfg, const FeatureSequence &input,
                         const FeatureSequence *teacher) {
  const ParameterSet<T> params = CheckpointParameters<T>(m.ckpt);
  ConvertOptions opts = cfg.convert;
  FeatureSequence normalized_teacher;
  if (teacher) {
    normalized_teacher = ApplyNorm(*teacher, m.ckpt.norm.target_mean, m.ckpt.norm.target_std);
    opts.teacher = &normalized_teacher;
  }
  const FeatureSequence x = ApplyNorm(input, m.ckpt.norm.source_mean, m.ckpt.norm.source_std);
  DecodeResult res = Convert(x, params, m.model, opts);
  res.output = InvertNorm(res.output, m.ckpt.norm.target_mean, m.ckpt.norm.target_std);
  return res;
}

DecodeResult ConvertWith(const LoadedModel &m, const RunConfig &cfg, const FeatureSequence &input,
                         const FeatureSequence *teacher = nullptr) {
  return cfg.precision == Precision::kF64 ? ConvertFile<double>(m, cfg, input, teacher)
                                          : ConvertFile<float>(m, cfg, input, teacher);
}

int ConvertCommand(const Invocation &inv, std::ostream &out) {
  const LoadedModel m = LoadModel(inv.paths.at("checkpoint"));
  const FeatureSequence input = ReadFeatures(inv.paths.at("input"));
  const DecodeResult res = ConvertWith(m, inv.config, input);
  WriteFeatures(inv.paths.at("output"), res.output);
  if (inv.paths.count("attention")) {
    const std::string &p = inv.paths.at("attention");
    ExportAttention(res.attention, p, AttentionFormatFromPath(p));
  }
  out << "converted " << input.frames() << " frames to " << res.output.frames() << " frames in "
      << res.steps_taken << " steps (" << (res.stopped_naturally ? "stop token" : "step cap")
      << ")\n";
  return kExitOk;
}

int ExportAttentionCommand(const Invocation &inv, std::ostream &out) {
  const std::string &path = inv.paths.at("output");
  const AttentionFormat format = AttentionFormatFromPath(path);
  const LoadedModel m = LoadModel(inv.paths.at("checkpoint"));
  const FeatureSequence input = ReadFeatures(inv.paths.at("input"));
  FeatureSequence target;
  if (inv.paths.count("target")) target = ReadFeatures(inv.paths.at("target"));
  const DecodeResult res =
      ConvertWith(m, inv.config, input, inv.paths.count("target") ? &target : nullptr);
  ExportAttention(res.attention, path, format);
  out << "wrote " << res.attention.dim(0) << "x" << res.attention.dim(1) << " attention to "
      << path << '\n';
  return kExitOk;
}

int EvalCommand(const Invocation &inv, std::ostream &out) {
  const LoadedModel m = LoadModel(inv.paths.at("checkpoint"));
  const std::string manifest = ManifestPath(inv, true);
  const std::vector<ParallelPair> pairs = LoadPairs(manifest);
  if (pairs.empty()) throw EmptyInputError("manifest lists no pairs");

  // Ground truth next to the manifest when present; the length ratio of each
  // pair otherwise.
  std::string truth_path;
  if (inv.paths.count("groundtruth")) {
    truth_path = inv.paths.at("groundtruth");
  } else {
    const fs::path mp(manifest);
    std::string name = mp.filename().string();
    const auto pos = name.find("manifest.tsv");
    if (pos != std::string::npos) {
      name.replace(pos, 12, "groundtruth.tsv");
      if (fs::exists(mp.parent_path() / name)) truth_path = (mp.parent_path() / name).string();
    }
  }
  std::vector<double> rho;
  if (!truth_path.empty()) {
    rho = ReadGroundTruth(truth_path).rho;
    if (rho.size() != pairs.size())
      throw ConfigError(truth_path + " lists " + std::to_string(rho.size()) +
                        " warp factors for " + std::to_string(pairs.size()) + " pairs");
  } else {
    for (const auto &p : pairs) rho.push_back(double(p.target.frames()) / p.source.frames());
  }

  const RunConfig &cfg = inv.config;
  for (int d : cfg.mcd_dims)
    if (d >= m.model.feature_dim) throw ConfigError("mcd_dims exceeds the model's feature_dim");
  const ParameterSet<float> pf = CheckpointParameters<float>(m.ckpt);
  const EvalReport report =
      cfg.precision == Precision::kF64
          ? EvaluateConversion(pairs, rho, CheckpointParameters<double>(m.ckpt), m.model,
                               m.ckpt.norm, cfg.convert, cfg.mcd_dims)
          : EvaluateConversion(pairs, rho, pf, m.model, m.ckpt.norm, cfg.convert, cfg.mcd_dims);
  WriteReport(inv.paths.at("report"), report);
  out << "pairs: " << report.pairs.size() << "\ndtw_l1: " << report.mean_dtw_l1
      << "\ndiagonality_deviation: " << report.mean_diagonality_deviation
      << "\nduration_within_tolerance: " << report.duration_pass_fraction << '\n';
  return kExitOk;
}

std::string OneLine(std::string s) {
  for (char &c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

std::string Usage() {
  return "usage: atts2s <subcommand> [--option value ...] [--key value ...]\n"
         "\n"
         "subcommands:\n"
         "  gen-data          --out DIR\n"
         "  train             --data DIR | --manifest FILE, --out DIR\n"
         "  convert           --checkpoint FILE --input FILE --output FILE [--attention FILE]\n"
         "  eval              --checkpoint FILE --data DIR | --manifest FILE --report FILE\n"
         "                    [--groundtruth FILE]\n"
         "  export-attention  --checkpoint FILE --input FILE --output FILE.pgm|.csv\n"
         "                    [--target FILE]\n"
         "\n"
         "Every subcommand accepts --config FILE (lines 'key = value') and --KEY VALUE\n"
         "overrides for the keys below; overrides win over the file.\n";
}

int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  if (!args.empty() && (args[0] == "--help" || args[0] == "-h")) {
    out << Usage();
    return kExitOk;
  }
  try {
    const Invocation inv = Parse(args);
    const std::string &name = inv.command->name;
    if (name == "gen-data") return GenData(inv, out);
    if (name == "train") return TrainCommand(inv, out);
    if (name == "convert") return ConvertCommand(inv, out);
    if (name == "eval") return EvalCommand(inv, out);
    return ExportAttentionCommand(inv, out);
  } catch (const UsageError &e) {
    err << "error: " << OneLine(e.what()) << '\n' << Usage();
    err << "keys:";
    for (const auto &k : RunConfig::Keys()) err << ' ' << k;
    err << '\n';
    return kExitValidation;
  } catch (const ConfigError &e) {
    err << "error: " << OneLine(e.what()) << '\n';
    return kExitValidation;
  } catch (const std::exception &e) {
    err << "error: " << OneLine(e.what()) << '\n';
    return kExitRuntime;
  }
}

}  // namespace atts2s
