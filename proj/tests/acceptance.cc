// tests/acceptance.cc

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

// End-to-end acceptance run. Prints one PASS or FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "atts2s/checkpoint.h"
#include "atts2s/cli.h"
#include "atts2s/eval.h"
#include "atts2s/grad_check.h"
#include "atts2s/run_config.h"
#include "penalty_oracle.h"
#include "test_util.h"

using namespace atts2s;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char *format, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char *format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

std::string Slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void Spit(const std::string &path, const std::string &bytes) {
  std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
}

std::map<std::string, std::string> Snapshot(const std::string &dir) {
  std::map<std::string, std::string> files;
  for (const auto &e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file())
      files[fs::relative(e.path(), dir).string()] = Slurp(e.path().string());
  return files;
}

#if !ATTS2S_HAVE_PENALTY_ORACLE
// 1 - exp(-x) by its alternating series, for builds without the generated
// decimal values.
long double OneMinusExpSeries(long double x) {
  long double term = x, sum = 0;
  for (int n = 1; n < 200 && term != 0; ++n) {
    sum += term;
    term *= -x / (n + 1);
  }
  return sum;
}
#endif

class Acceptance {
 public:
  explicit Acceptance(std::string workdir) : work_(std::move(workdir)) {
    fs::remove_all(work_);
    fs::create_directories(work_);
    cli_log_.open(work_ + "/cli.log");
  }

  bool Run(const std::set<int> &only) {
    const std::vector<std::pair<std::string, std::function<std::string(bool &)>>> criteria = {
        {"gradient check", [this](bool &ok) { return GradientCheck(ok); }},
        {"penalty oracle", [this](bool &ok) { return PenaltyOracle(ok); }},
        {"attention stochasticity", [this](bool &ok) { return Stochasticity(ok); }},
        {"synthetic conversion", [this](bool &ok) { return Conversion(ok); }},
        {"context preservation ablation", [this](bool &ok) { return Ablation(ok); }},
        {"determinism", [this](bool &ok) { return Determinism(ok); }},
        {"format round trips", [this](bool &ok) { return RoundTrips(ok); }},
        {"dtw oracle", [this](bool &ok) { return DtwOracle(ok); }},
        {"hyperparameter defaults", [this](bool &ok) { return Defaults(ok); }},
    };
    bool all = true;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
      const int n = int(k) + 1;
      if (!only.empty() && !only.count(n)) continue;
      bool ok = false;
      std::string detail;
      const auto t0 = Clock::now();
      try {
        detail = criteria[k].second(ok);
      } catch (const std::exception &e) {
        ok = false;
        detail = std::string("exception: ") + e.what();
      }
      std::printf("%s %d %s: %s [%.1f s]\n", ok ? "PASS" : "FAIL", n, criteria[k].first.c_str(),
                  detail.c_str(), Seconds(t0));
      for (const auto &line : info_) std::printf("  %s\n", line.c_str());
      info_.clear();
      std::fflush(stdout);
      all = all && ok;
    }
    return all;
  }

 private:
  // Supporting lines, printed under the verdict.
  void Info(const std::string &line) { info_.push_back(line); }

  void Cli(const std::vector<std::string> &args) {
    cli_log_ << "$ atts2s";
    for (const auto &a : args) cli_log_ << ' ' << a;
    cli_log_ << std::endl;
    const int code = RunCli(args, cli_log_, cli_log_);
    cli_log_.flush();
    if (code != kExitOk)
      throw std::runtime_error("atts2s " + args[0] + " exited with " + std::to_string(code) +
                               " (see " + work_ + "/cli.log)");
  }

  static std::map<std::string, double> Aggregate(const std::string &report_path) {
    std::istringstream in(Slurp(report_path));
    std::map<std::string, double> agg;
    std::string line;
    bool in_block = false;
    while (std::getline(in, line)) {
      if (line == "aggregate:") {
        in_block = true;
        continue;
      }
      const auto colon = line.find(": ");
      if (in_block && colon != std::string::npos)
        agg[line.substr(0, colon)] = std::stod(line.substr(colon + 2));
    }
    if (!agg.count("dtw_l1")) throw FormatError("no aggregate block in " + report_path, 0);
    return agg;
  }

  // 1. Central differences over every parameter of a tiny model.
  std::string GradientCheck(bool &ok) {
    ModelConfig cfg;
    cfg.feature_dim = 4;
    cfg.hidden_dim = 8;
    cfg.attention_dim = 8;
    cfg.reduction_factor = 2;
    Rng rng(101);
    std::vector<ParallelPair> pairs = {{testing::RandomSequence(7, 4, rng),
                                        testing::RandomSequence(10, 4, rng)}};
    const PaddedBatch<double> pb = MakePaddedBatch<double>(pairs, {0}, 2);
    auto check = [&](const LossWeights &w, std::uint64_t seed) {
      ParameterSet<double> ps = InitParameters<double>(cfg, seed);
      const Objective f = [&](ParameterSet<double> &p, bool with_grad) {
        Graph<double> g(&p, with_grad);
        const ForwardOutputs out = ForwardTraining(g, cfg, pb);
        const LossTerms t = TotalLoss(g, out, pb, w, 0.4);
        if (with_grad) g.Backward(t.total);
        return g.value(t.total)[0];
      };
      return GradCheck(f, ps, 1e-4);
    };
    const auto t0 = Clock::now();
    LossWeights unit;
    unit.lambda_ga = unit.lambda_cp = unit.lambda_stop = 1.0;
    double worst = 0.0;
    std::size_t coords = 0;
    for (std::uint64_t seed : {1, 2, 3}) {
      const GradCheckResult r = check(unit, seed);
      worst = std::max(worst, r.max_rel_error);
      coords = r.coordinates;
    }
    const double seconds = Seconds(t0);
    const GradCheckResult defaults = check(LossWeights(), 1);
    Info(Fmt("with the default loss weights the same check gives %.3g at %s[%zu] "
             "(analytic %.6g, numeric %.6g)",
             defaults.max_rel_error, defaults.worst_param.c_str(), defaults.worst_index,
             defaults.analytic, defaults.numeric));
    ok = worst < 1e-3 && seconds < 120.0;
    return Fmt("max relative error %.3g over %zu coordinates x 3 seeds (all loss terms, unit "
               "weights, eps 1e-4, float64)",
               worst, coords);
  }

  // 2. Penalty values against an independent high-precision evaluation.
  std::string PenaltyOracle(bool &ok) {
#if ATTS2S_HAVE_PENALTY_ORACLE
    const double near = kOraclePenaltyNear, far = kOraclePenaltyFar;
    const char *source = "50-digit decimal";
#else
    const double near = double(OneMinusExpSeries(0.5L));
    const double far = double(OneMinusExpSeries(3.125L));
    const char *source = "long double series";
#endif
    const double g_near = PenaltyValue(0.4, 0.4), g_far = PenaltyValue(1.0, 0.4);
    const Tensor<double> m = PenaltyMatrix(1, 5, 0.4);  // 1/1 - 3/5 = 0.4 at (0, 2)
    bool diagonal = true;
    for (int n = 1; n <= 256; ++n) {
      const Tensor<double> g = PenaltyMatrix(n, n, 0.4);
      for (int i = 0; i < n; ++i) diagonal = diagonal && g(i, i) == 0.0;
    }
    ok = std::fabs(g_near - near) <= 1e-6 && std::fabs(g_far - far) <= 1e-6 &&
         std::fabs(g_near - 0.393469) <= 1e-6 && std::fabs(g_far - 0.956063) <= 1e-6 &&
         m(0, 2) == g_near && diagonal;
    return Fmt("g(0.4) = %.9f (oracle %.9f), g(1.0) = %.9f (oracle %.9f), %s oracle; "
               "diagonal %s for I = J = 1..256",
               g_near, near, g_far, far, source, diagonal ? "exactly 0" : "NOT 0");
  }

  // The shared experiment: data, the default-weight run and its evaluations.
  struct Experiment {
    std::string data, run;
    double train_seconds = 0.0;
    std::map<std::string, double> untrained, trained;
  };

  const Experiment &MainExperiment() {
    if (experiment_) return *experiment_;
    Experiment e;
    e.data = work_ + "/data";
    e.run = work_ + "/run_cp10";
    Cli({"gen-data", "--out", e.data, "--pairs", "2000", "--test_pairs", "200", "--seed", "1"});
    const auto t0 = Clock::now();
    Cli({"train", "--data", e.data, "--out", e.run, "--epochs", "60", "--warmup_steps", "400",
         "--seed", "1"});
    e.train_seconds = Seconds(t0);
    Cli({"eval", "--checkpoint", e.run + "/epoch_0000.as2s", "--data", e.data, "--report",
         e.run + "/report_untrained.txt"});
    Cli({"eval", "--checkpoint", e.run + "/final.as2s", "--data", e.data, "--report",
         e.run + "/report.txt"});
    e.untrained = Aggregate(e.run + "/report_untrained.txt");
    e.trained = Aggregate(e.run + "/report.txt");
    experiment_ = std::move(e);
    return *experiment_;
  }

  template <typename T>
  void CheckAttention(const Checkpoint &ck, const std::vector<ParallelPair> &pairs,
                      std::size_t *columns, double *worst, std::size_t *masked_nonzero) {
    const ModelConfig cfg = LoadModelConfig(ck);
    const ParameterSet<T> ps = CheckpointParameters<T>(ck);
    for (const auto &idx : MakeBatches(pairs, 32, 5)) {
      const PaddedBatch<T> pb = MakePaddedBatch<T>(pairs, idx, cfg.reduction_factor);
      Graph<T> g(const_cast<ParameterSet<T> *>(&ps), false);
      const Tensor<T> &a = g.value(ForwardTraining(g, cfg, pb).attention);
      for (int b = 0; b < pb.batch; ++b)
        for (int j = 0; j < pb.steps; ++j) {
          double s = 0.0;
          for (int i = 0; i < pb.source_frames; ++i) {
            const double v = a(b * pb.source_frames + i, j);
            if (i < pb.source_lengths[b]) s += v;
            else if (v != 0.0) ++*masked_nonzero;
          }
          if (j < pb.step_counts[b]) {
            *worst = std::max(*worst, std::fabs(s - 1.0));
            ++*columns;
          }
        }
    }
    ConvertOptions opts;
    for (const auto &p : pairs) {
      const DecodeResult res = Convert(p.source, ps, cfg, opts);
      for (int j = 0; j < res.steps_taken; ++j) {
        double s = 0.0;
        for (int i = 0; i < res.attention.dim(0); ++i) s += res.attention(i, j);
        *worst = std::max(*worst, std::fabs(s - 1.0));
        ++*columns;
      }
    }
  }

  // 3. Training and inference attention on the test pairs, before and after
  // training, in both precisions.
  std::string Stochasticity(bool &ok) {
    const Experiment &e = MainExperiment();
    const std::vector<ParallelPair> raw = LoadPairs(e.data + "/test_manifest.tsv");
    std::size_t columns = 0, masked_nonzero = 0;
    double worst = 0.0;
    for (const char *name : {"/epoch_0000.as2s", "/final.as2s"}) {
      const Checkpoint ck = LoadCheckpoint(e.run + name);
      const std::vector<ParallelPair> pairs = NormalizePairs(raw, ck.norm);
      CheckAttention<float>(ck, pairs, &columns, &worst, &masked_nonzero);
      CheckAttention<double>(ck, pairs, &columns, &worst, &masked_nonzero);
    }
    ok = worst <= 1e-6 && masked_nonzero == 0 && columns > 0;
    return Fmt("%zu columns, max |sum - 1| = %.3g, %zu non-zero masked entries", columns, worst,
               masked_nonzero);
  }

  // 4. Trained against untrained on the 200 test pairs.
  std::string Conversion(bool &ok) {
    const Experiment &e = MainExperiment();
    const double ratio = e.trained.at("dtw_l1") / e.untrained.at("dtw_l1");
    const double diag = e.trained.at("diagonality_deviation");
    const double within = e.trained.at("duration_within_tolerance");
    Info(Fmt("untrained: dtw_l1 %.4f, diagonality %.4f, duration within 0.15 %.3f, "
             "stopped naturally %.3f",
             e.untrained.at("dtw_l1"), e.untrained.at("diagonality_deviation"),
             e.untrained.at("duration_within_tolerance"), e.untrained.at("stopped_naturally")));
    Info(Fmt("trained:   dtw_l1 %.4f, diagonality %.4f, duration within 0.15 %.3f, "
             "stopped naturally %.3f, mcd %.3f dB",
             e.trained.at("dtw_l1"), diag, within, e.trained.at("stopped_naturally"),
             e.trained.at("mcd_db")));
    ok = ratio <= 0.35 && diag <= 0.08 && within >= 0.80 && e.train_seconds <= 45 * 60;
    return Fmt("dtw ratio %.3f (<= 0.35), diagonality %.4f (<= 0.08), duration pass %.1f%% "
               "(>= 80%%), 60 epochs in %.0f s (<= 2700)",
               ratio, diag, 100 * within, e.train_seconds);
  }

  // 5. cp_source of the default-weight run, plus a reported lambda_cp = 0 run.
  std::string Ablation(bool &ok) {
    const Experiment &e = MainExperiment();
    const std::vector<ParallelPair> raw = LoadPairs(e.data + "/manifest.tsv");
    const RunConfig rc = LoadRunConfig(e.run + "/config.txt");
    auto cp_source = [&](const std::string &path) {
      const Checkpoint ck = LoadCheckpoint(path);
      return EvaluateLoss(CheckpointParameters<float>(ck), NormalizePairs(raw, ck.norm),
                          LoadModelConfig(ck), rc.training)
          .cp_source;
    };
    const double initial = cp_source(e.run + "/epoch_0000.as2s");
    const double final = cp_source(e.run + "/final.as2s");

    const std::string run0 = work_ + "/run_cp0";
    Cli({"train", "--data", e.data, "--out", run0, "--epochs", "60", "--warmup_steps", "400",
         "--seed", "1", "--lambda_cp", "0"});
    Cli({"eval", "--checkpoint", run0 + "/final.as2s", "--data", e.data, "--report",
         run0 + "/report.txt"});
    const auto agg0 = Aggregate(run0 + "/report.txt");
    Info(Fmt("lambda_cp = 10: test dtw_l1 %.4f, diagonality %.4f, duration pass %.3f",
             e.trained.at("dtw_l1"), e.trained.at("diagonality_deviation"),
             e.trained.at("duration_within_tolerance")));
    Info(Fmt("lambda_cp = 0:  test dtw_l1 %.4f, diagonality %.4f, duration pass %.3f",
             agg0.at("dtw_l1"), agg0.at("diagonality_deviation"),
             agg0.at("duration_within_tolerance")));
    ok = final <= 0.5 * initial;
    return Fmt("cp_source %.4f at initialization, %.4f after training (ratio %.3f <= 0.5); "
               "lambda_cp = 0 run reported above",
               initial, final, final / initial);
  }

  // 6. Two identical end-to-end runs in separate directories.
  std::string Determinism(bool &ok) {
    std::vector<std::map<std::string, std::string>> data, runs;
    for (const char *tag : {"a", "b"}) {
      const std::string d = work_ + "/det_data_" + tag, r = work_ + "/det_run_" + tag;
      Cli({"gen-data", "--out", d, "--pairs", "200", "--seed", "11"});
      Cli({"train", "--data", d, "--out", r, "--epochs", "4", "--checkpoint_every", "2",
           "--seed", "11"});
      data.push_back(Snapshot(d));
      runs.push_back(Snapshot(r));
    }
    std::size_t checkpoints = 0;
    for (const auto &[name, bytes] : runs[0])
      if (name.size() > 5 && name.substr(name.size() - 5) == ".as2s") ++checkpoints;
    ok = data[0] == data[1] && runs[0] == runs[1] && runs[0].count("train.log") &&
         checkpoints >= 2;
    return Fmt("%zu data files and %zu run files (%zu checkpoints, train.log) %s", data[0].size(),
               runs[0].size(), checkpoints,
               ok ? "byte-identical" : "DIFFER between runs");
  }

  // 7. Feature files and checkpoints: bit-exact round trips, corruption
  // rejected with a format error.
  std::string RoundTrips(bool &ok) {
    const std::string dir = work_ + "/formats";
    fs::create_directories(dir);
    Rng rng(7);
    std::size_t features = 0, rejected = 0, attempts = 0;
    bool exact = true;
    auto expect_format_error = [&](const std::function<void()> &load) {
      ++attempts;
      try {
        load();
      } catch (const FormatError &) {
        ++rejected;
      } catch (const std::exception &) {
      }
    };
    for (int trial = 0; trial < 50; ++trial) {
      FeatureSequence x =
          testing::RandomSequence(rng.UniformInt(1, 80), rng.UniformInt(1, 40), rng, 10.0);
      x(0, 0) = -0.0f;
      x.values().back() = std::numeric_limits<float>::denorm_min();
      const std::string path = dir + "/x.atf";
      WriteFeatures(path, x);
      const FeatureSequence y = ReadFeatures(path);
      exact = exact && y.frames() == x.frames() && y.dims() == x.dims() &&
              std::memcmp(y.values().data(), x.values().data(), x.values().size() * 4) == 0;
      ++features;
      if (trial < 5) {
        const std::string bytes = Slurp(path);
        for (std::size_t n = 0; n < bytes.size(); ++n) {
          Spit(dir + "/cut.atf", bytes.substr(0, n));
          expect_format_error([&] { ReadFeatures(dir + "/cut.atf"); });
        }
        std::string bad = bytes;
        bad[0] ^= 0x20;
        Spit(dir + "/bad.atf", bad);
        expect_format_error([&] { ReadFeatures(dir + "/bad.atf"); });
      }
    }

    // A real checkpoint with optimizer moments and normalization.
    std::string ckpt = work_ + "/det_run_a/final.as2s";
    if (!fs::exists(ckpt)) {
      Cli({"gen-data", "--out", dir + "/data", "--pairs", "20", "--seed", "3"});
      Cli({"train", "--data", dir + "/data", "--out", dir + "/run", "--epochs", "1"});
      ckpt = dir + "/run/final.as2s";
    }
    const std::string bytes = Slurp(ckpt);
    const Checkpoint a = LoadCheckpoint(ckpt);
    SaveCheckpoint(dir + "/copy.as2s", a);
    const Checkpoint b = LoadCheckpoint(dir + "/copy.as2s");
    exact = exact && Slurp(dir + "/copy.as2s") == bytes && a.step == b.step &&
            a.params.size() == b.params.size() && a.adam_m.size() == a.params.size();
    for (std::size_t k = 0; exact && k < a.params.size(); ++k)
      exact = a.params[k].name == b.params[k].name &&
              std::memcmp(a.params[k].value.data(), b.params[k].value.data(),
                          a.params[k].value.size() * 4) == 0;
    std::vector<std::size_t> cuts;
    for (std::size_t n = 0; n < bytes.size(); n += (n < 256 || n + 256 > bytes.size()) ? 1 : 997)
      cuts.push_back(n);
    for (std::size_t n : cuts) {
      Spit(dir + "/cut.as2s", bytes.substr(0, n));
      expect_format_error([&] { LoadCheckpoint(dir + "/cut.as2s"); });
    }
    for (std::size_t pos : {0, 1, 2, 3}) {
      std::string bad = bytes;
      bad[pos] ^= 0x20;
      Spit(dir + "/bad.as2s", bad);
      expect_format_error([&] { LoadCheckpoint(dir + "/bad.as2s"); });
    }
    ok = exact && rejected == attempts;
    return Fmt("%zu feature files and a %zu-byte checkpoint round-trip %s; %zu/%zu truncated or "
               "bad-magic files rejected with a format error",
               features, bytes.size(), exact ? "bit-exactly" : "WITH DIFFERENCES", rejected,
               attempts);
  }

  // 8. DTW against exhaustive enumeration of monotone paths.
  std::string DtwOracle(bool &ok) {
    Rng rng(8);
    int equal = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
      const int n = rng.UniformInt(1, 6), m = rng.UniformInt(1, 6), d = rng.UniformInt(1, 4);
      const FeatureSequence a = testing::RandomSequence(n, d, rng);
      const FeatureSequence b = testing::RandomSequence(m, d, rng);
      if (DtwAlign(a, b).total == testing::BruteForceDtw(a, b)) ++equal;
    }
    ok = equal == trials;
    return Fmt("%d/%d random pairs (lengths 1..6) match the exhaustive minimum exactly", equal,
               trials);
  }

  // 9. Default configuration.
  std::string Defaults(bool &ok) {
    const RunConfig c;
    ok = c.training.sigma_g == 0.4 && c.training.weights.lambda_ga == 10000.0 &&
         c.training.weights.lambda_cp == 10.0 && c.training.batch_size == 32 &&
         c.training.epochs == 1000 && c.model.reduction_factor == 5;
    return Fmt("sigma_g %g, lambda_ga %g, lambda_cp %g, batch %d, epochs %d, r %d",
               c.training.sigma_g, c.training.weights.lambda_ga, c.training.weights.lambda_cp,
               c.training.batch_size, c.training.epochs, c.model.reduction_factor);
  }

  std::string work_;
  std::ofstream cli_log_;
  std::vector<std::string> info_;
  std::optional<Experiment> experiment_;
};

}  // namespace

int main(int argc, char **argv) {
  CLI::App app("atts2s acceptance run");
  std::string workdir = (fs::temp_directory_path() / "atts2s_acceptance").string();
  std::vector<int> only;
  app.add_option("--workdir", workdir, "scratch directory, emptied first");
  app.add_option("--only", only, "criteria to run (default: all)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  Acceptance run(workdir);
  return run.Run(std::set<int>(only.begin(), only.end())) ? 0 : 1;
}
