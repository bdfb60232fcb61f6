// tests/test_cli.cc

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "atts2s/checkpoint.h"
#include "atts2s/cli.h"
#include "atts2s/run_config.h"
#include "test_util.h"

using namespace atts2s;
using atts2s::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome Run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void Spit(const std::string &path, const std::string &bytes) {
  std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
}

std::string FirstLine(const std::string &s) { return s.substr(0, s.find('\n')); }

int CountLines(const std::string &s) { return int(std::count(s.begin(), s.end(), '\n')); }

// Name -> contents of every regular file below `dir`.
std::map<std::string, std::string> Snapshot(const std::string &dir) {
  std::map<std::string, std::string> files;
  for (const auto &e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file())
      files[fs::relative(e.path(), dir).string()] = Slurp(e.path().string());
  return files;
}

const std::vector<std::string> kTinyData = {"--feature_dim", "3",  "--pairs",      "10",
                                            "--test_pairs",  "3",  "--min_length", "6",
                                            "--max_length",  "10", "--seed",       "7"};
const std::vector<std::string> kTinyModel = {
    "--feature_dim", "3", "--hidden_dim", "8",          "--attention_dim", "8",
    "--reduction_factor", "2", "--batch_size", "4", "--epochs", "2", "--warmup_steps", "10"};

std::vector<std::string> Cat(std::vector<std::string> a, const std::vector<std::string> &b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("defaults match the reference hyperparameters") {
  const RunConfig c;
  CHECK(c.training.sigma_g == 0.4);
  CHECK(c.training.weights.lambda_ga == 10000.0);
  CHECK(c.training.weights.lambda_cp == 10.0);
  CHECK(c.training.batch_size == 32);
  CHECK(c.training.epochs == 1000);
  CHECK(c.model.reduction_factor == 5);
  CHECK_NOTHROW(c.Validate());

  const std::string dir = TempDir("cli_defaults");
  Spit(dir + "/empty.cfg", "");
  const RunConfig loaded = LoadRunConfig(dir + "/empty.cfg");
  CHECK(loaded.Dump() == c.Dump());
  CHECK(loaded.training.weights.lambda_ga == 10000.0);
}

TEST_CASE("config keys, files and overrides") {
  const std::string dir = TempDir("cli_config");
  SUBCASE("a single override leaves the rest at default") {
    RunConfig c;
    c.Set("sigma_g", "0.2");
    CHECK(c.training.sigma_g == 0.2);
    RunConfig d;
    d.training.sigma_g = 0.2;
    CHECK(c.Dump() == d.Dump());
  }
  SUBCASE("shared keys reach every section") {
    RunConfig c;
    c.Set("seed", "99");
    c.Set("feature_dim", "6");
    CHECK(c.synthetic.seed == 99);
    CHECK(c.training.seed == 99);
    CHECK(c.synthetic.feature_dim == 6);
    CHECK(c.model.feature_dim == 6);
  }
  SUBCASE("dump round trips through a file") {
    RunConfig c;
    c.Set("sigma_g", "0.123456789012345");
    c.Set("precision", "f64");
    c.Set("mcd_dims", "1,2,5");
    c.Set("identity_transform", "true");
    Spit(dir + "/c.cfg", c.Dump());
    CHECK(LoadRunConfig(dir + "/c.cfg").Dump() == c.Dump());
    for (const auto &key : RunConfig::Keys())
      CHECK(c.Dump().find(key + " = ") != std::string::npos);
  }
  SUBCASE("comments and blank lines are skipped") {
    Spit(dir + "/c.cfg", "# comment\n\n  lambda_cp =  3 \nbatch_size=8\n");
    const RunConfig c = LoadRunConfig(dir + "/c.cfg");
    CHECK(c.training.weights.lambda_cp == 3.0);
    CHECK(c.training.batch_size == 8);
  }
  SUBCASE("rejections") {
    RunConfig c;
    try {
      c.Set("sigma", "1");
      FAIL("unknown key accepted");
    } catch (const ConfigError &e) {
      const std::string what = e.what();
      CHECK(what.find("valid keys") != std::string::npos);
      CHECK(what.find("sigma_g") != std::string::npos);
    }
    CHECK_THROWS_AS(c.Set("batch_size", "3.5"), ConfigError);
    CHECK_THROWS_AS(c.Set("sigma_g", "abc"), ConfigError);
    CHECK_THROWS_AS(c.Set("precision", "f16"), ConfigError);
    c.Set("sigma_g", "-1");
    try {
      c.Validate();
      FAIL("negative sigma_g accepted");
    } catch (const ConfigError &e) {
      CHECK(std::string(e.what()).find("sigma_g must be > 0") != std::string::npos);
    }
    Spit(dir + "/bad.cfg", "sigma_g 0.3\n");
    CHECK_THROWS_AS(LoadRunConfig(dir + "/bad.cfg"), ConfigError);
    CHECK_THROWS_AS(LoadRunConfig(dir + "/missing.cfg"), IoError);
  }
}

TEST_CASE("command line validation and exit codes") {
  const std::string dir = TempDir("cli_exit");
  SUBCASE("usage errors") {
    for (const auto &args : std::vector<std::vector<std::string>>{
             {},
             {"frobnicate"},
             {"gen-data"},
             {"gen-data", "--out"},
             {"gen-data", "--out", dir, "stray"},
             {"gen-data", "--out", dir, "--sigma", "1"},
             {"convert", "--checkpoint", "x", "--input", "y"}}) {
      const Outcome o = Run(args);
      CHECK(o.code == kExitValidation);
      CHECK(FirstLine(o.err).rfind("error: ", 0) == 0);
      CHECK(o.err.find("usage: atts2s") != std::string::npos);
      CHECK(o.err.find("sigma_g") != std::string::npos);
    }
  }
  SUBCASE("invariant violations name the field") {
    const Outcome o = Run({"gen-data", "--out", dir, "--sigma_g", "-1"});
    CHECK(o.code == kExitValidation);
    CHECK(o.err == "error: config error: sigma_g must be > 0\n");
    CHECK(fs::is_empty(dir));
  }
  SUBCASE("help") {
    const Outcome o = Run({"--help"});
    CHECK(o.code == kExitOk);
    CHECK(o.out == Usage());
  }
  SUBCASE("runtime failures exit with 2 on a single line") {
    Spit(dir + "/junk.as2s", "not a checkpoint");
    Spit(dir + "/x.atf", "junk");
    for (const auto &args : std::vector<std::vector<std::string>>{
             {"convert", "--checkpoint", dir + "/missing.as2s", "--input", "x", "--output", "y"},
             {"convert", "--checkpoint", dir + "/junk.as2s", "--input", "x", "--output", "y"},
             {"train", "--data", dir + "/nothing", "--out", dir + "/run"},
             {"gen-data", "--out", dir, "--config", dir + "/missing.cfg"}}) {
      const Outcome o = Run(args);
      CHECK(o.code == kExitRuntime);
      CHECK(o.err.rfind("error: ", 0) == 0);
      CHECK(CountLines(o.err) == 1);
    }
  }
}

TEST_CASE("subcommand smoke runs") {
  const std::string dir = TempDir("cli_smoke");
  const std::string data = dir + "/d", run = dir + "/run1";

  Spit(dir + "/data.cfg", "pairs = 99\nnoise_std = 0.02\n");
  Outcome o = Run(Cat({"gen-data", "--out", data, "--config", dir + "/data.cfg"}, kTinyData));
  REQUIRE(o.code == kExitOk);
  for (int k = 0; k < 10; ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "/src_%05d.atf", k);
    CHECK(fs::exists(data + name));
  }
  CHECK_FALSE(fs::exists(data + "/src_00010.atf"));
  for (const char *f : {"manifest.tsv", "groundtruth.tsv", "test_manifest.tsv",
                        "test_groundtruth.tsv"})
    CHECK(fs::exists(data + "/" + f));
  const auto data_before = Snapshot(data);

  o = Run(Cat(Cat({"train", "--data", data, "--out", run}, kTinyModel), {"--sigma_g", "0.3"}));
  REQUIRE(o.code == kExitOk);
  CHECK(fs::exists(run + "/final.as2s"));
  CHECK(CountLines(Slurp(run + "/train.log")) == 3);
  CHECK(CountLines(o.out) == 4);
  const RunConfig saved = LoadRunConfig(run + "/config.txt");
  CHECK(saved.training.sigma_g == 0.3);
  CHECK(saved.model.hidden_dim == 8);
  CHECK(saved.training.weights.lambda_ga == 10000.0);

  const std::string x = data + "/src_00000.atf", ckpt = run + "/final.as2s";
  o = Run({"convert", "--checkpoint", ckpt, "--input", x, "--output", dir + "/y.atf",
           "--attention", dir + "/a.pgm"});
  REQUIRE(o.code == kExitOk);
  const FeatureSequence y = ReadFeatures(dir + "/y.atf");
  CHECK(y.dims() == 3);
  CHECK(y.frames() % 2 == 0);
  CHECK(Slurp(dir + "/a.pgm").rfind("P5\n", 0) == 0);

  o = Run({"export-attention", "--checkpoint", ckpt, "--input", x, "--target",
           data + "/tgt_00000.atf", "--output", dir + "/a.csv"});
  REQUIRE(o.code == kExitOk);
  const int target_frames = ReadFeatures(data + "/tgt_00000.atf").frames();
  const std::string csv = Slurp(dir + "/a.csv");
  CHECK(CountLines(csv) == ReadFeatures(x).frames());
  CHECK(std::count(csv.begin(), csv.begin() + csv.find('\n'), ',') + 1 ==
        (target_frames + 1) / 2);
  CHECK(Run({"export-attention", "--checkpoint", ckpt, "--input", x, "--output",
             dir + "/a.png"}).code == kExitValidation);

  o = Run({"eval", "--checkpoint", ckpt, "--data", data, "--report", dir + "/report.txt"});
  REQUIRE(o.code == kExitOk);
  const std::string report = Slurp(dir + "/report.txt");
  CHECK(report.find("aggregate:\npairs: 3\n") != std::string::npos);
  CHECK(report.find("pair: 2\n") != std::string::npos);

  CHECK(Snapshot(data) == data_before);

  SUBCASE("identical invocations give identical artifacts") {
    const std::string data2 = dir + "/d2", run2 = dir + "/run2";
    REQUIRE(Run(Cat({"gen-data", "--out", data2, "--config", dir + "/data.cfg"}, kTinyData))
                .code == kExitOk);
    CHECK(Snapshot(data2) == data_before);
    REQUIRE(Run(Cat(Cat({"train", "--data", data2, "--out", run2}, kTinyModel),
                    {"--sigma_g", "0.3"})).code == kExitOk);
    auto a = Snapshot(run), b = Snapshot(run2);
    CHECK(a.size() == b.size());
    for (const auto &[name, bytes] : a) CHECK_MESSAGE(b[name] == bytes, name);
  }
}
