// src/run_config.cc

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

#include "atts2s/run_config.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace atts2s {

namespace {

std::string Trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename V>
V ParseNumber(const std::string &key, const std::string &text) {
  V v{};
  const char *end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError("cannot parse value '" + text + "' for " + key);
  return v;
}

bool ParseBool(const std::string &key, const std::string &text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("cannot parse value '" + text + "' for " + key + " (expected true/false)");
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Field {
  std::function<void(RunConfig &, const std::string &, const std::string &)> set;
  std::function<std::string(const RunConfig &)> get;
};

#define INT_FIELD(expr)                                                                   \
  Field {                                                                                 \
    [](RunConfig &c, const std::string &k, const std::string &v) {                        \
      expr = ParseNumber<int>(k, v);                                                      \
    },                                                                                    \
        [](const RunConfig &c) { return std::to_string(expr); }                           \
  }
#define REAL_FIELD(expr)                                                                  \
  Field {                                                                                 \
    [](RunConfig &c, const std::string &k, const std::string &v) {                        \
      expr = ParseNumber<double>(k, v);                                                   \
    },                                                                                    \
        [](const RunConfig &c) { return Num(expr); }                                      \
  }

const std::vector<std::pair<std::string, Field>> &FieldTable() {
  static const std::vector<std::pair<std::string, Field>> table = {
      // shared
      {"seed",
       {[](RunConfig &c, const std::string &k, const std::string &v) {
          c.synthetic.seed = c.training.seed = ParseNumber<std::uint64_t>(k, v);
        },
        [](const RunConfig &c) { return std::to_string(c.training.seed); }}},
      {"feature_dim",
       {[](RunConfig &c, const std::string &k, const std::string &v) {
          c.synthetic.feature_dim = c.model.feature_dim = ParseNumber<int>(k, v);
        },
        [](const RunConfig &c) { return std::to_string(c.model.feature_dim); }}},
      {"precision",
       {[](RunConfig &c, const std::string &k, const std::string &v) {
          if (v == "f32") c.precision = Precision::kF32;
          else if (v == "f64") c.precision = Precision::kF64;
          else throw ConfigError("cannot parse value '" + v + "' for " + k + " (f32 or f64)");
        },
        [](const RunConfig &c) {
          return std::string(c.precision == Precision::kF32 ? "f32" : "f64");
        }}},
      // synthetic data
      {"min_length", INT_FIELD(c.synthetic.min_length)},
      {"max_length", INT_FIELD(c.synthetic.max_length)},
      {"rho_min", REAL_FIELD(c.synthetic.rho_min)},
      {"rho_max", REAL_FIELD(c.synthetic.rho_max)},
      {"noise_std", REAL_FIELD(c.synthetic.noise_std)},
      {"pairs", INT_FIELD(c.synthetic.pairs)},
      {"test_pairs", INT_FIELD(c.synthetic.test_pairs)},
      {"identity_transform",
       {[](RunConfig &c, const std::string &k, const std::string &v) {
          c.synthetic.identity_transform = ParseBool(k, v);
        },
        [](const RunConfig &c) {
          return std::string(c.synthetic.identity_transform ? "true" : "false");
        }}},
      // model
      {"hidden_dim", INT_FIELD(c.model.hidden_dim)},
      {"attention_dim", INT_FIELD(c.model.attention_dim)},
      {"reduction_factor", INT_FIELD(c.model.reduction_factor)},
      {"prenet_layers", INT_FIELD(c.model.prenet_layers)},
      // training
      {"batch_size", INT_FIELD(c.training.batch_size)},
      {"epochs", INT_FIELD(c.training.epochs)},
      {"sigma_g", REAL_FIELD(c.training.sigma_g)},
      {"lambda_ga", REAL_FIELD(c.training.weights.lambda_ga)},
      {"lambda_cp", REAL_FIELD(c.training.weights.lambda_cp)},
      {"lambda_stop", REAL_FIELD(c.training.weights.lambda_stop)},
      {"stop_pos_weight", REAL_FIELD(c.training.stop_pos_weight)},
      {"warmup_steps", INT_FIELD(c.training.warmup_steps)},
      {"base_lr_scale", REAL_FIELD(c.training.base_lr_scale)},
      {"adam_beta1", REAL_FIELD(c.training.adam_beta1)},
      {"adam_beta2", REAL_FIELD(c.training.adam_beta2)},
      {"adam_eps", REAL_FIELD(c.training.adam_eps)},
      {"clip_norm", REAL_FIELD(c.training.clip_norm)},
      {"checkpoint_every", INT_FIELD(c.training.checkpoint_every)},
      // inference and evaluation
      {"max_ratio", REAL_FIELD(c.convert.max_ratio)},
      {"stop_threshold", REAL_FIELD(c.convert.stop_threshold)},
      {"mcd_dims",
       {[](RunConfig &c, const std::string &k, const std::string &v) {
          c.mcd_dims.clear();
          if (v == "all") return;
          std::stringstream ss(v);
          std::string item;
          while (std::getline(ss, item, ',')) c.mcd_dims.push_back(ParseNumber<int>(k, Trim(item)));
        },
        [](const RunConfig &c) {
          if (c.mcd_dims.empty()) return std::string("all");
          std::string s;
          for (std::size_t k = 0; k < c.mcd_dims.size(); ++k)
            s += (k ? "," : "") + std::to_string(c.mcd_dims[k]);
          return s;
        }}},
  };
  return table;
}

#undef INT_FIELD
#undef REAL_FIELD

const Field *Find(const std::string &key) {
  for (const auto &[name, field] : FieldTable())
    if (name == key) return &field;
  return nullptr;
}

}  // namespace

const std::vector<std::string> &RunConfig::Keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto &entry : FieldTable()) k.push_back(entry.first);
    return k;
  }();
  return keys;
}

bool RunConfig::IsKey(const std::string &key) { return Find(key) != nullptr; }

void RunConfig::Set(const std::string &key, const std::string &value) {
  const Field *f = Find(key);
  if (!f) {
    std::string valid;
    for (const auto &k : Keys()) valid += (valid.empty() ? "" : ", ") + k;
    throw ConfigError("unknown key '" + key + "'; valid keys: " + valid);
  }
  f->set(*this, key, Trim(value));
}

void RunConfig::Validate() const {
  synthetic.Validate();
  model.Validate();
  training.Validate();
  convert.Validate();
  if (training.seed > (std::uint64_t(1) << 53))
    throw ConfigError("seed must be <= 2^53");
  for (int d : mcd_dims)
    if (d < 0 || d >= model.feature_dim)
      throw ConfigError("mcd_dims entry " + std::to_string(d) + " must be in [0, feature_dim)");
}

std::string RunConfig::Dump() const {
  std::string out;
  for (const auto &[name, field] : FieldTable()) out += name + " = " + field.get(*this) + "\n";
  return out;
}

RunConfig LoadRunConfig(const std::string &path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    base.Set(Trim(t.substr(0, eq)), Trim(t.substr(eq + 1)));
  }
  return base;
}

}  // namespace atts2s
