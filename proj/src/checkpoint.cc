// src/checkpoint.cc

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

#include "atts2s/checkpoint.h"

#include <bit>
#include <cmath>
#include <map>

#include "binary_io.h"

namespace atts2s {

namespace {

constexpr char kMagic[] = "AS2S";
const char *const kNormFields[] = {"source_mean", "source_std", "target_mean", "target_std"};

std::vector<double> *NormField(NormStats &n, int k) {
  std::vector<double> *f[] = {&n.source_mean, &n.source_std, &n.target_mean, &n.target_std};
  return f[k];
}

bool EndsWith(const std::string &s, const std::string &suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(),
                                                suffix) == 0;
}

bool StartsWith(const std::string &s, const std::string &prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

void WriteHeader(binio::Writer &w, const std::string &name, const std::vector<int> &dims) {
  if (name.size() > 0xffff) throw IoError("record name too long: " + name);
  w.U16(std::uint16_t(name.size()));
  w.Bytes(name.data(), name.size());
  w.U8(std::uint8_t(dims.size()));
  for (int d : dims) w.U32(std::uint32_t(d));
}

void WriteTensor(binio::Writer &w, const std::string &name, const Tensor<float> &t) {
  WriteHeader(w, name, t.shape());
  for (float v : t.values()) w.F32(v);
}

void WriteDoubles(binio::Writer &w, const std::string &name, const std::vector<double> &v) {
  WriteHeader(w, name, {int(v.size()), 2});
  for (double x : v) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    w.U32(std::uint32_t(bits));
    w.U32(std::uint32_t(bits >> 32));
  }
}

struct RawRecord {
  std::vector<int> dims;
  std::vector<std::uint32_t> words;
  std::size_t offset = 0;
};

}  // namespace

bool Checkpoint::HasConfig(const std::string &key) const {
  for (const auto &kv : config)
    if (kv.first == key) return true;
  return false;
}

double Checkpoint::Config(const std::string &key) const {
  for (const auto &kv : config)
    if (kv.first == key) return kv.second;
  throw ConfigError("checkpoint has no config value " + key);
}

void SaveCheckpoint(const std::string &path, const Checkpoint &ckpt) {
  const bool moments = !ckpt.adam_m.empty();
  if (moments && (ckpt.adam_m.size() != ckpt.params.size() ||
                  ckpt.adam_v.size() != ckpt.params.size()))
    throw DimensionError("optimizer moments do not match the parameter count");
  std::uint32_t count = std::uint32_t(ckpt.config.size() + ckpt.params.size() * (moments ? 3 : 1));
  const bool norm = !ckpt.norm.source_mean.empty();
  if (norm) count += 4;

  binio::Writer w;
  w.Bytes(kMagic, 4);
  w.U8(kCheckpointVersion);
  w.U32(count);
  for (const auto &kv : ckpt.config) WriteDoubles(w, "config." + kv.first, {kv.second});
  if (norm) {
    NormStats n = ckpt.norm;
    for (int k = 0; k < 4; ++k) WriteDoubles(w, std::string("norm.") + kNormFields[k], *NormField(n, k));
  }
  for (std::size_t k = 0; k < ckpt.params.size(); ++k) {
    const auto &p = ckpt.params[k];
    if (EndsWith(p.name, ".m") || EndsWith(p.name, ".v") || StartsWith(p.name, "config.") ||
        StartsWith(p.name, "norm."))
      throw ConfigError("parameter name " + p.name + " collides with a reserved record name");
    WriteTensor(w, p.name, p.value);
    if (moments) {
      if (!ckpt.adam_m[k].SameShape(p.value) || !ckpt.adam_v[k].SameShape(p.value))
        throw DimensionError("moment shape mismatch for " + p.name);
      WriteTensor(w, p.name + ".m", ckpt.adam_m[k]);
      WriteTensor(w, p.name + ".v", ckpt.adam_v[k]);
    }
  }
  w.U64(ckpt.step);
  w.Save(path);
}

Checkpoint LoadCheckpoint(const std::string &path) {
  const std::vector<std::uint8_t> buf = binio::ReadFile(path);
  binio::Reader rd(buf, path);
  if (rd.Chars(4, "magic") != std::string(kMagic, 4))
    throw FormatError(path + ": bad magic, not a checkpoint", 0);
  const std::uint8_t version = rd.U8("version");
  if (version != kCheckpointVersion) throw UnsupportedVersionError(version, 4);
  const std::uint32_t count = rd.U32("record count");

  std::vector<std::pair<std::string, RawRecord>> records;
  std::map<std::string, std::size_t> by_name;
  for (std::uint32_t r = 0; r < count; ++r) {
    RawRecord rec;
    rec.offset = rd.offset();
    const std::uint16_t len = rd.U16("record name length");
    std::string name = rd.Chars(len, "record name");
    if (name.empty()) throw FormatError(path + ": empty record name", (long long)rec.offset);
    const std::uint8_t rank = rd.U8("record rank");
    std::uint64_t n = 1;
    for (int k = 0; k < rank; ++k) {
      const std::uint32_t d = rd.U32("record dims");
      if (d == 0 || d > 0x7fffffff)
        throw FormatError(path + ": record " + name + " has dimension " + std::to_string(d),
                          (long long)rd.offset() - 4);
      rec.dims.push_back(int(d));
      n *= d;
    }
    if (rank == 0) throw FormatError(path + ": record " + name + " has rank 0", (long long)rd.offset() - 1);
    if (n > rd.remaining() / 4) rd.Need(std::size_t(-1), "record payload");
    rec.words.resize(std::size_t(n));
    for (auto &word : rec.words) word = rd.U32("record payload");
    if (by_name.count(name))
      throw FormatError(path + ": duplicate record " + name, (long long)rec.offset);
    by_name[name] = records.size();
    records.emplace_back(std::move(name), std::move(rec));
  }
  Checkpoint ck;
  ck.step = rd.U64("global step");
  if (rd.remaining() != 0)
    throw FormatError(path + ": trailing bytes after global step", (long long)rd.offset());

  auto doubles = [&](const std::string &name, const RawRecord &rec) {
    if (rec.dims.size() != 2 || rec.dims[1] != 2)
      throw FormatError(path + ": record " + name + " is not a double record",
                        (long long)rec.offset);
    std::vector<double> out(std::size_t(rec.dims[0]));
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = std::bit_cast<double>(std::uint64_t(rec.words[2 * k]) |
                                     (std::uint64_t(rec.words[2 * k + 1]) << 32));
    return out;
  };
  auto tensor = [](const RawRecord &rec) {
    std::vector<float> v(rec.words.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::bit_cast<float>(rec.words[k]);
    return Tensor<float>(rec.dims, std::move(v));
  };

  std::vector<std::string> moment_names;
  for (const auto &[name, rec] : records) {
    if (StartsWith(name, "config.")) {
      const auto v = doubles(name, rec);
      if (v.size() != 1)
        throw FormatError(path + ": config record " + name + " must hold one value",
                          (long long)rec.offset);
      ck.config.emplace_back(name.substr(7), v[0]);
    } else if (StartsWith(name, "norm.")) {
      bool known = false;
      for (int k = 0; k < 4; ++k)
        if (name == std::string("norm.") + kNormFields[k]) {
          *NormField(ck.norm, k) = doubles(name, rec);
          known = true;
        }
      if (!known)
        throw FormatError(path + ": unknown record " + name, (long long)rec.offset);
    } else if (EndsWith(name, ".m") || EndsWith(name, ".v")) {
      moment_names.push_back(name);
    } else {
      ck.params.Add(name, tensor(rec));
    }
  }
  const bool have_norm = !ck.norm.source_mean.empty();
  if (have_norm) {
    const std::size_t d = ck.norm.source_mean.size();
    if (ck.norm.source_std.size() != d || ck.norm.target_mean.size() != d ||
        ck.norm.target_std.size() != d)
      throw FormatError(path + ": incomplete normalization records", 0);
  }

  if (!moment_names.empty()) {
    if (moment_names.size() != 2 * ck.params.size())
      throw FormatError(path + ": optimizer moments do not cover every parameter", 0);
    for (const auto &p : ck.params) {
      for (const char *suffix : {".m", ".v"}) {
        auto it = by_name.find(p.name + suffix);
        if (it == by_name.end())
          throw FormatError(path + ": missing record " + p.name + suffix, 0);
        const RawRecord &rec = records[it->second].second;
        Tensor<float> t = tensor(rec);
        if (!t.SameShape(p.value))
          throw FormatError(path + ": record " + p.name + suffix + " has shape " +
                                t.ShapeString() + ", parameter has " + p.value.ShapeString(),
                            (long long)rec.offset);
        (suffix[1] == 'm' ? ck.adam_m : ck.adam_v).push_back(std::move(t));
      }
    }
  }
  return ck;
}

void StoreModelConfig(Checkpoint &ck, const ModelConfig &cfg) {
  ck.config.emplace_back("feature_dim", cfg.feature_dim);
  ck.config.emplace_back("hidden_dim", cfg.hidden_dim);
  ck.config.emplace_back("attention_dim", cfg.attention_dim);
  ck.config.emplace_back("reduction_factor", cfg.reduction_factor);
  ck.config.emplace_back("prenet_layers", cfg.prenet_layers);
}

ModelConfig LoadModelConfig(const Checkpoint &ck) {
  auto integer = [&](const char *key) {
    const double v = ck.Config(key);
    if (v != std::floor(v) || v < 1 || v > 1e6)
      throw ConfigError(std::string("checkpoint value ") + key + " is not a valid count");
    return int(v);
  };
  ModelConfig cfg;
  cfg.feature_dim = integer("feature_dim");
  cfg.hidden_dim = integer("hidden_dim");
  cfg.attention_dim = integer("attention_dim");
  cfg.reduction_factor = integer("reduction_factor");
  cfg.prenet_layers = integer("prenet_layers");
  cfg.Validate();
  return cfg;
}

void CheckParameters(const Checkpoint &ck, const ModelConfig &cfg) {
  const ParameterSet<float> expected = InitParameters<float>(cfg, 0);
  if (expected.size() != ck.params.size())
    throw ConfigError("checkpoint holds " + std::to_string(ck.params.size()) +
                      " parameters, model expects " + std::to_string(expected.size()));
  for (const auto &p : expected) {
    if (!ck.params.Contains(p.name))
      throw ConfigError("checkpoint is missing parameter " + p.name);
    const auto &got = ck.params.Get(p.name).value;
    if (!got.SameShape(p.value))
      throw ConfigError("checkpoint parameter " + p.name + " has shape " + got.ShapeString() +
                        ", model expects " + p.value.ShapeString());
  }
}

template <typename T>
ParameterSet<T> CheckpointParameters(const Checkpoint &ck) {
  return ck.params.Cast<T>();
}

template ParameterSet<float> CheckpointParameters<float>(const Checkpoint &);
template ParameterSet<double> CheckpointParameters<double>(const Checkpoint &);

}  // namespace atts2s
