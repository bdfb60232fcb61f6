// src/inference.cc

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

#include "atts2s/inference.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace atts2s {

void ConvertOptions::Validate() const {
  if (!(max_ratio > 0) || !std::isfinite(max_ratio))
    throw ConfigError("max_ratio must be > 0");
  if (!(stop_threshold > 0 && stop_threshold < 1))
    throw ConfigError("stop_threshold must be in (0, 1)");
}

int StepCap(int source_frames, int reduction_factor, double max_ratio) {
  return std::max(1, int(std::ceil(max_ratio * source_frames / reduction_factor)));
}

template <typename T>
DecodeResult Convert(const FeatureSequence &source, const ParameterSet<T> &params,
                     const ModelConfig &cfg, const ConvertOptions &opts) {
  opts.Validate();
  if (source.empty()) throw EmptyInputError("source sequence is empty");
  if (source.dims() != cfg.feature_dim)
    throw DimensionError("source has " + std::to_string(source.dims()) +
                         " dims, model expects " + std::to_string(cfg.feature_dim));
  const int I = source.frames(), D = cfg.feature_dim, H = cfg.hidden_dim;
  const int r = cfg.reduction_factor;
  int cap = StepCap(I, r, opts.max_ratio);
  if (opts.teacher) {
    if (opts.teacher->empty() || opts.teacher->dims() != D)
      throw DimensionError("teacher sequence does not match the model");
    cap = (opts.teacher->frames() + r - 1) / r;
  }

  // Graphs only read parameter values.
  Graph<T> g(const_cast<ParameterSet<T> *>(&params), false);
  Tensor<T> x = Tensor<T>::Matrix(I, D);
  for (int t = 0; t < I; ++t)
    for (int d = 0; d < D; ++d) x(t, d) = T(source(t, d));
  const EncodedSource enc = EncodeSource(g, cfg, g.Constant(std::move(x)), Mask(I, 1), 1);

  std::vector<std::vector<T>> frames;
  std::vector<std::vector<double>> columns;
  std::vector<double> stops;
  Var enc_state = g.Constant(Tensor<T>::Matrix(1, H));
  Var dec_state = g.Constant(Tensor<T>::Matrix(1, H));
  Tensor<T> feed = Tensor<T>::Matrix(1, D);  // go frame
  bool natural = false;
  for (int j = 0; j < cap; ++j) {
    Var q = EncodeTargetStep(g, cfg, g.Constant(feed), enc_state);
    enc_state = q;
    const Attention att = Attend(g, cfg, enc, q);
    const DecoderStep step = DecodeStep(g, cfg, att.context, q, dec_state);
    dec_state = step.state;

    const Tensor<T> &a = g.value(att.weights);
    columns.emplace_back(a.values().begin(), a.values().end());
    const Tensor<T> &y = g.value(step.frames);
    for (int k = 0; k < r; ++k) frames.emplace_back(y.row(k), y.row(k) + D);
    const double logit = double(g.value(step.stop_logit)[0]);
    const double p = 1.0 / (1.0 + std::exp(-logit));
    stops.push_back(p);

    if (opts.teacher) {
      const int last = std::min((j + 1) * r, opts.teacher->frames()) - 1;
      for (int d = 0; d < D; ++d) feed(0, d) = T((*opts.teacher)(last, d));
    } else {
      std::copy(y.row(r - 1), y.row(r - 1) + D, feed.row(0));
      if (p > opts.stop_threshold) {
        natural = true;
        break;
      }
    }
  }

  DecodeResult res;
  res.steps_taken = int(columns.size());
  res.stopped_naturally = natural;
  res.output = FeatureSequence(int(frames.size()), D);
  for (std::size_t t = 0; t < frames.size(); ++t)
    for (int d = 0; d < D; ++d) res.output(int(t), d) = float(frames[t][d]);
  res.attention = Tensor<double>::Matrix(I, res.steps_taken);
  for (int j = 0; j < res.steps_taken; ++j)
    for (int i = 0; i < I; ++i) res.attention(i, j) = columns[j][i];
  res.stop_probs = Tensor<double>({res.steps_taken}, stops);
  return res;
}

AttentionFormat AttentionFormatFromPath(const std::string &path) {
  auto ends = [&](const char *ext) {
    const std::string e(ext);
    return path.size() >= e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0;
  };
  if (ends(".pgm")) return AttentionFormat::kPgm;
  if (ends(".csv")) return AttentionFormat::kCsv;
  throw ConfigError("attention output must end in .pgm or .csv: " + path);
}

void ExportAttention(const Tensor<double> &a, const std::string &path, AttentionFormat format) {
  if (a.rank() != 2 || a.empty()) throw DimensionError("attention matrix must be 2-d");
  const int I = a.dim(0), J = a.dim(1);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  if (format == AttentionFormat::kPgm) {
    double peak = 0;
    for (double v : a.values()) peak = std::max(peak, v);
    out << "P5\n" << J << ' ' << I << "\n255\n";
    for (double v : a.values()) {
      const long px = peak > 0 ? std::lround(255.0 * v / peak) : 0;
      out.put(char(std::clamp(px, 0L, 255L)));
    }
  } else {
    char buf[32];
    for (int i = 0; i < I; ++i) {
      for (int j = 0; j < J; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", a(i, j));
        out << (j ? "," : "") << buf;
      }
      out << '\n';
    }
  }
  if (!out) throw IoError("write failed for " + path);
}

template DecodeResult Convert<float>(const FeatureSequence &, const ParameterSet<float> &,
                                     const ModelConfig &, const ConvertOptions &);
template DecodeResult Convert<double>(const FeatureSequence &, const ParameterSet<double> &,
                                      const ModelConfig &, const ConvertOptions &);

}  // namespace atts2s
