// src/eval.cc

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

#include "atts2s/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

namespace atts2s {

namespace {

using FrameCost = std::function<double(int, int)>;

DtwResult Dtw(int n, int m, const FrameCost &cost) {
  if (n == 0 || m == 0) throw EmptyInputError("dtw needs two non-empty sequences");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> acc(std::size_t(n) * m, inf);
  // 0 = diagonal, 1 = from (i-1, j), 2 = from (i, j-1)
  std::vector<std::uint8_t> from(std::size_t(n) * m, 0);
  auto at = [m](int i, int j) { return std::size_t(i) * m + j; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      double best = 0.0;
      std::uint8_t dir = 0;
      if (i > 0 || j > 0) {
        best = inf;
        if (i > 0 && j > 0) best = acc[at(i - 1, j - 1)];
        if (i > 0 && acc[at(i - 1, j)] < best) best = acc[at(i - 1, j)], dir = 1;
        if (j > 0 && acc[at(i, j - 1)] < best) best = acc[at(i, j - 1)], dir = 2;
      }
      acc[at(i, j)] = best + cost(i, j);
      from[at(i, j)] = dir;
    }
  DtwResult res;
  res.total = acc[at(n - 1, m - 1)];
  int i = n - 1, j = m - 1;
  while (true) {
    res.path.emplace_back(i, j);
    if (i == 0 && j == 0) break;
    switch (from[at(i, j)]) {
      case 0: --i, --j; break;
      case 1: --i; break;
      default: --j;
    }
  }
  std::reverse(res.path.begin(), res.path.end());
  return res;
}

void CheckDims(const FeatureSequence &a, const FeatureSequence &b) {
  if (a.empty() || b.empty()) throw EmptyInputError("dtw needs two non-empty sequences");
  if (a.dims() != b.dims())
    throw DimensionError("sequences have " + std::to_string(a.dims()) + " and " +
                         std::to_string(b.dims()) + " dims");
}

}  // namespace

DtwResult DtwAlign(const FeatureSequence &a, const FeatureSequence &b) {
  CheckDims(a, b);
  const int d = a.dims();
  DtwResult res = Dtw(a.frames(), b.frames(), [&](int i, int j) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += std::fabs(double(a(i, k)) - double(b(j, k)));
    return s;
  });
  res.cost = res.total / (double(res.path.size()) * d);
  return res;
}

double Mcd(const FeatureSequence &a, const FeatureSequence &b, const std::vector<int> &dims) {
  CheckDims(a, b);
  if (dims.empty()) throw ConfigError("mcd needs at least one dimension");
  for (int k : dims)
    if (k < 0 || k >= a.dims())
      throw ConfigError("mcd dimension " + std::to_string(k) + " outside [0, " +
                        std::to_string(a.dims()) + ")");
  auto dist = [&](int i, int j) {
    double s = 0.0;
    for (int k : dims) {
      const double e = double(a(i, k)) - double(b(j, k));
      s += e * e;
    }
    return std::sqrt(s);
  };
  const DtwResult res = Dtw(a.frames(), b.frames(), dist);
  double sum = 0.0;
  for (auto [i, j] : res.path) sum += dist(i, j);
  return 10.0 * std::numbers::sqrt2 / std::numbers::ln10 * sum / double(res.path.size());
}

double DiagonalityDeviation(const Tensor<double> &a) {
  if (a.rank() != 2 || a.empty()) throw DimensionError("attention matrix must be 2-d");
  const int I = a.dim(0), J = a.dim(1);
  double sum = 0.0;
  for (int j = 0; j < J; ++j) {
    int best = 0;
    for (int i = 1; i < I; ++i)
      if (a(i, j) > a(best, j)) best = i;
    sum += std::fabs(double(best + 1) / I - double(j + 1) / J);
  }
  return sum / J;
}

double DurationRatioError(int steps_taken, int reduction_factor, int source_frames,
                          double rho) {
  if (!(rho > 0)) throw ConfigError("rho must be > 0");
  if (source_frames < 1) throw EmptyInputError("source has no frames");
  return std::fabs(double(steps_taken) * reduction_factor / (rho * source_frames) - 1.0);
}

void EvalReport::Aggregate() {
  const double n = double(pairs.size());
  mean_dtw_l1 = mean_mcd_db = mean_diagonality_deviation = mean_duration_ratio_error = 0.0;
  duration_pass_fraction = stopped_naturally_fraction = 0.0;
  if (pairs.empty()) return;
  for (const auto &p : pairs) {
    mean_dtw_l1 += p.dtw_l1;
    mean_mcd_db += p.mcd_db;
    mean_diagonality_deviation += p.diagonality_deviation;
    mean_duration_ratio_error += p.duration_ratio_error;
    duration_pass_fraction += p.duration_ratio_error <= kDurationTolerance ? 1.0 : 0.0;
    stopped_naturally_fraction += p.stopped_naturally ? 1.0 : 0.0;
  }
  mean_dtw_l1 /= n;
  mean_mcd_db /= n;
  mean_diagonality_deviation /= n;
  mean_duration_ratio_error /= n;
  duration_pass_fraction /= n;
  stopped_naturally_fraction /= n;
}

template <typename T>
EvalReport EvaluateConversion(const std::vector<ParallelPair> &pairs,
                              const std::vector<double> &rho, const ParameterSet<T> &params,
                              const ModelConfig &cfg, const NormStats &norm,
                              const ConvertOptions &opts, std::vector<int> mcd_dims) {
  if (pairs.empty()) throw EmptyInputError("no pairs to evaluate");
  if (rho.size() != pairs.size())
    throw DimensionError(std::to_string(rho.size()) + " warp factors for " +
                         std::to_string(pairs.size()) + " pairs");
  if (mcd_dims.empty())
    for (int k = 0; k < cfg.feature_dim; ++k) mcd_dims.push_back(k);
  EvalReport report;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const ParallelPair &p = pairs[k];
    const FeatureSequence x = ApplyNorm(p.source, norm.source_mean, norm.source_std);
    const DecodeResult dec = Convert(x, params, cfg, opts);
    const FeatureSequence y = InvertNorm(dec.output, norm.target_mean, norm.target_std);
    PairEval e;
    e.dtw_l1 = DtwAlign(y, p.target).cost;
    e.mcd_db = Mcd(y, p.target, mcd_dims);
    e.diagonality_deviation = DiagonalityDeviation(dec.attention);
    e.duration_ratio_error =
        DurationRatioError(dec.steps_taken, cfg.reduction_factor, p.source.frames(), rho[k]);
    e.source_frames = p.source.frames();
    e.output_frames = y.frames();
    e.steps_taken = dec.steps_taken;
    e.stopped_naturally = dec.stopped_naturally;
    report.pairs.push_back(e);
  }
  report.Aggregate();
  return report;
}

std::string FormatReport(const EvalReport &r) {
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };
  for (std::size_t k = 0; k < r.pairs.size(); ++k) {
    const PairEval &p = r.pairs[k];
    os << "pair: " << k << '\n'
       << "dtw_l1: " << num(p.dtw_l1) << '\n'
       << "mcd_db: " << num(p.mcd_db) << '\n'
       << "diagonality_deviation: " << num(p.diagonality_deviation) << '\n'
       << "duration_ratio_error: " << num(p.duration_ratio_error) << '\n'
       << "source_frames: " << p.source_frames << '\n'
       << "output_frames: " << p.output_frames << '\n'
       << "steps_taken: " << p.steps_taken << '\n'
       << "stopped_naturally: " << (p.stopped_naturally ? "true" : "false") << '\n';
  }
  os << "aggregate:\n"
     << "pairs: " << r.pairs.size() << '\n'
     << "dtw_l1: " << num(r.mean_dtw_l1) << '\n'
     << "mcd_db: " << num(r.mean_mcd_db) << '\n'
     << "diagonality_deviation: " << num(r.mean_diagonality_deviation) << '\n'
     << "duration_ratio_error: " << num(r.mean_duration_ratio_error) << '\n'
     << "duration_within_tolerance: " << num(r.duration_pass_fraction) << '\n'
     << "stopped_naturally: " << num(r.stopped_naturally_fraction) << '\n';
  return os.str();
}

void WriteReport(const std::string &path, const EvalReport &report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << FormatReport(report);
  if (!out) throw IoError("write failed for " + path);
}

template EvalReport EvaluateConversion<float>(const std::vector<ParallelPair> &,
                                              const std::vector<double> &,
                                              const ParameterSet<float> &, const ModelConfig &,
                                              const NormStats &, const ConvertOptions &,
                                              std::vector<int>);
template EvalReport EvaluateConversion<double>(const std::vector<ParallelPair> &,
                                               const std::vector<double> &,
                                               const ParameterSet<double> &,
                                               const ModelConfig &, const NormStats &,
                                               const ConvertOptions &, std::vector<int>);

}  // namespace atts2s
