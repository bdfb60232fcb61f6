// src/grad_check.cc

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

#include "atts2s/grad_check.h"

#include <algorithm>
#include <cmath>
#include <vector>

namespace atts2s {

GradCheckResult GradCheck(const Objective &f, ParameterSet<double> &params, double eps) {
  if (!(eps > 0)) throw ConfigError("grad check step must be > 0");
  const double base = f(params, true);
  if (!std::isfinite(base)) throw NumericalError("objective is not finite at the base point");
  std::vector<Tensor<double>> analytic;
  for (const auto &p : params) analytic.push_back(p.grad);

  GradCheckResult res;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<double> &p = params[k];
    for (std::size_t e = 0; e < p.value.size(); ++e) {
      const double saved = p.value[e];
      p.value[e] = saved + eps;
      const double up = f(params, false);
      p.value[e] = saved - eps;
      const double down = f(params, false);
      p.value[e] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw NumericalError("objective is not finite when perturbing " + p.name + "[" +
                             std::to_string(e) + "]");
      const double n = (up - down) / (2.0 * eps);
      const double a = analytic[k][e];
      const double rel = std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), 1e-8});
      ++res.coordinates;
      if (rel > res.max_rel_error || res.coordinates == 1) {
        res.max_rel_error = rel;
        res.worst_param = p.name;
        res.worst_index = e;
        res.analytic = a;
        res.numeric = n;
      }
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) params[k].grad = analytic[k];
  return res;
}

}  // namespace atts2s
