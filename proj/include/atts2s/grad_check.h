// atts2s/grad_check.h

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

#ifndef ATTS2S_GRAD_CHECK_H_
#define ATTS2S_GRAD_CHECK_H_

#include <functional>
#include <string>

#include "atts2s/parameter_set.h"

namespace atts2s {

/// Evaluates the objective at the current parameter values. With
/// `with_grad`, it must also leave the analytic gradient in each grad field.
using Objective = std::function<double(ParameterSet<double> &params, bool with_grad)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // at the worst coordinate
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Central differences (f(t + eps) - f(t - eps)) / 2 eps on every coordinate,
/// compared with the analytic gradient as |a - n| / max(|a|, |n|, 1e-8).
/// Parameter values are restored afterwards. A non-finite objective throws
/// NumericalError naming the parameter being perturbed.
GradCheckResult GradCheck(const Objective &f, ParameterSet<double> &params, double eps);

}  // namespace atts2s

#endif  // ATTS2S_GRAD_CHECK_H_
