// Copyright 2026 The PAQM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PAQM_STATS_H_
#define PAQM_STATS_H_

#include <array>
#include <span>

namespace paqm {

struct PearsonResult {
  double r = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
};

// Sample Pearson correlation with a 95% confidence interval from the
// Fisher z transform (z +- 1.96/sqrt(n-3)). Requires n >= 4 and nonzero
// variance on both sides.
PearsonResult pearson_with_ci(std::span<const double> x, std::span<const double> y);

// Least-squares cubic objective -> subjective pre-map, coefficients in
// ascending power order. When the unconstrained fit is non-monotone over
// the observed objective range and enforce_monotone is set, the fit is
// repeated with derivative >= 0 enforced on a dense grid.
std::array<double, 4> fit_cubic_premap(std::span<const double> objective,
                                       std::span<const double> subjective,
                                       bool enforce_monotone = true);

double eval_cubic(const std::array<double, 4>& coeffs, double x);

}  // namespace paqm

#endif  // PAQM_STATS_H_
