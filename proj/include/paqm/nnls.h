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

#ifndef PAQM_NNLS_H_
#define PAQM_NNLS_H_

#include <Eigen/Dense>

namespace paqm {

// Lawson-Hanson non-negative least squares: argmin ||A x - b||, x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

// Least squares with per-coefficient sign constraints: signs[i] = +1 keeps
// x[i] >= 0, -1 keeps x[i] <= 0, 0 leaves it free (solved by splitting the
// free column into a +/- pair).
Eigen::VectorXd sign_constrained_lsq(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                     const Eigen::VectorXi& signs);

}  // namespace paqm

#endif  // PAQM_NNLS_H_
