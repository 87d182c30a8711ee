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

#include "paqm/nnls.h"

#include <limits>
#include <vector>

namespace paqm {

namespace {

Eigen::VectorXd solve_on_set(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                             const std::vector<int>& passive) {
  Eigen::MatrixXd ap(a.rows(), static_cast<Eigen::Index>(passive.size()));
  for (std::size_t j = 0; j < passive.size(); ++j) {
    ap.col(static_cast<Eigen::Index>(j)) = a.col(passive[j]);
  }
  return ap.colPivHouseholderQr().solve(b);
}

}  // namespace

Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index n = a.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> in_passive(static_cast<std::size_t>(n), false);
  std::vector<int> passive;

  const double tol = 1e-10 * a.cwiseAbs().maxCoeff() * b.cwiseAbs().maxCoeff() +
                     std::numeric_limits<double>::min();
  const int max_outer = static_cast<int>(3 * n) + 30;

  for (int outer = 0; outer < max_outer; ++outer) {
    const Eigen::VectorXd w = a.transpose() * (b - a * x);
    int best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!in_passive[static_cast<std::size_t>(j)] && w[j] > best_w) {
        best_w = w[j];
        best = static_cast<int>(j);
      }
    }
    if (best < 0) {
      break;
    }
    in_passive[static_cast<std::size_t>(best)] = true;
    passive.push_back(best);

    Eigen::VectorXd z = solve_on_set(a, b, passive);
    int inner_guard = static_cast<int>(2 * n) + 10;
    while (z.minCoeff() <= 0.0 && inner_guard-- > 0) {
      double alpha = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < passive.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        if (z[jj] <= 0.0) {
          const double xj = x[passive[j]];
          const double step = xj / (xj - z[jj]);
          alpha = std::min(alpha, step);
        }
      }
      for (std::size_t j = 0; j < passive.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        x[passive[j]] += alpha * (z[jj] - x[passive[j]]);
      }
      std::vector<int> keep;
      for (std::size_t j = 0; j < passive.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        if (x[passive[j]] > tol && z[jj] > 0.0) {
          keep.push_back(passive[j]);
        } else {
          x[passive[j]] = 0.0;
          in_passive[static_cast<std::size_t>(passive[j])] = false;
        }
      }
      passive = std::move(keep);
      if (passive.empty()) {
        break;
      }
      z = solve_on_set(a, b, passive);
    }
    for (std::size_t j = 0; j < passive.size(); ++j) {
      x[passive[j]] = std::max(0.0, z[static_cast<Eigen::Index>(j)]);
    }
  }
  return x;
}

Eigen::VectorXd sign_constrained_lsq(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                     const Eigen::VectorXi& signs) {
  const Eigen::Index n = a.cols();
  std::vector<Eigen::Index> extra;  // split columns for free coefficients
  Eigen::Index cols = n;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (signs[j] == 0) {
      extra.push_back(j);
      ++cols;
    }
  }
  Eigen::MatrixXd flipped(a.rows(), cols);
  for (Eigen::Index j = 0; j < n; ++j) {
    flipped.col(j) = signs[j] < 0 ? (-a.col(j)).eval() : a.col(j).eval();
  }
  for (std::size_t e = 0; e < extra.size(); ++e) {
    flipped.col(n + static_cast<Eigen::Index>(e)) = -a.col(extra[e]);
  }
  const Eigen::VectorXd y = nnls(flipped, b);
  Eigen::VectorXd x(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    x[j] = signs[j] < 0 ? -y[j] : y[j];
  }
  for (std::size_t e = 0; e < extra.size(); ++e) {
    x[extra[e]] -= y[n + static_cast<Eigen::Index>(e)];
  }
  return x;
}

}  // namespace paqm
