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

#include "paqm/stats.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace paqm {

PearsonResult pearson_with_ci(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("pearson_with_ci: length mismatch");
  }
  const std::size_t n = x.size();
  if (n < 4) {
    throw std::invalid_argument("pearson_with_ci: need at least 4 points");
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw std::invalid_argument("pearson_with_ci: constant input vector");
  }
  PearsonResult out;
  out.n = n;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  if (std::abs(out.r) >= 1.0) {
    out.ci_low = out.ci_high = out.r;
    return out;
  }
  const double z = std::atanh(out.r);
  const double half_width = 1.96 / std::sqrt(static_cast<double>(n - 3));
  out.ci_low = std::tanh(z - half_width);
  out.ci_high = std::tanh(z + half_width);
  return out;
}

double eval_cubic(const std::array<double, 4>& coeffs, double x) {
  return ((coeffs[3] * x + coeffs[2]) * x + coeffs[1]) * x + coeffs[0];
}

namespace {

std::array<double, 4> expand_from_normalized(const Eigen::Vector4d& c, double center,
                                             double scale) {
  // p(u) with u = (x - center)/scale expanded into powers of x.
  const double s1 = 1.0 / scale;
  const double s2 = s1 * s1;
  const double s3 = s2 * s1;
  const double m = -center;
  std::array<double, 4> out{};
  out[0] = c[0] + c[1] * m * s1 + c[2] * m * m * s2 + c[3] * m * m * m * s3;
  out[1] = c[1] * s1 + 2.0 * c[2] * m * s2 + 3.0 * c[3] * m * m * s3;
  out[2] = c[2] * s2 + 3.0 * c[3] * m * s3;
  out[3] = c[3] * s3;
  return out;
}

double min_derivative(const Eigen::Vector4d& c, double lo, double hi, int grid,
                      double* where = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  for (int g = 0; g <= grid; ++g) {
    const double u = lo + (hi - lo) * g / grid;
    const double d = c[1] + 2.0 * c[2] * u + 3.0 * c[3] * u * u;
    if (d < best) {
      best = d;
      if (where) *where = u;
    }
  }
  return best;
}

}  // namespace

std::array<double, 4> fit_cubic_premap(std::span<const double> objective,
                                       std::span<const double> subjective,
                                       bool enforce_monotone) {
  if (objective.size() != subjective.size()) {
    throw std::invalid_argument("fit_cubic_premap: length mismatch");
  }
  const std::size_t n = objective.size();
  if (n < 4) {
    throw std::invalid_argument("fit_cubic_premap: need at least 4 points");
  }
  const auto [min_it, max_it] = std::minmax_element(objective.begin(), objective.end());
  const double lo = *min_it;
  const double hi = *max_it;
  if (!(hi > lo)) {
    throw std::invalid_argument("fit_cubic_premap: objective has zero variance");
  }
  const double center = 0.5 * (lo + hi);
  const double scale = 0.5 * (hi - lo);

  Eigen::MatrixXd v(static_cast<Eigen::Index>(n), 4);
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (objective[i] - center) / scale;
    const auto row = static_cast<Eigen::Index>(i);
    v(row, 0) = 1.0;
    v(row, 1) = u;
    v(row, 2) = u * u;
    v(row, 3) = u * u * u;
  }
  for (std::size_t i = 0; i < n; ++i) {
    b[static_cast<Eigen::Index>(i)] = subjective[i];
  }

  auto qr = v.colPivHouseholderQr();
  qr.setThreshold(1e-10);
  if (qr.rank() < 4) {
    throw std::invalid_argument("fit_cubic_premap: rank-deficient system");
  }
  Eigen::Vector4d c = qr.solve(b);

  constexpr int kGrid = 256;
  if (enforce_monotone && min_derivative(c, -1.0, 1.0, kGrid) < 0.0) {
    // Quadratic-penalty refit: derivative targets of zero at violating grid
    // points, weight escalated until the fit is monotone on the grid.
    const double base = v.squaredNorm();
    double mu = base;
    bool fixed = false;
    for (int iter = 0; iter < 40 && !fixed; ++iter, mu *= 4.0) {
      std::vector<double> bad;
      for (int g = 0; g <= kGrid; ++g) {
        const double u = -1.0 + 2.0 * g / kGrid;
        if (c[1] + 2.0 * c[2] * u + 3.0 * c[3] * u * u < 0.0) {
          bad.push_back(u);
        }
      }
      if (bad.empty()) {
        fixed = true;
        break;
      }
      Eigen::MatrixXd va(v.rows() + static_cast<Eigen::Index>(bad.size()), 4);
      Eigen::VectorXd ba(va.rows());
      va.topRows(v.rows()) = v;
      ba.head(v.rows()) = b;
      const double w = std::sqrt(mu / static_cast<double>(bad.size()));
      for (std::size_t j = 0; j < bad.size(); ++j) {
        const auto row = v.rows() + static_cast<Eigen::Index>(j);
        const double u = bad[j];
        va(row, 0) = 0.0;
        va(row, 1) = w;
        va(row, 2) = w * 2.0 * u;
        va(row, 3) = w * 3.0 * u * u;
        ba[row] = 0.0;
      }
      c = va.colPivHouseholderQr().solve(ba);
    }
    if (!fixed && min_derivative(c, -1.0, 1.0, kGrid) < 0.0) {
      // Deterministic fallback: best non-decreasing line.
      const double um = v.col(1).mean();
      const double bm = b.mean();
      double suu = 0.0, sub = 0.0;
      for (Eigen::Index i = 0; i < v.rows(); ++i) {
        suu += (v(i, 1) - um) * (v(i, 1) - um);
        sub += (v(i, 1) - um) * (b[i] - bm);
      }
      const double slope = std::max(0.0, suu > 0.0 ? sub / suu : 0.0);
      c << bm - slope * um, slope, 0.0, 0.0;
    }
  }
  return expand_from_normalized(c, center, scale);
}

}  // namespace paqm
