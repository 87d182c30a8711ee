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

#ifndef PAQM_TESTS_TEST_SUPPORT_H_
#define PAQM_TESTS_TEST_SUPPORT_H_

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "paqm/audio.h"
#include "paqm/matrix.h"

namespace paqm::test {

inline AudioSignal make_sine(double freq, double seconds, int rate = 48000,
                             double amplitude = 0.5, double phase = 0.0) {
  AudioSignal s;
  s.sample_rate = rate;
  const auto n = static_cast<std::size_t>(seconds * rate);
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq * i / rate + phase);
  }
  return s;
}

inline AudioSignal make_noise(double seconds, int rate = 48000, double amplitude = 0.1,
                              unsigned seed = 1) {
  AudioSignal s;
  s.sample_rate = rate;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const auto n = static_cast<std::size_t>(seconds * rate);
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.samples[i] = amplitude * dist(rng);
  }
  return s;
}

inline AudioSignal mix(const AudioSignal& a, const AudioSignal& b) {
  AudioSignal out = a;
  const std::size_t n = std::min(a.samples.size(), b.samples.size());
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.samples[i] = a.samples[i] + b.samples[i];
  }
  return out;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, unsigned seed,
                            double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.data()) {
    v = dist(rng);
  }
  return m;
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("paqm_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace paqm::test

#endif  // PAQM_TESTS_TEST_SUPPORT_H_
