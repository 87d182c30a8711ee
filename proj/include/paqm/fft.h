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

#ifndef PAQM_FFT_H_
#define PAQM_FFT_H_

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace paqm {

// Fixed-size real <-> complex FFT backed by FFTW. Plan creation is
// serialized internally (FFTW planning is not thread safe); execution of
// distinct instances is safe from concurrent threads.
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return size_; }
  std::size_t spectrum_size() const { return size_ / 2 + 1; }

  // in: size() samples (shorter spans are zero padded).
  void forward(std::span<const double> in, std::vector<std::complex<double>>& out);
  // Normalized inverse: inverse(forward(x)) == x.
  void inverse(std::span<const std::complex<double>> in, std::vector<double>& out);

 private:
  struct Impl;
  std::size_t size_;
  std::unique_ptr<Impl> impl_;
};

std::size_t next_pow2(std::size_t n);

}  // namespace paqm

#endif  // PAQM_FFT_H_
