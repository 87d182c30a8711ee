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

#include "paqm/fft.h"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

namespace paqm {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct RealFft::Impl {
  double* real = nullptr;
  fftw_complex* cplx = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

RealFft::RealFft(std::size_t size) : size_(size), impl_(std::make_unique<Impl>()) {
  if (size_ < 2) {
    throw std::invalid_argument("RealFft: size must be >= 2");
  }
  std::lock_guard lock(planner_mutex());
  impl_->real = fftw_alloc_real(size_);
  impl_->cplx = fftw_alloc_complex(size_ / 2 + 1);
  impl_->fwd = fftw_plan_dft_r2c_1d(static_cast<int>(size_), impl_->real, impl_->cplx,
                                    FFTW_ESTIMATE);
  impl_->bwd = fftw_plan_dft_c2r_1d(static_cast<int>(size_), impl_->cplx, impl_->real,
                                    FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  if (!impl_) {
    return;
  }
  std::lock_guard lock(planner_mutex());
  if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
  if (impl_->bwd) fftw_destroy_plan(impl_->bwd);
  if (impl_->real) fftw_free(impl_->real);
  if (impl_->cplx) fftw_free(impl_->cplx);
}

RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::forward(std::span<const double> in, std::vector<std::complex<double>>& out) {
  if (in.size() > size_) {
    throw std::invalid_argument("RealFft::forward: input longer than transform size");
  }
  std::copy(in.begin(), in.end(), impl_->real);
  std::fill(impl_->real + in.size(), impl_->real + size_, 0.0);
  fftw_execute(impl_->fwd);
  const std::size_t half = spectrum_size();
  out.resize(half);
  for (std::size_t i = 0; i < half; ++i) {
    out[i] = {impl_->cplx[i][0], impl_->cplx[i][1]};
  }
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::vector<double>& out) {
  const std::size_t half = spectrum_size();
  if (in.size() != half) {
    throw std::invalid_argument("RealFft::inverse: expected size/2+1 spectrum");
  }
  for (std::size_t i = 0; i < half; ++i) {
    impl_->cplx[i][0] = in[i].real();
    impl_->cplx[i][1] = in[i].imag();
  }
  fftw_execute(impl_->bwd);
  out.resize(size_);
  const double scale = 1.0 / static_cast<double>(size_);
  for (std::size_t i = 0; i < size_; ++i) {
    out[i] = impl_->real[i] * scale;
  }
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) {
    p <<= 1;
  }
  return p;
}

}  // namespace paqm
