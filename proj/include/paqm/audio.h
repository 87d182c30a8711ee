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

#ifndef PAQM_AUDIO_H_
#define PAQM_AUDIO_H_

#include <cstdint>
#include <filesystem>
#include <vector>

namespace paqm {

// Canonical internal form: mono, amplitudes in [-1, 1], 44.1 or 48 kHz.
struct AudioSignal {
  std::vector<double> samples;
  int sample_rate = 0;
  int channel_count = 1;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// Reads a RIFF/WAVE file with 16/24/32-bit integer or 32-bit float PCM,
// 1 or 2 channels. Two-channel input is averaged down to mono. Sample
// rates other than 44.1/48 kHz are rejected rather than resampled.
AudioSignal load_audio(const std::filesystem::path& path);

// 16-bit PCM mono writer, used by the tools and tests. Samples are clamped
// to [-1, 1] and rounded; load_audio(write_wav16(x)) is bit exact for
// signals that came from 16-bit sources.
void write_wav16(const std::filesystem::path& path, const AudioSignal& signal);

struct AlignOptions {
  bool align_lag = true;
  bool match_gain = false;
  long max_lag = 48000;
  // Alignment is refused when the normalized correlation peak is below
  // this (flat correlation surface, signals unrelated).
  double min_peak_correlation = 0.01;
};

struct AlignedPair {
  AudioSignal ref;
  AudioSignal sut;
  long lag_samples = 0;
  double gain_applied_db = 0.0;
};

// Time-aligns sut against ref by the cross-correlation-maximizing lag
// within +-max_lag, truncates both to the common length and optionally
// matches the sut RMS level to the reference. lag_samples > 0 means the
// sut was delayed relative to the reference.
AlignedPair prepare_pair(const AudioSignal& ref, const AudioSignal& sut,
                         const AlignOptions& options = {});

double rms(const std::vector<double>& samples);

}  // namespace paqm

#endif  // PAQM_AUDIO_H_
