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

#include "paqm/audio.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <limits>

#include "paqm/errors.h"
#include "paqm/fft.h"

namespace paqm {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

double decode_sample(const unsigned char* p, std::uint16_t bits, std::uint16_t format) {
  if (format == kFormatFloat) {
    float v;
    std::memcpy(&v, p, 4);
    return std::clamp(static_cast<double>(v), -1.0, 1.0);
  }
  switch (bits) {
    case 16: {
      auto v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
      return v / 32768.0;
    }
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v |= ~0xFFFFFF;
      return v / 8388608.0;
    }
    case 32: {
      std::int32_t v;
      std::memcpy(&v, p, 4);
      return v / 2147483648.0;
    }
    default:
      throw IoError("unsupported bit depth: " + std::to_string(bits));
  }
}

}  // namespace

AudioSignal load_audio(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw IoError("cannot open audio file: " + path.string());
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(file)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw IoError("not a RIFF/WAVE file: " + path.string());
  }

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t chunk_size = read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) {
      throw IoError("truncated WAV chunk in " + path.string());
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_size < 16) {
        throw IoError("malformed fmt chunk in " + path.string());
      }
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      sample_rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format == kFormatExtensible && chunk_size >= 40) {
        // First two bytes of the SubFormat GUID carry the actual format tag.
        format = read_u16(bytes.data() + body + 24);
      }
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }

  if (format == 0 || data == nullptr) {
    throw IoError("missing fmt/data chunk in " + path.string());
  }
  if (format != kFormatPcm && format != kFormatFloat) {
    throw IoError("unsupported codec (only integer/float PCM): " + path.string());
  }
  if (format == kFormatFloat && bits != 32) {
    throw IoError("unsupported float bit depth: " + std::to_string(bits));
  }
  if (format == kFormatPcm && bits != 16 && bits != 24 && bits != 32) {
    throw IoError("unsupported bit depth: " + std::to_string(bits));
  }
  if (channels < 1 || channels > 2) {
    throw IoError("unsupported channel count: " + std::to_string(channels));
  }
  if (sample_rate != 44100 && sample_rate != 48000) {
    throw IoError("unsupported sample rate " + std::to_string(sample_rate) +
                  " (expected 44100 or 48000): " + path.string());
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t frames = frame_bytes > 0 ? data_size / frame_bytes : 0;
  if (frames == 0) {
    throw IoError("zero-length audio: " + path.string());
  }

  AudioSignal out;
  out.sample_rate = static_cast<int>(sample_rate);
  out.channel_count = 1;
  out.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      acc += decode_sample(data + i * frame_bytes + c * bytes_per_sample, bits, format);
    }
    out.samples[i] = acc / channels;
  }
  return out;
}

void write_wav16(const std::filesystem::path& path, const AudioSignal& signal) {
  if (signal.samples.empty() || signal.sample_rate <= 0) {
    throw std::invalid_argument("write_wav16: empty signal");
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw IoError("cannot open for writing: " + path.string());
  }
  const std::uint32_t data_size = static_cast<std::uint32_t>(signal.samples.size() * 2);
  auto put_u32 = [&](std::uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                 static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    file.write(b, 4);
  };
  auto put_u16 = [&](std::uint16_t v) {
    char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
    file.write(b, 2);
  };
  file.write("RIFF", 4);
  put_u32(36 + data_size);
  file.write("WAVE", 4);
  file.write("fmt ", 4);
  put_u32(16);
  put_u16(kFormatPcm);
  put_u16(1);
  put_u32(static_cast<std::uint32_t>(signal.sample_rate));
  put_u32(static_cast<std::uint32_t>(signal.sample_rate) * 2);
  put_u16(2);
  put_u16(16);
  file.write("data", 4);
  put_u32(data_size);
  for (double s : signal.samples) {
    const double clamped = std::clamp(s, -1.0, 1.0);
    auto v = static_cast<std::int32_t>(std::lround(clamped * 32768.0));
    v = std::clamp(v, -32768, 32767);
    put_u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  if (!file) {
    throw IoError("write failed: " + path.string());
  }
}

double rms(const std::vector<double>& samples) {
  if (samples.empty()) {
    return 0.0;
  }
  double acc = 0.0;
  for (double s : samples) {
    acc += s * s;
  }
  return std::sqrt(acc / samples.size());
}

AlignedPair prepare_pair(const AudioSignal& ref, const AudioSignal& sut,
                         const AlignOptions& options) {
  if (ref.sample_rate != sut.sample_rate) {
    throw PipelineError("sample-rate mismatch: " + std::to_string(ref.sample_rate) +
                        " vs " + std::to_string(sut.sample_rate));
  }
  if (ref.samples.empty() || sut.samples.empty()) {
    throw PipelineError("prepare_pair: empty signal");
  }
  if (std::abs(ref.duration_seconds() - sut.duration_seconds()) >= 1.0) {
    throw PipelineError("prepare_pair: durations differ by 1 s or more");
  }

  long lag = 0;
  if (options.align_lag) {
    const std::size_t n1 = ref.samples.size();
    const std::size_t n2 = sut.samples.size();
    const long max_lag =
        std::min<long>(options.max_lag, static_cast<long>(std::min(n1, n2)) - 1);
    const std::size_t fft_size = next_pow2(n1 + n2);
    RealFft fft(fft_size);
    std::vector<std::complex<double>> spec_ref, spec_sut;
    fft.forward(ref.samples, spec_ref);
    fft.forward(sut.samples, spec_sut);
    // corr[m] = sum_n ref[n] * sut[n+m]; negative lags wrap to the tail.
    for (std::size_t i = 0; i < spec_ref.size(); ++i) {
      spec_ref[i] = std::conj(spec_ref[i]) * spec_sut[i];
    }
    std::vector<double> corr;
    fft.inverse(spec_ref, corr);

    double best = -std::numeric_limits<double>::infinity();
    for (long m = -max_lag; m <= max_lag; ++m) {
      const std::size_t idx = m >= 0 ? static_cast<std::size_t>(m)
                                     : fft_size - static_cast<std::size_t>(-m);
      if (corr[idx] > best) {
        best = corr[idx];
        lag = m;
      }
    }
    const double denom = rms(ref.samples) * rms(sut.samples) *
                         std::sqrt(static_cast<double>(n1) * static_cast<double>(n2));
    const double peak = denom > 0.0 ? best / denom : 0.0;
    if (peak < options.min_peak_correlation) {
      throw PipelineError(
          "alignment ambiguous: correlation peak " + std::to_string(peak) +
          " below threshold (signals unrelated?)");
    }
  }

  AlignedPair out;
  out.lag_samples = lag;
  const std::size_t ref_start = lag < 0 ? static_cast<std::size_t>(-lag) : 0;
  const std::size_t sut_start = lag > 0 ? static_cast<std::size_t>(lag) : 0;
  const std::size_t len =
      std::min(ref.samples.size() - ref_start, sut.samples.size() - sut_start);
  if (len == 0) {
    throw PipelineError("prepare_pair: no overlap after alignment");
  }
  out.ref.sample_rate = ref.sample_rate;
  out.sut.sample_rate = sut.sample_rate;
  out.ref.samples.assign(ref.samples.begin() + ref_start,
                         ref.samples.begin() + ref_start + len);
  out.sut.samples.assign(sut.samples.begin() + sut_start,
                         sut.samples.begin() + sut_start + len);

  if (options.match_gain) {
    const double ref_rms = rms(out.ref.samples);
    const double sut_rms = rms(out.sut.samples);
    if (sut_rms > 0.0 && ref_rms > 0.0) {
      const double gain = ref_rms / sut_rms;
      for (double& s : out.sut.samples) {
        s *= gain;
      }
      out.gain_applied_db = 20.0 * std::log10(gain);
    }
  }
  return out;
}

}  // namespace paqm
