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

#include "paqm/pipeline.h"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "paqm/errors.h"

namespace paqm {

ItemAnalysis analyze_pair(const AudioSignal& ref, const AudioSignal& sut,
                          const PipelineConfig& config) {
  const AlignedPair pair = prepare_pair(ref, sut, config.align);

  EarModel ear(pair.ref.sample_rate, config.ear);
  const Spectra spec_ref = ear.compute_spectra(pair.ref);
  const Spectra spec_sut = ear.compute_spectra(pair.sut);
  const ExcitationSequence exc_ref = ear.compute_excitation(spec_ref);
  const ExcitationSequence exc_sut = ear.compute_excitation(spec_sut);
  const ModulationWeights s_ref = ear.compute_modulation_weights(exc_ref);
  const ModulationWeights s_sut = ear.compute_modulation_weights(exc_sut);

  const std::size_t n_frames = exc_ref.values.rows();
  const std::size_t bands = exc_ref.values.cols();

  // Band-grouped power of the spectral difference signal.
  Matrix error_band(n_frames, bands);
  std::vector<double> noise_bins(spec_ref.power.cols());
  for (std::size_t n = 0; n < n_frames; ++n) {
    auto pr = spec_ref.power.row(n);
    auto pt = spec_sut.power.row(n);
    for (std::size_t k = 0; k < noise_bins.size(); ++k) {
      noise_bins[k] = pr[k] - 2.0 * std::sqrt(pr[k] * pt[k]) + pt[k];
    }
    ear.group_into_bands(noise_bins, error_band.row(n));
  }

  LoudnessConstants consts;
  consts.c0 = config.loudness_c0;
  consts.gamma = config.loudness_gamma;
  consts.alpha = config.loudness_alpha;
  consts.threshold_energy = ear.internal_noise();
  consts.full_scale_energy = config.full_scale_energy();

  ItemAnalysis out;
  out.lag_samples = pair.lag_samples;
  out.gain_applied_db = pair.gain_applied_db;
  out.band_centers = ear.band_centers();
  out.frame_duration = exc_ref.frame_duration;
  out.n_frames = n_frames;
  out.settle_frames =
      static_cast<std::size_t>(config.settling_s / exc_ref.frame_duration);

  out.loudness = partial_loudness(exc_ref.values, exc_sut.values, s_ref.values,
                                  s_sut.values, consts);
  out.mov.rms_noise_loud = mov_rms_noise_loud(out.loudness, out.settle_frames);

  const std::vector<double> offsets =
      nmr_mask_offsets(ear.band_bark(), config.nmr_base_offset_db,
                       config.nmr_growth_db_per_band, config.nmr_bark_knee);
  out.nmr = mov_segmental_nmr(exc_ref.values, error_band, offsets, out.settle_frames);
  out.mov.segmental_nmr = out.nmr.segmental_db;

  out.ehs = mov_ehs(spec_ref, spec_sut, error_band, out.settle_frames,
                    static_cast<std::size_t>(config.ehs_lag_count));
  out.mov.ehs = out.ehs.scalar;

  out.cem = compute_cem_series(exc_ref.values, exc_sut.values, out.loudness.beta,
                               exc_ref.frame_duration, config.pdev_window_s,
                               config.bvar_window_s, out.settle_frames,
                               config.cem_pooling);

  if (config.imps_enabled) {
    out.imps = imps_legacy(out.cem.ps, out.cem.pdev, out.loudness, config.imps);
  }
  return out;
}

ItemAnalysis analyze_files(const std::filesystem::path& ref_path,
                           const std::filesystem::path& sut_path,
                           const PipelineConfig& config) {
  const AudioSignal ref = load_audio(ref_path);
  const AudioSignal sut = load_audio(sut_path);
  return analyze_pair(ref, sut, config);
}

void parallel_for_items(std::size_t count, int jobs,
                        const std::function<void(std::size_t)>& fn) {
  if (count == 0) {
    return;
  }
  unsigned n_threads = jobs > 0 ? static_cast<unsigned>(jobs)
                                : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(count));

  if (n_threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = count;
  std::string error_message;
  std::vector<std::thread> workers;
  workers.reserve(n_threads);
  for (unsigned t = 0; t < n_threads; ++t) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) {
          return;
        }
        try {
          fn(i);
        } catch (const std::exception& e) {
          std::lock_guard lock(error_mutex);
          if (i < error_index) {
            error_index = i;
            error_message = e.what();
          }
        }
      }
    });
  }
  for (auto& worker : workers) {
    worker.join();
  }
  if (error_index < count) {
    throw PipelineError(error_message);
  }
}

}  // namespace paqm
