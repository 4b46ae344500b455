// Copyright 2026 The sabrsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SABR_FEATURES_HPP_
#define SABR_FEATURES_HPP_

#include <vector>

#include "sabr/sim.hpp"

namespace sabr {

/// Per-video features seen by the buffer-management agent.
struct VideoFeatures {
  double retention = 0.0;      // l_j: conditional retention of the next chunk
  double buffer_s = 0.0;       // g_j: buffered playable seconds
  double mean_size_mb = 0.0;   // u_j: next chunk size averaged over the ladder
};

/// Input state of the buffer-management agent: throughput history plus one
/// VideoFeatures block per queue position (zero-padded past the live queue).
struct BMObservation {
  std::vector<double> throughput_mbps;  // oldest first, zero-padded to K
  std::vector<VideoFeatures> videos;    // size == cfg.queue_length
};

/// Input state of the bitrate-adaptation agent for one selected video.
struct BAObservation {
  std::vector<double> throughput_mbps;
  double retention = 0.0;        // l_j
  double buffer_s = 0.0;         // g_j
  double mean_size_mb = 0.0;     // u_j
  double last_rebuffer_s = 0.0;  // h_j
  double last_bitrate_kbps = 0.0;   // q_j, 0 before the first download
  double fluctuation_kbps = 0.0;    // f_j of the last downloaded chunk
};

/// Probability of watching chunk n conditioned on currently playing chunk m:
/// retention[n] / retention[m]. Throws ArgumentError when n < m or indices
/// are out of range.
double conditional_retention(const std::vector<double>& retention, int playing_chunk,
                             int target_chunk);

/// |q - q_prev|; zero when there is no previous bitrate (q_prev < 0).
double bitrate_fluctuation(double bitrate_kbps, double prev_bitrate_kbps);

BMObservation build_bm_observation(const SessionState& state);

/// Builds the BA observation for the video the BM decision selected. Throws
/// ArgumentError when that video is not currently downloadable.
BAObservation build_ba_observation(const SessionState& state, int video_index);

/// Normalization applied before feeding observations to the networks:
/// throughput /10 Mbps, buffers /10 s, sizes /1 MB, bitrates /ladder max,
/// rebuffer /5 s; every entry clamped to [-10, 10].
std::vector<double> bm_input_vector(const BMObservation& obs);
std::vector<double> ba_input_vector(const BAObservation& obs, double ladder_max_kbps);

}  // namespace sabr

#endif  // SABR_FEATURES_HPP_
