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

#include "sabr/features.hpp"

#include <algorithm>
#include <cmath>

namespace sabr {

namespace {

constexpr double kThroughputScale = 10.0;  // Mbps
constexpr double kBufferScale = 10.0;      // seconds
constexpr double kSizeScale = 1.0;         // MB
constexpr double kRebufferScale = 5.0;     // seconds
constexpr double kClamp = 10.0;

double clamp(double v) { return std::clamp(v, -kClamp, kClamp); }

std::vector<double> padded_history(const SessionState& state) {
  std::vector<double> out(kThroughputHistory, 0.0);
  const auto& hist = state.throughput_hist_mbps;
  const int n = static_cast<int>(hist.size());
  for (int i = 0; i < n; ++i) {
    out[kThroughputHistory - n + i] = hist[i];
  }
  return out;
}

// l_j, g_j, u_j for one queue slot; zeros once the video is fully downloaded.
VideoFeatures slot_features(const SessionState& state, int j) {
  VideoFeatures f;
  const VideoSlot& slot = state.queue[j];
  f.buffer_s = std::max(0.0, slot.buffered_seconds(j == 0 ? state.play_offset_s : 0.0));
  if (slot.fully_downloaded()) return f;  // retention/size sentinel zeros
  const int n = slot.next_download;
  const int m = (j == 0) ? state.play_chunk : 0;
  f.retention = conditional_retention(slot.asset->retention, m, n);
  const auto& sizes = slot.asset->chunk_sizes_mb[n];
  double total = 0.0;
  for (double s : sizes) total += s;
  f.mean_size_mb = total / static_cast<double>(sizes.size());
  return f;
}

}  // namespace

double conditional_retention(const std::vector<double>& retention,
                             int playing_chunk, int target_chunk) {
  if (playing_chunk < 0 || target_chunk < playing_chunk ||
      target_chunk >= static_cast<int>(retention.size())) {
    throw ArgumentError("conditional_retention: need 0 <= m <= n < length, got m=" +
                        std::to_string(playing_chunk) + " n=" +
                        std::to_string(target_chunk));
  }
  const double base = retention[playing_chunk];
  if (!(base > 0.0)) {
    throw ArgumentError("conditional_retention: retention at the playing chunk is 0");
  }
  return retention[target_chunk] / base;
}

double bitrate_fluctuation(double bitrate_kbps, double prev_bitrate_kbps) {
  if (prev_bitrate_kbps < 0.0) return 0.0;
  return std::abs(bitrate_kbps - prev_bitrate_kbps);
}

BMObservation build_bm_observation(const SessionState& state) {
  BMObservation obs;
  obs.throughput_mbps = padded_history(state);
  obs.videos.resize(state.cfg.queue_length);
  const int live = std::min<int>(state.cfg.queue_length,
                                 static_cast<int>(state.queue.size()));
  for (int j = 0; j < live; ++j) obs.videos[j] = slot_features(state, j);
  return obs;
}

BAObservation build_ba_observation(const SessionState& state, int video_index) {
  const ActionMask mask = valid_actions(state);
  if (video_index < 0 || video_index >= static_cast<int>(mask.video_ok.size()) ||
      !mask.video_ok[video_index]) {
    throw ArgumentError("build_ba_observation: video " +
                        std::to_string(video_index) + " is not downloadable");
  }
  BAObservation obs;
  obs.throughput_mbps = padded_history(state);
  const VideoFeatures f = slot_features(state, video_index);
  obs.retention = f.retention;
  obs.buffer_s = f.buffer_s;
  obs.mean_size_mb = f.mean_size_mb;
  const VideoSlot& slot = state.queue[video_index];
  obs.last_rebuffer_s = slot.last_rebuffer_s;
  obs.last_bitrate_kbps =
      slot.last_level >= 0 ? state.cfg.ladder_kbps[slot.last_level] : 0.0;
  obs.fluctuation_kbps =
      slot.last_level >= 0
          ? bitrate_fluctuation(
                state.cfg.ladder_kbps[slot.last_level],
                slot.prev_level >= 0 ? state.cfg.ladder_kbps[slot.prev_level] : -1.0)
          : 0.0;
  return obs;
}

std::vector<double> bm_input_vector(const BMObservation& obs) {
  std::vector<double> x;
  x.reserve(obs.throughput_mbps.size() + obs.videos.size() * 3);
  for (double b : obs.throughput_mbps) x.push_back(clamp(b / kThroughputScale));
  for (const auto& v : obs.videos) {
    x.push_back(clamp(v.retention));
    x.push_back(clamp(v.buffer_s / kBufferScale));
    x.push_back(clamp(v.mean_size_mb / kSizeScale));
  }
  return x;
}

std::vector<double> ba_input_vector(const BAObservation& obs,
                                    double ladder_max_kbps) {
  std::vector<double> x;
  x.reserve(obs.throughput_mbps.size() + 6);
  for (double b : obs.throughput_mbps) x.push_back(clamp(b / kThroughputScale));
  x.push_back(clamp(obs.retention));
  x.push_back(clamp(obs.buffer_s / kBufferScale));
  x.push_back(clamp(obs.mean_size_mb / kSizeScale));
  x.push_back(clamp(obs.last_rebuffer_s / kRebufferScale));
  x.push_back(clamp(obs.last_bitrate_kbps / ladder_max_kbps));
  x.push_back(clamp(obs.fluctuation_kbps / ladder_max_kbps));
  return x;
}

}  // namespace sabr
