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

#ifndef SABR_SIM_HPP_
#define SABR_SIM_HPP_

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sabr/common.hpp"
#include "sabr/traces.hpp"

namespace sabr {

struct SessionConfig {
  int queue_length = 5;
  std::vector<double> ladder_kbps = {750.0, 1200.0, 1850.0};
  double sleep_duration_s = 0.200;
  int max_prefetch_chunks = 4;  // per recommended (non-playing) video
  double min_trace_span_s = 10.0;
  int max_steps = 200000;  // safety stop for sessions that never finish

  int levels() const { return static_cast<int>(ladder_kbps.size()); }
  void validate_or_throw() const;
};

/// Policy decision: download one chunk of a queued video, or sleep.
struct Action {
  enum class Kind { kDownload, kSleep };
  Kind kind = Kind::kSleep;
  int video_index = -1;    // queue position, download only
  int bitrate_level = -1;  // ladder index, download only

  static Action Sleep() { return {}; }
  static Action Download(int video, int level) {
    return {Kind::kDownload, video, level};
  }
  bool operator==(const Action&) const = default;
};

/// Which download atoms are currently legal. Sleep is always legal.
struct ActionMask {
  std::vector<bool> video_ok;  // size queue_length; false beyond live queue
  bool sleep_ok = true;

  bool allows(const Action& a, int levels) const {
    if (a.kind == Action::Kind::kSleep) return sleep_ok;
    return a.video_index >= 0 &&
           a.video_index < static_cast<int>(video_ok.size()) &&
           video_ok[a.video_index] && a.bitrate_level >= 0 &&
           a.bitrate_level < levels;
  }
  bool any_download() const {
    for (bool b : video_ok) {
      if (b) return true;
    }
    return false;
  }
};

struct BufferedChunk {
  int index = 0;
  int level = 0;
  double size_mb = 0.0;
};

/// One video's slot in the play queue. Position 0 is playing.
struct VideoSlot {
  const VideoAsset* asset = nullptr;
  int serial = 0;                    // session-local identity (assets may repeat)
  int next_download = 0;             // next undownloaded chunk index
  std::deque<BufferedChunk> buffer;  // contiguous, downloaded but unplayed
  int scroll_chunk = 0;              // hidden: first chunk the user won't watch
  int last_level = -1;               // level of the last downloaded chunk
  int prev_level = -1;               // level of the one before it
  double last_rebuffer_s = 0.0;      // stall caused by the last download
  int last_played_level = -1;        // for smoothness of played chunks

  double buffered_seconds(double play_offset_s) const {
    return static_cast<double>(buffer.size()) * 1.0 - play_offset_s;
  }
  bool fully_downloaded() const {
    return asset != nullptr && next_download >= asset->chunk_count();
  }
};

struct PlayedChunk {
  std::string video_id;
  int chunk = 0;
  double bitrate_kbps = 0.0;
  double fluctuation_kbps = 0.0;  // vs previous played chunk of the same video
  double size_mb = 0.0;
};

struct ScrollEvent {
  std::string video_id;
  double wasted_mb = 0.0;
  int watched_chunks = 0;
  int serial = 0;
};

struct DownloadedChunk {
  std::string video_id;
  int chunk = 0;
  double bitrate_kbps = 0.0;
  double fluctuation_kbps = 0.0;  // vs previous downloaded chunk of the video
  double size_mb = 0.0;
  double duration_s = 0.0;
};

struct StepOutcome {
  std::optional<DownloadedChunk> downloaded_chunk;
  double rebuffer_s = 0.0;
  std::vector<ScrollEvent> scroll_events;
  std::vector<PlayedChunk> played_chunks;
  bool session_done = false;
  double step_duration_s = 0.0;
};

/// Full simulator state for one viewing session.
struct SessionState {
  SessionConfig cfg;
  const NetworkTrace* trace = nullptr;
  double clock_s = 0.0;
  std::vector<VideoSlot> queue;  // front is playing
  int play_chunk = 0;            // playing video's current chunk
  double play_offset_s = 0.0;    // progress inside that chunk
  std::deque<double> throughput_hist_mbps;  // most recent at the back, <= K
  std::vector<const VideoAsset*> pending;   // upcoming recommendations
  std::mt19937_64 rng;           // scroll sampling at video append time
  int appended_count = 0;        // total videos ever queued (serial source)

  // accounting (megabytes)
  double downloaded_mb = 0.0;
  double watched_mb = 0.0;
  double wasted_mb = 0.0;

  double total_rebuffer_s = 0.0;
  int steps = 0;
  bool done = false;

  double buffered_mb() const;
  /// downloaded - watched - wasted - buffered; must stay within 1e-9.
  double accounting_error_mb() const;
};

inline constexpr int kThroughputHistory = 5;  // K

/// Draws the first chunk the user will not watch: P(result > m) = retention[m].
/// Returns retention.size() when the user watches to the end.
int sample_scroll_chunk(const std::vector<double>& retention, std::mt19937_64& rng);

/// Smallest d such that the trace delivers size_mb*8 megabits over
/// [start, start+d). The trace loops cyclically past its end.
double download_time(double size_mb, const NetworkTrace& trace, double start_s);

/// Fills the queue from `stream` (consuming from the front). Throws
/// ConfigError when the stream is shorter than the queue or the trace is
/// shorter than cfg.min_trace_span_s.
SessionState init_session(std::vector<const VideoAsset*> stream,
                          const NetworkTrace& trace, const SessionConfig& cfg,
                          std::uint64_t seed);

/// Same as init_session but allows a queue shorter than cfg.queue_length;
/// used to assemble mid-session states (micro instances, benchmarks).
SessionState init_session_unchecked(std::vector<const VideoAsset*> stream,
                                    const NetworkTrace& trace,
                                    const SessionConfig& cfg,
                                    std::uint64_t seed);

ActionMask valid_actions(const SessionState& state);

/// Applies one action. Throws ActionMaskError for masked actions and
/// StateError when the session is already done.
StepOutcome step(SessionState& state, const Action& action);

}  // namespace sabr

#endif  // SABR_SIM_HPP_
