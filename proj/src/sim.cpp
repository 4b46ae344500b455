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

#include "sabr/sim.hpp"

#include <algorithm>
#include <cmath>

namespace sabr {

namespace {

constexpr double kTimeEps = 1e-12;

}  // namespace

void SessionConfig::validate_or_throw() const {
  if (queue_length < 2) throw ConfigError("queue_length must be >= 2");
  if (ladder_kbps.size() < 2) throw ConfigError("bitrate ladder needs >= 2 levels");
  for (std::size_t l = 1; l < ladder_kbps.size(); ++l) {
    if (!(ladder_kbps[l] > ladder_kbps[l - 1])) {
      throw ConfigError("bitrate ladder must strictly increase");
    }
  }
  if (!(sleep_duration_s > 0.0)) throw ConfigError("sleep_duration must be > 0");
  if (max_prefetch_chunks < 1) throw ConfigError("max_prefetch_chunks must be >= 1");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
}

double SessionState::buffered_mb() const {
  double total = 0.0;
  for (const auto& slot : queue) {
    for (const auto& chunk : slot.buffer) total += chunk.size_mb;
  }
  return total;
}

double SessionState::accounting_error_mb() const {
  return downloaded_mb - watched_mb - wasted_mb - buffered_mb();
}

int sample_scroll_chunk(const std::vector<double>& retention,
                        std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u = uni(rng);
  for (std::size_t m = 1; m < retention.size(); ++m) {
    if (u >= retention[m]) return static_cast<int>(m);
  }
  return static_cast<int>(retention.size());
}

double download_time(double size_mb, const NetworkTrace& trace, double start_s) {
  if (size_mb <= 0.0) return 0.0;
  const auto& samples = trace.samples;
  const double t0 = samples.front().time_s;
  const double span = trace.span_s();
  double pos = std::fmod(start_s - t0, span);
  if (pos < 0.0) pos += span;
  pos += t0;

  double remaining_mbit = size_mb * 8.0;
  double elapsed = 0.0;
  // segment i covers [t_i, t_{i+1}); the last segment runs to t0 + span
  auto segment_of = [&](double t) {
    auto it = std::upper_bound(
        samples.begin(), samples.end(), t,
        [](double value, const BandwidthSample& s) { return value < s.time_s; });
    return static_cast<std::size_t>(std::max<std::ptrdiff_t>(
        0, std::distance(samples.begin(), it) - 1));
  };
  std::size_t i = segment_of(pos);
  while (remaining_mbit > 0.0) {
    const double rate = samples[i].mbps;
    const double seg_end = (i + 1 < samples.size()) ? samples[i + 1].time_s : t0 + span;
    const double width = seg_end - pos;
    const double capacity = width * rate;
    if (capacity >= remaining_mbit) {
      elapsed += remaining_mbit / rate;
      remaining_mbit = 0.0;
    } else {
      elapsed += width;
      remaining_mbit -= capacity;
      if (i + 1 < samples.size()) {
        pos = seg_end;
        ++i;
      } else {
        pos = t0;
        i = 0;
      }
    }
  }
  return elapsed;
}

namespace {

void append_video(SessionState& st, const VideoAsset* asset) {
  VideoSlot slot;
  slot.asset = asset;
  slot.serial = st.appended_count++;
  slot.scroll_chunk = sample_scroll_chunk(asset->retention, st.rng);
  st.queue.push_back(std::move(slot));
}

void fire_scroll(SessionState& st, StepOutcome& out) {
  VideoSlot& slot = st.queue.front();
  double waste = 0.0;
  for (const auto& chunk : slot.buffer) waste += chunk.size_mb;
  st.wasted_mb += waste;
  out.scroll_events.push_back({slot.asset->id, waste, st.play_chunk, slot.serial});
  st.queue.erase(st.queue.begin());
  st.play_chunk = 0;
  st.play_offset_s = 0.0;
  if (!st.pending.empty()) {
    append_video(st, st.pending.front());
    st.pending.erase(st.pending.begin());
  }
  if (st.queue.empty()) st.done = true;
}

void finish_chunk(SessionState& st, StepOutcome& out) {
  VideoSlot& slot = st.queue.front();
  const BufferedChunk chunk = slot.buffer.front();
  slot.buffer.pop_front();
  st.watched_mb += chunk.size_mb;
  PlayedChunk played;
  played.video_id = slot.asset->id;
  played.chunk = chunk.index;
  played.bitrate_kbps = st.cfg.ladder_kbps[chunk.level];
  played.fluctuation_kbps =
      slot.last_played_level >= 0
          ? std::abs(played.bitrate_kbps - st.cfg.ladder_kbps[slot.last_played_level])
          : 0.0;
  played.size_mb = chunk.size_mb;
  out.played_chunks.push_back(std::move(played));
  slot.last_played_level = chunk.level;
  st.play_chunk += 1;
  st.play_offset_s = 0.0;
  if (st.play_chunk >= slot.scroll_chunk) fire_scroll(st, out);
}

// Advances simulated playback by up to dt seconds, firing chunk completions
// and scrolls. Returns the time actually consumed. With stop_before_stall the
// advance halts the instant the playing buffer runs dry; otherwise stall time
// accrues as rebuffering.
double advance_playback(SessionState& st, double dt, bool stop_before_stall,
                        StepOutcome& out) {
  double remaining = dt;
  double consumed = 0.0;
  while (remaining > kTimeEps) {
    if (st.queue.empty()) {
      st.done = true;
      break;
    }
    VideoSlot& slot = st.queue.front();
    const bool playable =
        !slot.buffer.empty() && slot.buffer.front().index == st.play_chunk;
    if (playable) {
      const double play_left = slot.asset->chunk_duration_s - st.play_offset_s;
      if (remaining + kTimeEps >= play_left) {
        consumed += play_left;
        remaining -= play_left;
        finish_chunk(st, out);
      } else {
        st.play_offset_s += remaining;
        consumed += remaining;
        remaining = 0.0;
      }
    } else {
      if (stop_before_stall) break;
      out.rebuffer_s += remaining;
      st.total_rebuffer_s += remaining;
      consumed += remaining;
      remaining = 0.0;
    }
  }
  return consumed;
}

SessionState make_session(std::vector<const VideoAsset*> stream,
                          const NetworkTrace& trace, const SessionConfig& cfg,
                          std::uint64_t seed, bool strict) {
  cfg.validate_or_throw();
  if (trace.span_s() < cfg.min_trace_span_s) {
    throw ConfigError("trace '" + trace.id + "' spans " +
                      std::to_string(trace.span_s()) +
                      " s, below the minimum session length of " +
                      std::to_string(cfg.min_trace_span_s) + " s");
  }
  if (strict && static_cast<int>(stream.size()) < cfg.queue_length) {
    throw ConfigError("asset stream supplies " + std::to_string(stream.size()) +
                      " videos, need at least " + std::to_string(cfg.queue_length));
  }
  for (const VideoAsset* asset : stream) {
    if (asset->level_count() != cfg.levels()) {
      throw ConfigError("video '" + asset->id + "' has " +
                        std::to_string(asset->level_count()) +
                        " levels, session expects " + std::to_string(cfg.levels()));
    }
  }
  SessionState st;
  st.cfg = cfg;
  st.trace = &trace;
  st.rng.seed(seed);
  const int initial = std::min<int>(cfg.queue_length, static_cast<int>(stream.size()));
  for (int i = 0; i < initial; ++i) append_video(st, stream[i]);
  for (std::size_t i = initial; i < stream.size(); ++i) st.pending.push_back(stream[i]);
  st.done = st.queue.empty();
  return st;
}

}  // namespace

SessionState init_session(std::vector<const VideoAsset*> stream,
                          const NetworkTrace& trace, const SessionConfig& cfg,
                          std::uint64_t seed) {
  return make_session(std::move(stream), trace, cfg, seed, /*strict=*/true);
}

SessionState init_session_unchecked(std::vector<const VideoAsset*> stream,
                                    const NetworkTrace& trace,
                                    const SessionConfig& cfg,
                                    std::uint64_t seed) {
  return make_session(std::move(stream), trace, cfg, seed, /*strict=*/false);
}

ActionMask valid_actions(const SessionState& state) {
  ActionMask mask;
  mask.video_ok.assign(state.cfg.queue_length, false);
  const int live = std::min<int>(state.cfg.queue_length,
                                 static_cast<int>(state.queue.size()));
  for (int j = 0; j < live; ++j) {
    const VideoSlot& slot = state.queue[j];
    if (slot.fully_downloaded()) continue;
    if (j > 0 &&
        static_cast<int>(slot.buffer.size()) >= state.cfg.max_prefetch_chunks) {
      continue;
    }
    mask.video_ok[j] = true;
  }
  return mask;
}

StepOutcome step(SessionState& state, const Action& action) {
  if (state.done) throw StateError("step called on a finished session");
  const ActionMask mask = valid_actions(state);
  if (!mask.allows(action, state.cfg.levels())) {
    throw ActionMaskError(
        action.kind == Action::Kind::kSleep
            ? std::string("sleep is masked")
            : "download masked for video " + std::to_string(action.video_index) +
                  " level " + std::to_string(action.bitrate_level));
  }

  StepOutcome out;
  if (action.kind == Action::Kind::kSleep) {
    double consumed =
        advance_playback(state, state.cfg.sleep_duration_s, /*stop=*/true, out);
    if (consumed <= kTimeEps && !state.done) {
      // Already stalled: the sleep runs its full course while the stall accrues.
      advance_playback(state, state.cfg.sleep_duration_s, /*stop=*/false, out);
      consumed = state.cfg.sleep_duration_s;
    }
    state.clock_s += consumed;
    out.step_duration_s = consumed;
  } else {
    VideoSlot& slot = state.queue[action.video_index];
    const VideoAsset* target = slot.asset;
    const int target_serial = slot.serial;
    const int chunk_index = slot.next_download;
    const int prev_level = slot.last_level;
    const double size = target->chunk_sizes_mb[chunk_index][action.bitrate_level];
    const double duration = download_time(size, *state.trace, state.clock_s);

    advance_playback(state, duration, /*stop=*/false, out);
    state.clock_s += duration;
    out.step_duration_s = duration;
    state.downloaded_mb += size;

    DownloadedChunk dl;
    dl.video_id = target->id;
    dl.chunk = chunk_index;
    dl.bitrate_kbps = state.cfg.ladder_kbps[action.bitrate_level];
    dl.fluctuation_kbps =
        prev_level >= 0
            ? std::abs(dl.bitrate_kbps - state.cfg.ladder_kbps[prev_level])
            : 0.0;
    dl.size_mb = size;
    dl.duration_s = duration;
    out.downloaded_chunk = dl;

    VideoSlot* live = nullptr;
    for (auto& candidate : state.queue) {
      if (candidate.serial == target_serial) {
        live = &candidate;
        break;
      }
    }
    if (live != nullptr) {
      live->buffer.push_back({chunk_index, action.bitrate_level, size});
      live->prev_level = live->last_level;
      live->last_level = action.bitrate_level;
      live->last_rebuffer_s = out.rebuffer_s;
      live->next_download += 1;
    } else {
      // The target was scrolled away while its chunk was in flight.
      state.wasted_mb += size;
      bool merged = false;
      for (auto& ev : out.scroll_events) {
        if (ev.serial == target_serial) {
          ev.wasted_mb += size;
          merged = true;
          break;
        }
      }
      if (!merged) out.scroll_events.push_back({target->id, size, 0, target_serial});
    }

    state.throughput_hist_mbps.push_back(size * 8.0 / duration);
    while (static_cast<int>(state.throughput_hist_mbps.size()) > kThroughputHistory) {
      state.throughput_hist_mbps.pop_front();
    }
  }

  state.steps += 1;
  if (state.steps >= state.cfg.max_steps) state.done = true;
  out.session_done = state.done;
  return out;
}

}  // namespace sabr
