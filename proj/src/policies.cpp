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

#include "sabr/policies.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace sabr {

double harmonic_mean_nonzero(const std::deque<double>& history) {
  double inv_sum = 0.0;
  int n = 0;
  for (double v : history) {
    if (v > 0.0) {
      inv_sum += 1.0 / v;
      ++n;
    }
  }
  return n == 0 ? 0.0 : static_cast<double>(n) / inv_sum;
}

double robust_throughput_prediction(const std::deque<double>& history,
                                    double floor_mbps) {
  std::vector<double> nonzero;
  for (double v : history) {
    if (v > 0.0) nonzero.push_back(v);
  }
  if (nonzero.empty()) return floor_mbps;
  auto harmonic = [](const std::vector<double>& v, std::size_t end) {
    double inv = 0.0;
    for (std::size_t i = 0; i < end; ++i) inv += 1.0 / v[i];
    return static_cast<double>(end) / inv;
  };
  const double base = harmonic(nonzero, nonzero.size());
  // Relative error the same predictor would have made inside the window.
  double max_err = 0.0;
  for (std::size_t i = 1; i < nonzero.size(); ++i) {
    const double pred = harmonic(nonzero, i);
    max_err = std::max(max_err, std::abs(pred - nonzero[i]) / nonzero[i]);
  }
  return base / (1.0 + max_err);
}

std::uint64_t mpc_sequence_space(int queue_length, int levels, int horizon) {
  const std::uint64_t atoms =
      static_cast<std::uint64_t>(queue_length) * levels + 1;
  std::uint64_t total = 1;
  for (int i = 0; i < horizon; ++i) total *= atoms;
  return total;
}

// ---------------------------------------------------------------------------
// Horizon search. The playout mirrors the simulator's timing rules with one
// planning simplification: the user leaves a video at its first zero-retention
// chunk (the only scroll point that is certain in advance), and the queue is
// not refilled because future recommendations are unknown.
// ---------------------------------------------------------------------------

namespace {

constexpr int kMaxPlanQueue = 16;
constexpr double kPlanEps = 1e-12;

struct PlanVideo {
  const VideoAsset* asset = nullptr;
  int next_download = 0;
  int last_level = -1;
  int watch_end = 0;  // first chunk with zero retention, else chunk_count
};

struct PlanState {
  double clock = 0.0;
  double play_offset = 0.0;
  int play_chunk = 0;
  int queue_len = 0;
  int scroll_count = 0;
  std::array<PlanVideo, kMaxPlanQueue> queue;
  bool done = false;

  bool front_stalled() const {
    return queue_len > 0 && queue[0].next_download <= play_chunk;
  }
};

struct PlanContext {
  int horizon = 1;
  bool retention_weighted = false;
  double constant_mbps = 0.0;             // used when trace is null
  const NetworkTrace* trace = nullptr;    // true-throughput (expert) mode
  ScoreCoefficients coeffs;
  bool prune_admissible = true;
  int levels = 0;
  const std::vector<double>* ladder = nullptr;
  int max_prefetch = 4;
  double sleep_s = 0.2;
  double max_quality_mbps = 0.0;

  // search bookkeeping
  double best_score = -std::numeric_limits<double>::infinity();
  std::uint64_t nodes = 0;
  std::uint64_t closed = 0;
};

int watch_end_of(const VideoAsset& asset) {
  for (int m = 0; m < asset.chunk_count(); ++m) {
    if (!(asset.retention[m] > 0.0)) return m;
  }
  return asset.chunk_count();
}

PlanState plan_root(const SessionState& state) {
  if (static_cast<int>(state.queue.size()) > kMaxPlanQueue) {
    throw SizeError("horizon search supports queues up to " +
                    std::to_string(kMaxPlanQueue));
  }
  PlanState ps;
  ps.clock = state.clock_s;
  ps.play_offset = state.play_offset_s;
  ps.play_chunk = state.play_chunk;
  ps.queue_len = static_cast<int>(state.queue.size());
  for (int j = 0; j < ps.queue_len; ++j) {
    const VideoSlot& slot = state.queue[j];
    ps.queue[j] = {slot.asset, slot.next_download, slot.last_level,
                   watch_end_of(*slot.asset)};
  }
  ps.done = state.done || ps.queue_len == 0;
  return ps;
}

void plan_scroll(PlanState& ps) {
  for (int j = 1; j < ps.queue_len; ++j) ps.queue[j - 1] = ps.queue[j];
  ps.queue_len -= 1;
  ps.scroll_count += 1;
  ps.play_chunk = 0;
  ps.play_offset = 0.0;
  if (ps.queue_len == 0) ps.done = true;
}

// Mirror of the simulator's playback advance under planned dynamics.
double plan_advance(PlanState& ps, double dt, bool stop_before_stall,
                    double& stall_out) {
  double remaining = dt;
  double consumed = 0.0;
  while (remaining > kPlanEps) {
    if (ps.queue_len == 0) {
      ps.done = true;
      break;
    }
    PlanVideo& front = ps.queue[0];
    if (front.next_download > ps.play_chunk) {
      const double left = front.asset->chunk_duration_s - ps.play_offset;
      if (remaining + kPlanEps >= left) {
        consumed += left;
        remaining -= left;
        ps.play_chunk += 1;
        ps.play_offset = 0.0;
        if (ps.play_chunk >= front.watch_end) plan_scroll(ps);
      } else {
        ps.play_offset += remaining;
        consumed += remaining;
        remaining = 0.0;
      }
    } else {
      if (stop_before_stall) break;
      stall_out += remaining;
      consumed += remaining;
      remaining = 0.0;
    }
  }
  return consumed;
}

double plan_download_duration(const PlanContext& ctx, double size_mb,
                              double clock) {
  if (ctx.trace != nullptr) return download_time(size_mb, *ctx.trace, clock);
  return size_mb * 8.0 / ctx.constant_mbps;
}

bool plan_download_valid(const PlanState& ps, const PlanContext& ctx, int j) {
  if (j >= ps.queue_len) return false;
  const PlanVideo& v = ps.queue[j];
  if (v.next_download >= v.asset->chunk_count()) return false;
  if (j > 0) {
    const int buffered = v.next_download;  // recommended videos start at 0
    if (buffered >= ctx.max_prefetch) return false;
  }
  return true;
}

// Applies one download atom and returns its score contribution. The quality
// weight and smoothness are fixed at request time, matching the reward
// definition; the queue may shift while the download is in flight.
double plan_apply_download(PlanState& ps, PlanContext& ctx, int j, int level) {
  const VideoAsset* asset = ps.queue[j].asset;
  const int n = ps.queue[j].next_download;
  const int prev_level = ps.queue[j].last_level;
  const double size = asset->chunk_sizes_mb[n][level];
  const double bitrate = (*ctx.ladder)[level];
  const double smooth =
      prev_level >= 0 ? std::abs(bitrate - (*ctx.ladder)[prev_level]) : 0.0;
  double weight = 1.0;
  if (ctx.retention_weighted) {
    const int m = (j == 0) ? ps.play_chunk : 0;
    const double base = asset->retention[m];
    weight = base > 0.0
                 ? std::clamp(asset->retention[n] / base, 0.0, 1.0)
                 : 0.0;
  }

  const double duration = plan_download_duration(ctx, size, ps.clock);
  const int scrolls_before = ps.scroll_count;
  double stall = 0.0;
  plan_advance(ps, duration, /*stop=*/false, stall);
  ps.clock += duration;

  double score = -ctx.coeffs.mu * stall - ctx.coeffs.nu * size;
  const int live_j = j - (ps.scroll_count - scrolls_before);
  if (live_j >= 0) {
    PlanVideo& live = ps.queue[live_j];
    live.next_download += 1;
    live.last_level = level;
    score += weight * (bitrate - smooth) / 1000.0;
  }
  return score;
}

double plan_apply_sleep(PlanState& ps, PlanContext& ctx) {
  double stall = 0.0;
  const double consumed = plan_advance(ps, ctx.sleep_s, /*stop=*/true, stall);
  if (consumed <= kPlanEps && !ps.done) {
    plan_advance(ps, ctx.sleep_s, /*stop=*/false, stall);
    ps.clock += ctx.sleep_s;
  } else {
    ps.clock += consumed;
  }
  return -ctx.coeffs.mu * stall;
}

double plan_dfs(const PlanState& ps, PlanContext& ctx, int depth, double score) {
  ctx.nodes += 1;
  if (ps.done || depth == ctx.horizon) {
    ctx.closed += 1;
    ctx.best_score = std::max(ctx.best_score, score);
    return score;
  }
  if (ctx.prune_admissible &&
      score + (ctx.horizon - depth) * ctx.max_quality_mbps < ctx.best_score) {
    return -std::numeric_limits<double>::infinity();
  }
  double best = -std::numeric_limits<double>::infinity();
  for (int level = 0; level < ctx.levels; ++level) {
    for (int j = 0; j < ps.queue_len; ++j) {
      if (!plan_download_valid(ps, ctx, j)) continue;
      PlanState next = ps;
      const double delta = plan_apply_download(next, ctx, j, level);
      best = std::max(best, plan_dfs(next, ctx, depth + 1, score + delta));
    }
  }
  // Sleeping while the playing video is stalled is dominated by downloading
  // its needed chunk first, so that branch is skipped.
  const bool skip_sleep = ps.front_stalled() && plan_download_valid(ps, ctx, 0);
  if (!skip_sleep) {
    PlanState next = ps;
    const double delta = plan_apply_sleep(next, ctx);
    best = std::max(best, plan_dfs(next, ctx, depth + 1, score + delta));
  }
  return best;
}

SearchResult run_search(const SessionState& state, PlanContext ctx) {
  ctx.levels = state.cfg.levels();
  ctx.ladder = &state.cfg.ladder_kbps;
  ctx.max_prefetch = state.cfg.max_prefetch_chunks;
  ctx.sleep_s = state.cfg.sleep_duration_s;
  ctx.max_quality_mbps = state.cfg.ladder_kbps.back() / 1000.0;

  const PlanState root = plan_root(state);
  SearchResult result;
  result.first_action = Action::Sleep();
  result.best_score = -std::numeric_limits<double>::infinity();
  if (root.done || ctx.horizon < 1) {
    result.best_score = 0.0;
    return result;
  }
  bool have_best = false;
  // Root atoms in tie-break preference order: lower bitrate, then lower video
  // index, sleep last. Strict improvement keeps the preferred atom on ties.
  for (int level = 0; level < ctx.levels; ++level) {
    for (int j = 0; j < root.queue_len; ++j) {
      if (!plan_download_valid(root, ctx, j)) continue;
      PlanState next = root;
      const double delta = plan_apply_download(next, ctx, j, level);
      const double sub = plan_dfs(next, ctx, 1, delta);
      if (!have_best || sub > result.best_score) {
        result.best_score = sub;
        result.first_action = Action::Download(j, level);
        have_best = true;
      }
    }
  }
  const bool skip_sleep =
      root.front_stalled() && plan_download_valid(root, ctx, 0);
  if (!skip_sleep) {
    PlanState next = root;
    const double delta = plan_apply_sleep(next, ctx);
    const double sub = plan_dfs(next, ctx, 1, delta);
    if (!have_best || sub > result.best_score) {
      result.best_score = sub;
      result.first_action = Action::Sleep();
      have_best = true;
    }
  }
  result.nodes = ctx.nodes;
  result.closed = ctx.closed;
  return result;
}

}  // namespace

SearchResult mpc_search(const SessionState& state, double predicted_mbps,
                        int horizon, const ScoreCoefficients& coeffs,
                        bool prune_admissible) {
  if (!(predicted_mbps > 0.0)) {
    throw ArgumentError("mpc_search: predicted bandwidth must be positive");
  }
  PlanContext ctx;
  ctx.horizon = horizon;
  ctx.retention_weighted = false;
  ctx.constant_mbps = predicted_mbps;
  ctx.coeffs = coeffs;
  ctx.prune_admissible = prune_admissible;
  return run_search(state, ctx);
}

SearchResult pdas_expert(const SessionState& state, int horizon,
                         const ScoreCoefficients& coeffs,
                         bool prune_admissible) {
  PlanContext ctx;
  ctx.horizon = horizon;
  ctx.retention_weighted = true;
  ctx.trace = state.trace;
  ctx.coeffs = coeffs;
  ctx.prune_admissible = prune_admissible;
  return run_search(state, ctx);
}

// ---------------------------------------------------------------------------
// Policy wrappers
// ---------------------------------------------------------------------------

Action FixedPreloadPolicy::decide(const SessionState& state,
                                  const ActionMask& mask) {
  const bool playing_ok = !mask.video_ok.empty() && mask.video_ok[0];
  if (playing_ok && !state.queue.empty() &&
      state.queue[0].buffered_seconds(state.play_offset_s) < target_s_) {
    return Action::Download(0, 0);
  }
  int pick = -1;
  std::size_t smallest = 0;
  for (int j = 1; j < static_cast<int>(mask.video_ok.size()); ++j) {
    if (!mask.video_ok[j]) continue;
    const std::size_t buffered = state.queue[j].buffer.size();
    if (pick < 0 || buffered < smallest) {
      pick = j;
      smallest = buffered;
    }
  }
  if (pick >= 0) return Action::Download(pick, 0);
  return Action::Sleep();
}

Action MpcPolicy::decide(const SessionState& state, const ActionMask& mask) {
  (void)mask;
  const double predicted = robust_throughput_prediction(
      state.throughput_hist_mbps, cfg_.prediction_floor_mbps);
  last_ = mpc_search(state, predicted, cfg_.horizon, cfg_.coeffs,
                     cfg_.prune_admissible);
  return last_.first_action;
}

Action PdasExpertPolicy::decide(const SessionState& state,
                                const ActionMask& mask) {
  (void)mask;
  last_ = pdas_expert(state, cfg_.horizon, cfg_.coeffs, cfg_.prune_admissible);
  return last_.first_action;
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

namespace {

struct OracleContext {
  std::uint64_t max_sequences = 0;
  int max_steps = 0;
  ScoreCoefficients coeffs;
  std::uint64_t sequences = 0;
  double best = 0.0;
  bool have_best = false;
  Action best_first;
};

// (lower bitrate, lower video index, sleep last)
bool prefer_atom(const Action& a, const Action& b) {
  const auto key = [](const Action& x) {
    if (x.kind == Action::Kind::kSleep) return std::array<int, 3>{1, 0, 0};
    return std::array<int, 3>{0, x.bitrate_level, x.video_index};
  };
  return key(a) < key(b);
}

struct RunningScore {
  double quality = 0.0;
  double smooth = 0.0;
  double rebuffer = 0.0;
  double bandwidth = 0.0;

  void absorb(const StepOutcome& out) {
    for (const auto& p : out.played_chunks) {
      quality += p.bitrate_kbps / 1000.0;
      smooth += p.fluctuation_kbps / 1000.0;
    }
    rebuffer += out.rebuffer_s;
    if (out.downloaded_chunk) bandwidth += out.downloaded_chunk->size_mb;
  }
  double utility(const ScoreCoefficients& c) const {
    return quality - smooth - c.mu * rebuffer - c.nu * bandwidth;
  }
};

void oracle_dfs(const SessionState& state, const RunningScore& score, int depth,
                const Action& first, bool have_first, OracleContext& ctx) {
  if (state.done) {
    ctx.sequences += 1;
    if (ctx.sequences > ctx.max_sequences) {
      throw SizeError("brute_force_oracle: sequence budget exceeded");
    }
    const double u = score.utility(ctx.coeffs);
    if (!ctx.have_best || u > ctx.best ||
        (u == ctx.best && have_first && prefer_atom(first, ctx.best_first))) {
      ctx.best = u;
      ctx.best_first = first;
      ctx.have_best = true;
    }
    return;
  }
  if (depth >= ctx.max_steps) {
    // Paths that cannot finish the session count toward the budget only.
    ctx.sequences += 1;
    if (ctx.sequences > ctx.max_sequences) {
      throw SizeError("brute_force_oracle: sequence budget exceeded");
    }
    return;
  }
  const ActionMask mask = valid_actions(state);
  std::vector<Action> atoms;
  for (int l = 0; l < state.cfg.levels(); ++l) {
    for (int j = 0; j < static_cast<int>(mask.video_ok.size()); ++j) {
      if (mask.video_ok[j]) atoms.push_back(Action::Download(j, l));
    }
  }
  atoms.push_back(Action::Sleep());
  for (const Action& atom : atoms) {
    SessionState next = state;
    RunningScore next_score = score;
    next_score.absorb(step(next, atom));
    oracle_dfs(next, next_score, depth + 1, have_first ? first : atom, true,
               ctx);
  }
}

}  // namespace

SessionState micro_session(const MicroInstance& instance) {
  std::vector<const VideoAsset*> stream;
  for (const auto& v : instance.videos) stream.push_back(&v);
  return init_session_unchecked(stream, instance.trace, instance.cfg,
                                instance.seed);
}

OracleResult brute_force_oracle(const MicroInstance& instance,
                                std::uint64_t max_sequences,
                                int max_steps_per_path,
                                const ScoreCoefficients& coeffs) {
  OracleContext ctx;
  ctx.max_sequences = max_sequences;
  ctx.max_steps = max_steps_per_path;
  ctx.coeffs = coeffs;

  SessionState root = micro_session(instance);
  if (root.done) {
    return {0.0, Action::Sleep(), 1};
  }
  oracle_dfs(root, RunningScore{}, 0, Action::Sleep(), false, ctx);
  if (!ctx.have_best) {
    throw SizeError("brute_force_oracle: no sequence finished within the step cap");
  }
  return {ctx.best, ctx.best_first, ctx.sequences};
}

MicroInstance make_micro_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> first_chunks(1, 2);
  std::uniform_real_distribution<double> bandwidth(0.8, 2.5);
  std::uniform_real_distribution<double> size_scale(0.7, 1.3);

  MicroInstance inst;
  inst.cfg.queue_length = 2;
  inst.cfg.ladder_kbps = {750.0, 1850.0};
  inst.cfg.min_trace_span_s = 1.0;
  inst.seed = seed;

  const double mbps = bandwidth(rng);
  inst.trace.id = "micro_trace";
  inst.trace.samples = {{0.0, mbps}, {50.0, mbps}};

  // Two short videos; the second is a single chunk so the exhaustive
  // oracle's sequence tree stays within its budget.
  for (int v = 0; v < 2; ++v) {
    VideoAsset asset;
    asset.id = "micro_video_" + std::to_string(v);
    const int chunks = v == 0 ? first_chunks(rng) : 1;
    std::uniform_int_distribution<int> watch_dist(1, chunks);
    const int watch = watch_dist(rng);
    for (int m = 0; m < chunks; ++m) {
      asset.retention.push_back(m < watch ? 1.0 : 0.0);
      const double scale = size_scale(rng);
      std::vector<double> row;
      for (double kbps : inst.cfg.ladder_kbps) {
        row.push_back(kbps / 8000.0 * scale);
      }
      asset.chunk_sizes_mb.push_back(std::move(row));
    }
    validate(asset);
    inst.videos.push_back(std::move(asset));
  }
  return inst;
}

}  // namespace sabr
