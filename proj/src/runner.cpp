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

#include "sabr/runner.hpp"

#include <algorithm>
#include <random>

#include "sabr/features.hpp"

namespace sabr {

std::pair<Trajectory, ScoreBreakdown> run_session(
    Policy& policy, std::vector<const VideoAsset*> stream,
    const NetworkTrace& trace, const SessionConfig& cfg, std::uint64_t seed,
    const RunOptions& options) {
  SessionState state = init_session(std::move(stream), trace, cfg,
                                    derive_seed(seed, 0));
  policy.begin_session(derive_seed(seed, 1));

  Trajectory traj;
  traj.trace_id = trace.id;
  while (!state.done) {
    const ActionMask mask = valid_actions(state);
    TrajectoryStep rec;
    if (options.record_observations) {
      rec.bm_obs = build_bm_observation(state);
      rec.bm_mask.assign(mask.video_ok.begin(), mask.video_ok.end());
      rec.bm_mask.push_back(mask.sleep_ok);
    }
    const Action action = policy.decide(state, mask);

    // Reward inputs are captured before the step mutates the state.
    if (action.kind == Action::Kind::kDownload) {
      if (options.record_observations) {
        rec.ba_obs = build_ba_observation(state, action.video_index);
      }
      const VideoSlot& slot = state.queue[action.video_index];
      const int n = slot.next_download;
      const int m = (action.video_index == 0) ? state.play_chunk : 0;
      rec.retention_l = conditional_retention(slot.asset->retention, m, n);
      rec.watched_w = n < slot.scroll_chunk ? 1 : 0;
    } else {
      rec.retention_l = 1.0;
      rec.watched_w = 1;
    }

    rec.action = action;
    rec.outcome = step(state, action);
    rec.reward = step_reward(rec.outcome, rec.watched_w, rec.retention_l,
                             options.coeffs);
    policy.annotate(rec);
    traj.steps.push_back(std::move(rec));
  }
  traj.finished = true;
  ScoreBreakdown score = utility_score(traj, options.coeffs);
  return {std::move(traj), score};
}

std::vector<const VideoAsset*> make_stream(const TraceCorpus& corpus, int count,
                                           std::uint64_t seed) {
  std::vector<const VideoAsset*> order;
  order.reserve(corpus.videos.size());
  for (const auto& v : corpus.videos) order.push_back(&v);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<const VideoAsset*> stream;
  stream.reserve(count);
  for (int i = 0; i < count; ++i) {
    stream.push_back(order[i % order.size()]);
  }
  return stream;
}

EvalSummary evaluate_policy(Policy& policy, const TraceCorpus& corpus,
                            const SessionConfig& cfg, int session_count,
                            int videos_per_session, std::uint64_t seed,
                            const ScoreCoefficients& coeffs) {
  if (corpus.network_traces.empty() || corpus.videos.empty()) {
    throw ValidationError("evaluate_policy: empty corpus");
  }
  EvalSummary summary;
  RunOptions options;
  options.coeffs = coeffs;
  options.record_observations = false;
  for (int i = 0; i < session_count; ++i) {
    const NetworkTrace& trace =
        corpus.network_traces[i % corpus.network_traces.size()];
    auto stream = make_stream(corpus, videos_per_session, derive_seed(seed, i));
    auto [traj, score] =
        run_session(policy, std::move(stream), trace, cfg,
                    derive_seed(seed, 100000 + i), options);
    summary.sessions.push_back(score);
  }
  ScoreBreakdown& mean = summary.mean;
  for (const auto& s : summary.sessions) {
    mean.quality += s.quality;
    mean.smoothness += s.smoothness;
    mean.rebuffer_penalty += s.rebuffer_penalty;
    mean.bandwidth_penalty += s.bandwidth_penalty;
    mean.utility += s.utility;
    mean.rebuffer_s += s.rebuffer_s;
    mean.bandwidth_mb += s.bandwidth_mb;
    mean.wasted_mb += s.wasted_mb;
    mean.played_chunks += s.played_chunks;
    mean.downloaded_chunks += s.downloaded_chunks;
  }
  const double n = std::max<std::size_t>(1, summary.sessions.size());
  mean.quality /= n;
  mean.smoothness /= n;
  mean.rebuffer_penalty /= n;
  mean.bandwidth_penalty /= n;
  mean.utility /= n;
  mean.rebuffer_s /= n;
  mean.bandwidth_mb /= n;
  mean.wasted_mb /= n;
  return summary;
}

Action RandomValidPolicy::decide(const SessionState& state,
                                 const ActionMask& mask) {
  std::vector<Action> atoms;
  atoms.push_back(Action::Sleep());
  for (int j = 0; j < static_cast<int>(mask.video_ok.size()); ++j) {
    if (!mask.video_ok[j]) continue;
    for (int l = 0; l < state.cfg.levels(); ++l) {
      atoms.push_back(Action::Download(j, l));
    }
  }
  std::uniform_int_distribution<std::size_t> pick(0, atoms.size() - 1);
  return atoms[pick(rng_)];
}

void export_trajectory(const Trajectory& traj, std::ostream& os) {
  os << "# schema: trajectory v1\n";
  os << "step,clock_s,kind,video_index,bitrate_level,R_n_kbps,S_n_kbps,"
        "T_n_s,bw_n_mb,waste_mb\n";
  double clock = 0.0;
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const auto& s = traj.steps[i];
    clock += s.outcome.step_duration_s;
    double waste = 0.0;
    for (const auto& ev : s.outcome.scroll_events) waste += ev.wasted_mb;
    os << i << ',' << format_double(clock) << ',';
    if (s.action.kind == Action::Kind::kSleep) {
      os << "sleep,,,,,";
    } else {
      const auto& dl = *s.outcome.downloaded_chunk;
      os << "download," << s.action.video_index << ',' << s.action.bitrate_level
         << ',' << format_double(dl.bitrate_kbps) << ','
         << format_double(dl.fluctuation_kbps) << ',';
    }
    os << format_double(s.outcome.rebuffer_s) << ','
       << format_double(s.outcome.downloaded_chunk
                            ? s.outcome.downloaded_chunk->size_mb
                            : 0.0)
       << ',' << format_double(waste) << '\n';
  }
}

}  // namespace sabr
