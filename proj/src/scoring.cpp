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

#include "sabr/scoring.hpp"

#include <cmath>

namespace sabr {

double smoothness_term(double bitrate_mbps, double prev_bitrate_mbps) {
  if (prev_bitrate_mbps < 0.0) return 0.0;
  return std::abs(bitrate_mbps - prev_bitrate_mbps);
}

ScoreBreakdown utility_score(const Trajectory& trajectory,
                             const ScoreCoefficients& coeffs) {
  if (!trajectory.steps.empty() && !trajectory.finished) {
    throw StateError("utility_score needs a complete trajectory");
  }
  ScoreBreakdown score;
  for (const auto& step : trajectory.steps) {
    for (const auto& played : step.outcome.played_chunks) {
      score.quality += played.bitrate_kbps / 1000.0;
      score.smoothness += played.fluctuation_kbps / 1000.0;
      score.played_chunks += 1;
    }
    score.rebuffer_s += step.outcome.rebuffer_s;
    if (step.outcome.downloaded_chunk) {
      score.bandwidth_mb += step.outcome.downloaded_chunk->size_mb;
      score.downloaded_chunks += 1;
    }
    for (const auto& scroll : step.outcome.scroll_events) {
      score.wasted_mb += scroll.wasted_mb;
    }
  }
  score.rebuffer_penalty = coeffs.mu * score.rebuffer_s;
  score.bandwidth_penalty = coeffs.nu * score.bandwidth_mb;
  score.utility = score.quality - score.smoothness - score.rebuffer_penalty -
                  score.bandwidth_penalty;
  return score;
}

double step_reward(const StepOutcome& outcome, int watched_w, double retention_l,
                   const ScoreCoefficients& coeffs) {
  if (!(retention_l >= 0.0 && retention_l <= 1.0)) {
    throw ValidationError("step_reward: retention outside [0,1]");
  }
  double reward = -coeffs.mu * outcome.rebuffer_s;
  if (outcome.downloaded_chunk) {
    const auto& dl = *outcome.downloaded_chunk;
    const double quality_mbps = dl.bitrate_kbps / 1000.0;
    const double smooth_mbps = dl.fluctuation_kbps / 1000.0;
    reward += static_cast<double>(watched_w) * retention_l *
              (quality_mbps - smooth_mbps);
    reward -= coeffs.nu * dl.size_mb;
  }
  return reward;
}

}  // namespace sabr
