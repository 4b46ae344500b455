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

#ifndef SABR_SCORING_HPP_
#define SABR_SCORING_HPP_

#include "sabr/sim.hpp"
#include "sabr/trajectory.hpp"

namespace sabr {

/// Penalty weights of the utility score: mu per second of rebuffering,
/// nu per megabyte downloaded.
struct ScoreCoefficients {
  double mu = 1.85;
  double nu = 0.5;
};

/// The utility score and its components. Quality and smoothness are sums of
/// per-played-chunk bitrates in Mbps (1 s chunks); penalties already carry
/// their coefficients.
struct ScoreBreakdown {
  double quality = 0.0;
  double smoothness = 0.0;
  double rebuffer_penalty = 0.0;
  double bandwidth_penalty = 0.0;
  double utility = 0.0;

  double rebuffer_s = 0.0;     // unweighted
  double bandwidth_mb = 0.0;   // unweighted
  double wasted_mb = 0.0;      // informational
  int played_chunks = 0;
  int downloaded_chunks = 0;
};

/// |R - R_prev| in Mbps; zero for the first played chunk of a video.
double smoothness_term(double bitrate_mbps, double prev_bitrate_mbps);

/// Scores a complete trajectory. Quality and smoothness sum over played
/// chunks only; rebuffer and bandwidth penalties sum over every step.
/// Throws StateError when the trajectory is non-empty but unfinished.
ScoreBreakdown utility_score(const Trajectory& trajectory,
                             const ScoreCoefficients& coeffs = {});

/// Training reward for one step: w*l*(R_n - S_n) - mu*T_n - nu*bw_n, with the
/// quality and bandwidth terms absent on sleep steps. Throws ValidationError
/// when retention_l is outside [0,1].
double step_reward(const StepOutcome& outcome, int watched_w, double retention_l,
                   const ScoreCoefficients& coeffs = {});

}  // namespace sabr

#endif  // SABR_SCORING_HPP_
