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

#ifndef SABR_TRAJECTORY_HPP_
#define SABR_TRAJECTORY_HPP_

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sabr/features.hpp"
#include "sabr/sim.hpp"

namespace sabr {

/// One simulator step as recorded by run_session.
struct TrajectoryStep {
  BMObservation bm_obs;
  std::vector<bool> bm_mask;  // video atoms then sleep
  std::optional<BAObservation> ba_obs;  // download steps only
  Action action;
  StepOutcome outcome;
  double reward = 0.0;       // per-step training reward
  double retention_l = 1.0;  // l_n used for the reward
  int watched_w = 1;         // w_n used for the reward

  // behavior-policy annotations, filled by stochastic rollouts
  double bm_log_prob = 0.0;
  double ba_log_prob = 0.0;
  double value = 0.0;
};

struct Trajectory {
  std::string session_id;
  std::string trace_id;
  std::vector<TrajectoryStep> steps;
  bool finished = false;  // session ran to completion (or hit the step cap)
};

/// Writes the line-per-step export: a schema header line, then CSV rows of
/// step, clock_s, action kind/video/level, R_n, S_n, T_n, bw_n, waste_mb.
void export_trajectory(const Trajectory& traj, std::ostream& os);

}  // namespace sabr

#endif  // SABR_TRAJECTORY_HPP_
