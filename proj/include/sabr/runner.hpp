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

#ifndef SABR_RUNNER_HPP_
#define SABR_RUNNER_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include "sabr/scoring.hpp"
#include "sabr/sim.hpp"
#include "sabr/trajectory.hpp"

namespace sabr {

/// Decision callback. Implementations must return an action permitted by the
/// supplied mask. decide() may be stateful per session (e.g. to expose
/// log-probabilities) but must be deterministic given its own seed.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action decide(const SessionState& state, const ActionMask& mask) = 0;
  /// Called once per session before the first decision.
  virtual void begin_session(std::uint64_t /*seed*/) {}
  /// Lets stochastic policies attach behavior log-probs/values to the record.
  virtual void annotate(TrajectoryStep& /*step*/) const {}
};

struct RunOptions {
  ScoreCoefficients coeffs;
  bool record_observations = true;  // trajectories for training need them
};

/// Runs one full session, recording every (observation, action, outcome) and
/// per-step training reward, then scores the finished trajectory.
std::pair<Trajectory, ScoreBreakdown> run_session(
    Policy& policy, std::vector<const VideoAsset*> stream,
    const NetworkTrace& trace, const SessionConfig& cfg, std::uint64_t seed,
    const RunOptions& options = {});

/// Draws `count` videos from the corpus in a seeded shuffled order, standing
/// in for the recommendation feed.
std::vector<const VideoAsset*> make_stream(const TraceCorpus& corpus,
                                           int count, std::uint64_t seed);

struct EvalSummary {
  ScoreBreakdown mean;
  std::vector<ScoreBreakdown> sessions;
};

/// Runs `session_count` sessions pairing traces round-robin with seeded
/// streams; deterministic for a fixed seed.
EvalSummary evaluate_policy(Policy& policy, const TraceCorpus& corpus,
                            const SessionConfig& cfg, int session_count,
                            int videos_per_session, std::uint64_t seed,
                            const ScoreCoefficients& coeffs = {});

// -- simple policies used across tests and the CLI ------------------------

/// Uniformly random valid action; exercises the full action surface.
class RandomValidPolicy : public Policy {
 public:
  explicit RandomValidPolicy(std::uint64_t seed) : rng_(seed) {}
  void begin_session(std::uint64_t seed) override { rng_.seed(seed); }
  Action decide(const SessionState& state, const ActionMask& mask) override;

 private:
  std::mt19937_64 rng_;
};

class AlwaysSleepPolicy : public Policy {
 public:
  Action decide(const SessionState&, const ActionMask&) override {
    return Action::Sleep();
  }
};

}  // namespace sabr

#endif  // SABR_RUNNER_HPP_
