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

#ifndef SABR_POLICIES_HPP_
#define SABR_POLICIES_HPP_

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "sabr/runner.hpp"
#include "sabr/scoring.hpp"
#include "sabr/sim.hpp"

namespace sabr {

struct MpcConfig {
  int horizon = 5;
  bool use_oracle_throughput = false;  // expert mode: plan on the true trace
  double prediction_floor_mbps = 0.1;
  bool prune_admissible = true;
  ScoreCoefficients coeffs;
};

struct SearchResult {
  Action first_action;
  double best_score = 0.0;
  std::uint64_t nodes = 0;      // playout nodes expanded (deterministic)
  std::uint64_t closed = 0;     // candidate sequences scored
};

/// Harmonic mean of the positive entries; 0 when there are none.
double harmonic_mean_nonzero(const std::deque<double>& history);

/// Harmonic mean of the last nonzero throughputs discounted by
/// (1 + max relative error of the same predictor over the history window).
/// Returns `floor_mbps` when the history has no nonzero sample.
double robust_throughput_prediction(const std::deque<double>& history,
                                    double floor_mbps = 0.1);

/// Candidate sequence space of the horizon search before masking:
/// (queue_length * levels + 1)^horizon.
std::uint64_t mpc_sequence_space(int queue_length, int levels, int horizon);

/// Enumerates action sequences of length `horizon` against a constant
/// predicted bandwidth, scoring each playout with the utility terms, and
/// returns the first action of the best sequence. Ties break toward lower
/// bitrate, then lower video index, with sleep last.
SearchResult mpc_search(const SessionState& state, double predicted_mbps,
                        int horizon, const ScoreCoefficients& coeffs,
                        bool prune_admissible = true);

/// Identical search, but planning on the session's true bandwidth trace and
/// weighting every candidate chunk's quality by its conditional retention.
SearchResult pdas_expert(const SessionState& state, int horizon,
                         const ScoreCoefficients& coeffs,
                         bool prune_admissible = true);

// -- policy wrappers -------------------------------------------------------

/// Keeps the playing video above a buffer target at the lowest bitrate, then
/// tops up the emptiest recommended video, else sleeps.
class FixedPreloadPolicy : public Policy {
 public:
  explicit FixedPreloadPolicy(double playing_buffer_target_s = 5.0)
      : target_s_(playing_buffer_target_s) {}
  Action decide(const SessionState& state, const ActionMask& mask) override;

 private:
  double target_s_;
};

class MpcPolicy : public Policy {
 public:
  explicit MpcPolicy(MpcConfig cfg = {}) : cfg_(cfg) {}
  Action decide(const SessionState& state, const ActionMask& mask) override;
  const SearchResult& last_result() const { return last_; }

 private:
  MpcConfig cfg_;
  SearchResult last_;
};

class PdasExpertPolicy : public Policy {
 public:
  explicit PdasExpertPolicy(MpcConfig cfg = {}) : cfg_(cfg) { cfg_.use_oracle_throughput = true; }
  Action decide(const SessionState& state, const ActionMask& mask) override;
  const SearchResult& last_result() const { return last_; }

 private:
  MpcConfig cfg_;
  SearchResult last_;
};

// -- brute-force oracle ----------------------------------------------------

/// A self-contained tiny instance with deterministic scroll points
/// (retention values are 0/1 step functions).
struct MicroInstance {
  std::vector<VideoAsset> videos;
  NetworkTrace trace;
  SessionConfig cfg;
  std::uint64_t seed = 0;
};

struct OracleResult {
  double best_utility = 0.0;
  Action first_action;
  std::uint64_t sequences = 0;
};

/// Exhaustively simulates every action sequence through the real simulator
/// and returns the utility optimum. Throws SizeError past `max_sequences`.
OracleResult brute_force_oracle(const MicroInstance& instance,
                                std::uint64_t max_sequences = 1000000,
                                int max_steps_per_path = 64,
                                const ScoreCoefficients& coeffs = {});

/// Builds a randomized deterministic micro instance (2 short videos, 2
/// bitrate levels, constant bandwidth, 0/1 retention).
MicroInstance make_micro_instance(std::uint64_t seed);

SessionState micro_session(const MicroInstance& instance);

}  // namespace sabr

#endif  // SABR_POLICIES_HPP_
