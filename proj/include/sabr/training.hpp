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

#ifndef SABR_TRAINING_HPP_
#define SABR_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sabr/net.hpp"
#include "sabr/policies.hpp"
#include "sabr/runner.hpp"
#include "sabr/traces.hpp"

namespace sabr {

/// State-action pairs demonstrated by the expert, already split into the
/// video-ID (BM) and bitrate (BA) subsets. Inputs are normalized vectors.
struct ExpertDataset {
  int queue_length = 5;
  int levels = 3;
  double ladder_max_kbps = 1850.0;
  std::vector<ILSample> bm;
  std::vector<ILSample> ba;

  /// Checks that every expert index is unmasked in its paired state.
  void validate_or_throw() const;
};

void save_expert_dataset(const ExpertDataset& dataset, const std::string& path);
ExpertDataset load_expert_dataset(const std::string& path);

struct TrainConfig {
  double alpha = 0.0001;         // gradient step size, both stages
  double gamma = 0.95;           // discount
  double lambda_gae = 0.95;
  double epsilon_clip = 0.2;
  double beta_entropy = 0.01;    // initial entropy bonus weight
  double entropy_decay_factor = 0.5;
  int entropy_patience = 100;    // epochs without improvement before decay
  double value_coeff = 0.5;
  double max_grad_norm = 100.0;  // RL stage only; 0 disables
  int il_epochs = 4000;
  int il_batch = 256;
  int rl_epochs = 200;
  int sessions_per_epoch = 4;
  int expert_sessions = 60;
  int expert_horizon = 4;
  int videos_per_session = 8;
  int eval_sessions = 12;
  int il_eval_every = 200;      // utility-eval cadence inside stage 1
  int checkpoint_every = 0;     // extra periodic checkpoints; 0 = off
  double holdout_fraction = 0.1;
  double split_ratio = 0.8;
  std::vector<int> hidden = {64, 64};
  std::uint64_t seed = 1;
  SessionConfig session;
  ScoreCoefficients coeffs;

  void validate_or_throw() const;
};

/// Parses "key = value" lines; unknown keys fail loudly. The `corpus` key is
/// mandatory and either a corpus directory or "synthetic:<seed>".
TrainConfig load_train_config(const std::string& path, std::string* corpus_spec);

/// Runs `n_sessions` sessions with the retention-weighted expert acting and
/// records the split state-action pairs. Deterministic for a fixed seed.
ExpertDataset collect_expert_dataset(const TraceCorpus& corpus,
                                     const TrainConfig& config, int n_sessions,
                                     std::uint64_t seed);

/// One summed-cross-entropy gradient step on both agents (learning rate
/// alpha); returns the loss statistics of the batch before the step.
LossStats il_update(PolicyParameters& params, const ILBatch& batch, double alpha);

struct IlEpochStats {
  int epoch = 0;
  double loss = 0.0;
  double bm_agreement = 0.0;
  double ba_agreement = 0.0;
};

struct IlResult {
  std::vector<IlEpochStats> curve;
  double final_bm_agreement = 0.0;
  double final_ba_agreement = 0.0;
};

/// Stage 1: epochs of uniformly resampled minibatches from the stored expert
/// dataset, reporting held-out expert-action agreement per epoch.
IlResult il_pretrain(PolicyParameters& params, const ExpertDataset& dataset,
                     const TrainConfig& config);

/// Generalized advantage estimation:
/// delta_t = r_t + gamma (1-done_t) V_{t+1} - V_t,
/// A_t = delta_t + gamma lambda (1-done_t) A_{t+1}.
std::vector<double> compute_gae(const std::vector<double>& rewards,
                                const std::vector<double>& values,
                                const std::vector<bool>& dones, double gamma,
                                double lambda);

struct Rollout {
  std::vector<RLSample> samples;  // advantage/value_target filled by rl_update
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<bool> dones;

  double mean_reward() const;
};

/// Converts recorded trajectories into one concatenated rollout.
Rollout rollout_from_trajectories(const std::vector<Trajectory>& trajectories,
                                  const SessionConfig& cfg);

struct RlUpdateStats {
  LossStats loss;
  double mean_reward = 0.0;
  double grad_norm = 0.0;
  bool clipped = false;
};

/// One PPO-style update: GAE advantages, clipped surrogate with entropy
/// bonus, critic regression to the GAE returns, single gradient step.
RlUpdateStats rl_update(PolicyParameters& params, Rollout& rollout,
                        const TrainConfig& config, double beta_entropy);

/// Signals entropy decay after `patience` consecutive epochs without a new
/// best reward.
class StagnationTracker {
 public:
  explicit StagnationTracker(int patience) : patience_(patience) {}
  bool update(double reward);

 private:
  int patience_;
  bool has_best_ = false;
  double best_ = 0.0;
  int stale_ = 0;
};

struct TrainLogRow {
  int epoch = 0;
  std::string stage;  // "il" or "rl"
  double mean_reward = 0.0;
  double eval_utility = 0.0;
  bool has_eval = false;
  double entropy_weight = 0.0;
  double bm_agreement = 0.0;
  double ba_agreement = 0.0;
  double loss = 0.0;
  double wall_clock_s = 0.0;
};

struct TrainOutput {
  PolicyParameters params;     // after stage 2
  PolicyParameters il_params;  // after stage 1
  std::vector<TrainLogRow> log;
  ExpertDataset dataset;
};

/// Two-stage pipeline: expert imitation then MAPPO-style fine-tuning with a
/// shared critic, shared scalar reward, and entropy decay on stagnation.
TrainOutput train(const TrainConfig& config, const TraceCorpus& corpus);

void write_train_log(const std::vector<TrainLogRow>& log, const std::string& path);

}  // namespace sabr

#endif  // SABR_TRAINING_HPP_
