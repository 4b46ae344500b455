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

#ifndef SABR_NET_HPP_
#define SABR_NET_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sabr/runner.hpp"
#include "sabr/sim.hpp"

namespace sabr {

/// Layer sizes of the two actors and the shared critic. The actors are
/// fully-connected stacks with leaky-ReLU hidden activations and a softmax
/// output; the critic reads the concatenation of both actors' last hidden
/// layers and emits one unactivated scalar.
struct ArchConfig {
  int bm_input = 20;
  int bm_output = 6;
  int ba_input = 11;
  int ba_output = 3;
  std::vector<int> hidden = {64, 64};
  std::vector<int> critic_hidden = {};
  double leaky_slope = 0.01;

  static ArchConfig for_session(const SessionConfig& cfg);
  bool operator==(const ArchConfig&) const = default;
};

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // row-major, out x in
  std::vector<double> b;
};

struct Mlp {
  std::vector<DenseLayer> layers;
};

struct PolicyParameters {
  ArchConfig arch;
  Mlp bm;
  Mlp ba;
  Mlp critic;

  std::size_t parameter_count() const;
};

/// Gradient (or update) buffer shaped like PolicyParameters.
struct ParameterGrads {
  Mlp bm;
  Mlp ba;
  Mlp critic;
};

struct ActionDistribution {
  std::vector<double> probs;      // masked atoms are exactly 0
  std::vector<double> log_probs;  // -inf on masked atoms
};

struct MlpCache {
  std::vector<std::vector<double>> act;  // act[0] = input, act[L] = output
  std::vector<std::vector<double>> pre;  // preactivations per layer
};

struct ActorForward {
  ActionDistribution dist;
  MlpCache cache;
};

PolicyParameters init_params(const ArchConfig& arch, std::uint64_t seed);
ParameterGrads zero_grads(const PolicyParameters& params);

/// Numerically stable softmax over the unmasked atoms. Throws StateError if
/// everything is masked.
ActionDistribution masked_softmax(const std::vector<double>& logits,
                                  const std::vector<bool>& mask);

ActorForward forward_actor(const Mlp& net, const std::vector<double>& input,
                           const std::vector<bool>& mask, double leaky_slope);

/// Critic forward over the concatenated last hidden activations.
double critic_value(const PolicyParameters& params,
                    const std::vector<double>& bm_hidden,
                    const std::vector<double>& ba_hidden,
                    MlpCache* cache = nullptr);

int sample_action(const ActionDistribution& dist, std::mt19937_64& rng);
int argmax_action(const ActionDistribution& dist);

// -- losses ---------------------------------------------------------------

struct ILSample {
  std::vector<double> input;
  std::vector<bool> mask;
  int expert_index = 0;
};

struct ILBatch {
  std::vector<ILSample> bm;
  std::vector<ILSample> ba;
};

struct RLSample {
  std::vector<double> bm_input;
  std::vector<bool> bm_mask;
  int bm_index = 0;
  double bm_behavior_log_prob = 0.0;
  bool has_ba = false;
  std::vector<double> ba_input;
  int ba_index = 0;
  double ba_behavior_log_prob = 0.0;
  double advantage = 0.0;
  double value_target = 0.0;
};

struct RLLossConfig {
  double epsilon_clip = 0.2;
  double beta_entropy = 0.01;
  double value_coeff = 0.5;
};

struct LossStats {
  double total = 0.0;
  double bm_policy = 0.0;
  double ba_policy = 0.0;
  double entropy = 0.0;     // summed policy entropy (pre-weight)
  double value = 0.0;       // summed squared value error (pre-weight)
  double surrogate = 0.0;   // summed clipped surrogate
  int skipped_samples = 0;  // non-finite ratios
};

/// Imitation cross-entropy, summed over the batch (not averaged). When
/// `grads` is non-null the analytic gradients are accumulated into it.
/// Throws NumericError on a non-finite loss.
LossStats il_loss(const PolicyParameters& params, const ILBatch& batch,
                  ParameterGrads* grads);

/// Clipped-surrogate policy loss with entropy bonus plus the critic's squared
/// error against the GAE returns, summed over the batch.
LossStats rl_loss(const PolicyParameters& params,
                  const std::vector<RLSample>& batch, const RLLossConfig& cfg,
                  ParameterGrads* grads);

/// params -= alpha * grads (the plain gradient step used by both stages).
void apply_gradients(PolicyParameters& params, const ParameterGrads& grads,
                     double alpha);

// -- checkpoints (bit-exact) -----------------------------------------------

void save_checkpoint(const PolicyParameters& params, const std::string& path);
PolicyParameters load_checkpoint(const std::string& path);

// -- session policy ----------------------------------------------------------

/// Hierarchical two-agent policy over a session. Greedy when
/// `stochastic == false` (evaluation), sampling otherwise (rollouts).
/// At decision time each agent consumes only its own observation.
class NeuralPolicy : public Policy {
 public:
  struct Annotations {
    int bm_index = 0;
    double bm_log_prob = 0.0;
    bool has_ba = false;
    int ba_index = 0;
    double ba_log_prob = 0.0;
    double value = 0.0;
    BMObservation bm_obs;
    BAObservation ba_obs;
    std::vector<bool> bm_mask;
  };

  NeuralPolicy(const PolicyParameters& params, bool stochastic,
               std::uint64_t seed, bool compute_value = false);
  void begin_session(std::uint64_t seed) override;
  Action decide(const SessionState& state, const ActionMask& mask) override;
  void annotate(TrajectoryStep& step) const override;
  const Annotations& last() const { return last_; }

 private:
  const PolicyParameters& params_;
  bool stochastic_;
  bool compute_value_;
  std::mt19937_64 rng_;
  Annotations last_;
};

}  // namespace sabr

#endif  // SABR_NET_HPP_
