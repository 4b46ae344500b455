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

#include "sabr/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "sabr/features.hpp"

namespace sabr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void matvec(const DenseLayer& layer, const std::vector<double>& x,
            std::vector<double>& out) {
  out.assign(layer.out, 0.0);
  for (int r = 0; r < layer.out; ++r) {
    const double* row = layer.w.data() + static_cast<std::size_t>(r) * layer.in;
    double acc = layer.b[r];
    for (int c = 0; c < layer.in; ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
}

double leaky(double v, double slope) { return v > 0.0 ? v : slope * v; }
double leaky_grad(double v, double slope) { return v > 0.0 ? 1.0 : slope; }

// Forward pass caching inputs/preactivations; the final layer is linear.
void mlp_forward(const Mlp& net, const std::vector<double>& input,
                 double slope, MlpCache& cache) {
  const std::size_t n = net.layers.size();
  cache.act.assign(n + 1, {});
  cache.pre.assign(n, {});
  cache.act[0] = input;
  for (std::size_t i = 0; i < n; ++i) {
    matvec(net.layers[i], cache.act[i], cache.pre[i]);
    if (i + 1 == n) {
      cache.act[i + 1] = cache.pre[i];
    } else {
      auto& a = cache.act[i + 1];
      a.resize(cache.pre[i].size());
      for (std::size_t k = 0; k < a.size(); ++k) a[k] = leaky(cache.pre[i][k], slope);
    }
  }
}

// Backpropagates d_out (gradient w.r.t. the final output). An optional extra
// gradient is injected at the last hidden activation, which is where the
// shared critic taps the actor trunks. Returns the gradient w.r.t. the input.
std::vector<double> mlp_backward(const Mlp& net, const MlpCache& cache,
                                 std::vector<double> d_act, double slope,
                                 const std::vector<double>* extra_last_hidden,
                                 Mlp& grad) {
  const int n = static_cast<int>(net.layers.size());
  for (int i = n - 1; i >= 0; --i) {
    const DenseLayer& layer = net.layers[i];
    DenseLayer& g = grad.layers[i];
    std::vector<double> d_pre(layer.out);
    if (i == n - 1) {
      d_pre = d_act;
    } else {
      for (int k = 0; k < layer.out; ++k) {
        d_pre[k] = d_act[k] * leaky_grad(cache.pre[i][k], slope);
      }
    }
    const auto& in_act = cache.act[i];
    for (int r = 0; r < layer.out; ++r) {
      double* grow = g.w.data() + static_cast<std::size_t>(r) * layer.in;
      for (int c = 0; c < layer.in; ++c) grow[c] += d_pre[r] * in_act[c];
      g.b[r] += d_pre[r];
    }
    std::vector<double> d_in(layer.in, 0.0);
    for (int r = 0; r < layer.out; ++r) {
      const double* row = layer.w.data() + static_cast<std::size_t>(r) * layer.in;
      for (int c = 0; c < layer.in; ++c) d_in[c] += row[c] * d_pre[r];
    }
    d_act = std::move(d_in);
    if (i == n - 1 && extra_last_hidden != nullptr) {
      for (std::size_t k = 0; k < d_act.size(); ++k) {
        d_act[k] += (*extra_last_hidden)[k];
      }
    }
  }
  return d_act;
}

Mlp make_mlp(int input, const std::vector<int>& hidden, int output,
             std::mt19937_64& rng) {
  std::vector<int> sizes;
  sizes.push_back(input);
  for (int h : hidden) {
    if (h <= 0) throw ConfigError("hidden layer width must be positive");
    sizes.push_back(h);
  }
  sizes.push_back(output);
  if (input <= 0 || output <= 0) {
    throw ConfigError("network input/output widths must be positive");
  }
  Mlp net;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    DenseLayer layer;
    layer.in = sizes[i];
    layer.out = sizes[i + 1];
    const double limit = std::sqrt(1.0 / static_cast<double>(layer.in));
    std::uniform_real_distribution<double> uni(-limit, limit);
    layer.w.resize(static_cast<std::size_t>(layer.in) * layer.out);
    for (auto& v : layer.w) v = uni(rng);
    layer.b.assign(layer.out, 0.0);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Mlp zero_like(const Mlp& net) {
  Mlp out;
  for (const auto& layer : net.layers) {
    DenseLayer g;
    g.in = layer.in;
    g.out = layer.out;
    g.w.assign(layer.w.size(), 0.0);
    g.b.assign(layer.b.size(), 0.0);
    out.layers.push_back(std::move(g));
  }
  return out;
}

const std::vector<double>& last_hidden_of(const MlpCache& cache) {
  // activation feeding the final (linear) layer
  return cache.act[cache.act.size() - 2];
}

}  // namespace

ArchConfig ArchConfig::for_session(const SessionConfig& cfg) {
  ArchConfig arch;
  arch.bm_input = kThroughputHistory + 3 * cfg.queue_length;
  arch.bm_output = cfg.queue_length + 1;
  arch.ba_input = kThroughputHistory + 6;
  arch.ba_output = cfg.levels();
  return arch;
}

std::size_t PolicyParameters::parameter_count() const {
  std::size_t n = 0;
  for (const Mlp* net : {&bm, &ba, &critic}) {
    for (const auto& layer : net->layers) n += layer.w.size() + layer.b.size();
  }
  return n;
}

PolicyParameters init_params(const ArchConfig& arch, std::uint64_t seed) {
  PolicyParameters params;
  params.arch = arch;
  std::mt19937_64 rng(seed);
  params.bm = make_mlp(arch.bm_input, arch.hidden, arch.bm_output, rng);
  params.ba = make_mlp(arch.ba_input, arch.hidden, arch.ba_output, rng);
  const int critic_in = 2 * arch.hidden.back();
  params.critic = make_mlp(critic_in, arch.critic_hidden, 1, rng);
  return params;
}

ParameterGrads zero_grads(const PolicyParameters& params) {
  return {zero_like(params.bm), zero_like(params.ba), zero_like(params.critic)};
}

ActionDistribution masked_softmax(const std::vector<double>& logits,
                                  const std::vector<bool>& mask) {
  double max_logit = kNegInf;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) max_logit = std::max(max_logit, logits[i]);
  }
  if (max_logit == kNegInf) throw StateError("masked_softmax: all atoms masked");
  ActionDistribution dist;
  dist.probs.assign(logits.size(), 0.0);
  dist.log_probs.assign(logits.size(), kNegInf);
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) z += std::exp(logits[i] - max_logit);
  }
  const double log_z = std::log(z);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    dist.log_probs[i] = logits[i] - max_logit - log_z;
    dist.probs[i] = std::exp(dist.log_probs[i]);
  }
  return dist;
}

ActorForward forward_actor(const Mlp& net, const std::vector<double>& input,
                           const std::vector<bool>& mask, double leaky_slope) {
  ActorForward fwd;
  mlp_forward(net, input, leaky_slope, fwd.cache);
  fwd.dist = masked_softmax(fwd.cache.act.back(), mask);
  return fwd;
}

double critic_value(const PolicyParameters& params,
                    const std::vector<double>& bm_hidden,
                    const std::vector<double>& ba_hidden, MlpCache* cache) {
  std::vector<double> joint;
  joint.reserve(bm_hidden.size() + ba_hidden.size());
  joint.insert(joint.end(), bm_hidden.begin(), bm_hidden.end());
  joint.insert(joint.end(), ba_hidden.begin(), ba_hidden.end());
  MlpCache local;
  MlpCache& c = cache != nullptr ? *cache : local;
  mlp_forward(params.critic, joint, params.arch.leaky_slope, c);
  return c.act.back()[0];
}

int sample_action(const ActionDistribution& dist, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u = uni(rng);
  double acc = 0.0;
  int last_valid = 0;
  for (std::size_t i = 0; i < dist.probs.size(); ++i) {
    if (dist.probs[i] <= 0.0) continue;
    last_valid = static_cast<int>(i);
    acc += dist.probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return last_valid;  // rounding tail
}

int argmax_action(const ActionDistribution& dist) {
  int best = 0;
  for (std::size_t i = 1; i < dist.probs.size(); ++i) {
    if (dist.probs[i] > dist.probs[best]) best = static_cast<int>(i);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

namespace {

// d(-log p[a])/d logits = p - onehot(a); masked entries stay exactly 0.
std::vector<double> cross_entropy_dlogits(const ActionDistribution& dist,
                                          int action) {
  std::vector<double> d(dist.probs.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (dist.probs[i] > 0.0) d[i] = dist.probs[i];
  }
  d[action] -= 1.0;
  return d;
}

double entropy_of(const ActionDistribution& dist) {
  double h = 0.0;
  for (double p : dist.probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

// dH/dlogit_i = -p_i (log p_i + H); zero on masked atoms.
std::vector<double> entropy_dlogits(const ActionDistribution& dist, double h) {
  std::vector<double> d(dist.probs.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double p = dist.probs[i];
    if (p > 0.0) d[i] = -p * (std::log(p) + h);
  }
  return d;
}

void check_finite(double loss, const char* what) {
  if (!std::isfinite(loss)) {
    throw NumericError(std::string(what) + " produced a non-finite loss");
  }
}

}  // namespace

LossStats il_loss(const PolicyParameters& params, const ILBatch& batch,
                  ParameterGrads* grads) {
  LossStats stats;
  const double slope = params.arch.leaky_slope;
  auto run_agent = [&](const Mlp& net, const std::vector<ILSample>& samples,
                       Mlp* grad, double& agent_loss) {
    for (const auto& sample : samples) {
      ActorForward fwd = forward_actor(net, sample.input, sample.mask, slope);
      const double logp = fwd.dist.log_probs[sample.expert_index];
      agent_loss += -logp;
      if (grad != nullptr) {
        auto d_logits = cross_entropy_dlogits(fwd.dist, sample.expert_index);
        mlp_backward(net, fwd.cache, std::move(d_logits), slope, nullptr, *grad);
      }
    }
  };
  run_agent(params.bm, batch.bm, grads ? &grads->bm : nullptr, stats.bm_policy);
  run_agent(params.ba, batch.ba, grads ? &grads->ba : nullptr, stats.ba_policy);
  stats.total = stats.bm_policy + stats.ba_policy;
  check_finite(stats.total, "imitation loss");
  return stats;
}

LossStats rl_loss(const PolicyParameters& params,
                  const std::vector<RLSample>& batch, const RLLossConfig& cfg,
                  ParameterGrads* grads) {
  LossStats stats;
  const double slope = params.arch.leaky_slope;
  const int hidden_width = params.arch.hidden.back();

  for (const auto& sample : batch) {
    ActorForward bm = forward_actor(params.bm, sample.bm_input, sample.bm_mask, slope);
    ActorForward ba;
    if (sample.has_ba) {
      const std::vector<bool> all(params.arch.ba_output, true);
      ba = forward_actor(params.ba, sample.ba_input, all, slope);
    }
    const std::vector<double> zeros(hidden_width, 0.0);
    const std::vector<double>& bm_hidden = last_hidden_of(bm.cache);
    const std::vector<double>& ba_hidden =
        sample.has_ba ? last_hidden_of(ba.cache) : zeros;
    MlpCache critic_cache;
    const double value = critic_value(params, bm_hidden, ba_hidden, &critic_cache);

    // Per-agent clipped surrogate plus entropy bonus on the policy logits.
    struct AgentTerm {
      const ActorForward* fwd;
      int action;
      double behavior_logp;
      double* policy_loss;
    };
    std::vector<AgentTerm> agents;
    agents.push_back({&bm, sample.bm_index, sample.bm_behavior_log_prob,
                      &stats.bm_policy});
    if (sample.has_ba) {
      agents.push_back({&ba, sample.ba_index, sample.ba_behavior_log_prob,
                        &stats.ba_policy});
    }

    bool skip = false;
    struct Prepared {
      std::vector<double> d_logits;
      const ActorForward* fwd;
      bool is_bm;
    };
    std::vector<Prepared> prepared;
    for (std::size_t k = 0; k < agents.size(); ++k) {
      const AgentTerm& agent = agents[k];
      const double logp_new = agent.fwd->dist.log_probs[agent.action];
      const double ratio = std::exp(logp_new - agent.behavior_logp);
      if (!std::isfinite(ratio)) {
        skip = true;
        break;
      }
      const double unclipped = ratio * sample.advantage;
      const double clipped =
          std::clamp(ratio, 1.0 - cfg.epsilon_clip, 1.0 + cfg.epsilon_clip) *
          sample.advantage;
      const double surrogate = std::min(unclipped, clipped);
      stats.surrogate += surrogate;
      *agent.policy_loss += -surrogate;

      const double h = entropy_of(agent.fwd->dist);
      stats.entropy += h;

      // d(-surrogate)/dlogp: active only on the unclipped branch.
      const double d_logp = (unclipped <= clipped) ? -ratio * sample.advantage : 0.0;
      std::vector<double> d_logits(agent.fwd->dist.probs.size(), 0.0);
      for (std::size_t i = 0; i < d_logits.size(); ++i) {
        const double p = agent.fwd->dist.probs[i];
        if (p > 0.0) d_logits[i] = d_logp * -p;
      }
      d_logits[agent.action] += d_logp;
      // entropy bonus: loss -= beta * H
      const auto dh = entropy_dlogits(agent.fwd->dist, h);
      for (std::size_t i = 0; i < d_logits.size(); ++i) {
        d_logits[i] -= cfg.beta_entropy * dh[i];
      }
      prepared.push_back({std::move(d_logits), agent.fwd, k == 0});
    }
    if (skip) {
      stats.skipped_samples += 1;
      continue;
    }

    const double verr = value - sample.value_target;
    stats.value += verr * verr;

    if (grads != nullptr) {
      // critic backward: d(value_coeff * verr^2)/dV = 2 c_v verr
      std::vector<double> d_value = {2.0 * cfg.value_coeff * verr};
      std::vector<double> d_joint = mlp_backward(
          params.critic, critic_cache, std::move(d_value), slope, nullptr,
          grads->critic);
      std::vector<double> d_bm_hidden(d_joint.begin(),
                                      d_joint.begin() + hidden_width);
      std::vector<double> d_ba_hidden(d_joint.begin() + hidden_width,
                                      d_joint.end());
      for (auto& p : prepared) {
        const std::vector<double>* extra = p.is_bm ? &d_bm_hidden : &d_ba_hidden;
        mlp_backward(p.is_bm ? params.bm : params.ba, p.fwd->cache,
                     std::move(p.d_logits), slope, extra,
                     p.is_bm ? grads->bm : grads->ba);
      }
      if (!sample.has_ba) {
        // the BA trunk saw no input; the critic's ba-half gradient stops here
        (void)d_ba_hidden;
      }
    }
  }
  stats.total = stats.bm_policy + stats.ba_policy -
                cfg.beta_entropy * stats.entropy + cfg.value_coeff * stats.value;
  check_finite(stats.total, "rl loss");
  return stats;
}

void apply_gradients(PolicyParameters& params, const ParameterGrads& grads,
                     double alpha) {
  auto apply = [alpha](Mlp& net, const Mlp& g) {
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      auto& layer = net.layers[i];
      const auto& gl = g.layers[i];
      for (std::size_t k = 0; k < layer.w.size(); ++k) layer.w[k] -= alpha * gl.w[k];
      for (std::size_t k = 0; k < layer.b.size(); ++k) layer.b[k] -= alpha * gl.b[k];
    }
  };
  apply(params.bm, grads.bm);
  apply(params.ba, grads.ba);
  apply(params.critic, grads.critic);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_hex_double(const std::string& s) {
  return std::strtod(s.c_str(), nullptr);
}

nlohmann::json mlp_to_json(const Mlp& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : net.layers) {
    nlohmann::json jl;
    jl["in"] = layer.in;
    jl["out"] = layer.out;
    nlohmann::json w = nlohmann::json::array();
    for (double v : layer.w) w.push_back(hex_double(v));
    nlohmann::json b = nlohmann::json::array();
    for (double v : layer.b) b.push_back(hex_double(v));
    jl["w"] = std::move(w);
    jl["b"] = std::move(b);
    layers.push_back(std::move(jl));
  }
  return layers;
}

Mlp mlp_from_json(const nlohmann::json& layers) {
  Mlp net;
  for (const auto& jl : layers) {
    DenseLayer layer;
    layer.in = jl.at("in").get<int>();
    layer.out = jl.at("out").get<int>();
    for (const auto& v : jl.at("w")) layer.w.push_back(parse_hex_double(v.get<std::string>()));
    for (const auto& v : jl.at("b")) layer.b.push_back(parse_hex_double(v.get<std::string>()));
    if (layer.w.size() != static_cast<std::size_t>(layer.in) * layer.out ||
        layer.b.size() != static_cast<std::size_t>(layer.out)) {
      throw ParseError("checkpoint: layer shape mismatch");
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

}  // namespace

void save_checkpoint(const PolicyParameters& params, const std::string& path) {
  nlohmann::json j;
  j["version"] = 1;
  j["arch"] = {{"bm_input", params.arch.bm_input},
               {"bm_output", params.arch.bm_output},
               {"ba_input", params.arch.ba_input},
               {"ba_output", params.arch.ba_output},
               {"hidden", params.arch.hidden},
               {"critic_hidden", params.arch.critic_hidden},
               {"leaky_slope", hex_double(params.arch.leaky_slope)}};
  j["bm"] = mlp_to_json(params.bm);
  j["ba"] = mlp_to_json(params.ba);
  j["critic"] = mlp_to_json(params.critic);
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint: " + path);
  out << j.dump(1) << '\n';
}

PolicyParameters load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint parse failure: " + std::string(e.what()));
  }
  if (j.at("version").get<int>() != 1) {
    throw ParseError("unsupported checkpoint version");
  }
  PolicyParameters params;
  const auto& arch = j.at("arch");
  params.arch.bm_input = arch.at("bm_input").get<int>();
  params.arch.bm_output = arch.at("bm_output").get<int>();
  params.arch.ba_input = arch.at("ba_input").get<int>();
  params.arch.ba_output = arch.at("ba_output").get<int>();
  params.arch.hidden = arch.at("hidden").get<std::vector<int>>();
  params.arch.critic_hidden = arch.at("critic_hidden").get<std::vector<int>>();
  params.arch.leaky_slope = parse_hex_double(arch.at("leaky_slope").get<std::string>());
  params.bm = mlp_from_json(j.at("bm"));
  params.ba = mlp_from_json(j.at("ba"));
  params.critic = mlp_from_json(j.at("critic"));
  return params;
}

// ---------------------------------------------------------------------------
// NeuralPolicy
// ---------------------------------------------------------------------------

NeuralPolicy::NeuralPolicy(const PolicyParameters& params, bool stochastic,
                           std::uint64_t seed, bool compute_value)
    : params_(params),
      stochastic_(stochastic),
      compute_value_(compute_value),
      rng_(seed) {}

void NeuralPolicy::begin_session(std::uint64_t seed) { rng_.seed(seed); }

Action NeuralPolicy::decide(const SessionState& state, const ActionMask& mask) {
  const ArchConfig expected = ArchConfig::for_session(state.cfg);
  if (expected.bm_input != params_.arch.bm_input ||
      expected.bm_output != params_.arch.bm_output ||
      expected.ba_input != params_.arch.ba_input ||
      expected.ba_output != params_.arch.ba_output) {
    throw ConfigError("checkpoint architecture does not match the session");
  }
  last_ = Annotations{};
  last_.bm_obs = build_bm_observation(state);
  last_.bm_mask.assign(mask.video_ok.begin(), mask.video_ok.end());
  last_.bm_mask.push_back(mask.sleep_ok);

  const auto bm_in = bm_input_vector(last_.bm_obs);
  ActorForward bm = forward_actor(params_.bm, bm_in, last_.bm_mask,
                                  params_.arch.leaky_slope);
  last_.bm_index = stochastic_ ? sample_action(bm.dist, rng_)
                               : argmax_action(bm.dist);
  last_.bm_log_prob = bm.dist.log_probs[last_.bm_index];

  const int sleep_index = state.cfg.queue_length;
  std::vector<double> ba_hidden(params_.arch.hidden.back(), 0.0);
  Action action = Action::Sleep();
  if (last_.bm_index != sleep_index) {
    last_.has_ba = true;
    last_.ba_obs = build_ba_observation(state, last_.bm_index);
    const auto ba_in =
        ba_input_vector(last_.ba_obs, state.cfg.ladder_kbps.back());
    const std::vector<bool> all(params_.arch.ba_output, true);
    ActorForward ba =
        forward_actor(params_.ba, ba_in, all, params_.arch.leaky_slope);
    last_.ba_index = stochastic_ ? sample_action(ba.dist, rng_)
                                 : argmax_action(ba.dist);
    last_.ba_log_prob = ba.dist.log_probs[last_.ba_index];
    action = Action::Download(last_.bm_index, last_.ba_index);
    if (compute_value_) ba_hidden = last_hidden_of(ba.cache);
  }
  if (compute_value_) {
    last_.value = critic_value(params_, last_hidden_of(bm.cache), ba_hidden);
  }
  return action;
}

void NeuralPolicy::annotate(TrajectoryStep& step) const {
  step.bm_log_prob = last_.bm_log_prob;
  step.ba_log_prob = last_.ba_log_prob;
  step.value = last_.value;
}

}  // namespace sabr
