#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dtmac/policy.hpp"
#include "dtmac/random.hpp"
#include "dtmac/system.hpp"

namespace dtmac {

// Fixed-length real encodings of actor and critic inputs.
//
// Actor:  [one-hot q | g | d | one-hot (t mod F) | one-hot agent]
// Critic: [per device: one-hot q | g | d] [others' actions, own slot 0] [one-hot agent]
struct FeatureEncoding {
  int num_devices = 0;
  int queue_levels = 2;  // max Q_max + 1
  int frame = 10;        // F

  int actor_size() const { return queue_levels + 2 + frame + num_devices; }
  int critic_size() const { return num_devices * (queue_levels + 2) + 2 * num_devices; }

  void encode_actor(const DeviceObservation& obs, int position, int agent, std::span<double> out) const;
  void encode_critic(const SystemState& state, const JointAction& actions, int agent,
                     std::span<double> out) const;

  // Injective integer keys over the same inputs, used to deduplicate batches.
  std::uint64_t actor_key(const DeviceObservation& obs, int position, int agent) const;
  std::uint64_t critic_key(const SystemState& state, const JointAction& actions, int agent) const;

  bool operator==(const FeatureEncoding&) const = default;
};

// Feedforward network with tanh hidden layers and a linear output layer.
// Parameters live in one flat vector: per layer, W (out x in, column-major)
// followed by b.
class Mlp {
 public:
  struct Trace {
    std::vector<Eigen::MatrixXd> activations;  // [input, hidden..., output]
  };

  Mlp() = default;
  Mlp(std::vector<int> layer_sizes, Rng& rng);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  // Columns are samples.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs, Trace& trace) const;

  // Reverse-mode gradient of sum_{i,j} adjoint(i,j) * output(i,j) with
  // respect to the flat parameter vector. Throws NumericalError carrying the
  // layer index if a non-finite value appears.
  Eigen::VectorXd backward(const Trace& trace, const Eigen::MatrixXd& output_adjoint) const;

  bool operator==(const Mlp& other) const { return sizes_ == other.sizes_ && params_ == other.params_; }

 private:
  std::size_t weight_offset(int layer) const;

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd params_;
};

// Shared actor pi_v(a | o^k, t mod F, k) for all agents.
struct PolicyParams {
  FeatureEncoding encoding;
  Mlp network;

  bool operator==(const PolicyParams&) const = default;
};

// Centralized critic Q_w(s, a^{-k}, k) returning one value per own action.
struct CriticParams {
  FeatureEncoding encoding;
  Mlp network;

  bool operator==(const CriticParams&) const = default;
};

PolicyParams make_policy(const FeatureEncoding& encoding, const std::vector<int>& hidden, Rng& rng);
CriticParams make_critic(const FeatureEncoding& encoding, const std::vector<int>& hidden, Rng& rng);

// Masked softmax over {idle, transmit}: an empty buffer gives exactly {1, 0}.
std::array<double, 2> masked_softmax(const DeviceObservation& obs, double idle_logit, double transmit_logit);

std::array<double, 2> policy_forward(const PolicyParams& params, const DeviceObservation& obs, int position,
                                     int agent);

std::array<double, 2> critic_forward(const CriticParams& params, const SystemState& state,
                                     const JointAction& actions, int agent);

// The actor seen as a deployable per-device policy (p_t = t mod F).
class NeuralPolicy final : public DevicePolicy {
 public:
  explicit NeuralPolicy(PolicyParams params);
  double transmit_probability(const DeviceObservation& obs, int t, int agent) const override;
  const PolicyParams& params() const { return params_; }

 private:
  PolicyParams params_;
  std::vector<double> cache_;  // transmit probability per actor key
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  long steps = 0;
};

void optimizer_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
                    const AdamConfig& config);

// Text tensor format:
//   dtmac-tensors 1
//   kind <actor|critic>
//   encoding <K> <queue_levels> <frame>
//   layers <n> <size_0> ... <size_n-1>
//   params <count>
//   <one value per line, round-trip precision>
void save_network(std::ostream& out, const char* kind, const FeatureEncoding& encoding, const Mlp& net);
void load_network(std::istream& in, const char* kind, FeatureEncoding& encoding, Mlp& net);

void save_policy(std::ostream& out, const PolicyParams& params);
PolicyParams load_policy(std::istream& in);
void save_critic(std::ostream& out, const CriticParams& params);
CriticParams load_critic(std::istream& in);

}  // namespace dtmac
