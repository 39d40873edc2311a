#include "dtmac/nn.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "dtmac/config_file.hpp"
#include "dtmac/error.hpp"

namespace dtmac {

void FeatureEncoding::encode_actor(const DeviceObservation& obs, int position, int agent,
                                   std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  out[obs.q] = 1.0;
  out[queue_levels] = obs.g;
  out[queue_levels + 1] = obs.d;
  out[queue_levels + 2 + position] = 1.0;
  out[queue_levels + 2 + frame + agent] = 1.0;
}

void FeatureEncoding::encode_critic(const SystemState& state, const JointAction& actions, int agent,
                                    std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const int block = queue_levels + 2;
  for (int k = 0; k < num_devices; ++k) {
    const auto& obs = state[k];
    out[k * block + obs.q] = 1.0;
    out[k * block + queue_levels] = obs.g;
    out[k * block + queue_levels + 1] = obs.d;
  }
  const int action_base = num_devices * block;
  for (int k = 0; k < num_devices; ++k)
    if (k != agent) out[action_base + k] = actions[k];
  out[action_base + num_devices + agent] = 1.0;
}

std::uint64_t FeatureEncoding::actor_key(const DeviceObservation& obs, int position, int agent) const {
  std::uint64_t key = static_cast<std::uint64_t>(obs.q);
  key = key * 2 + static_cast<std::uint64_t>(obs.g);
  key = key * 2 + static_cast<std::uint64_t>(obs.d);
  key = key * static_cast<std::uint64_t>(frame) + static_cast<std::uint64_t>(position);
  key = key * static_cast<std::uint64_t>(num_devices) + static_cast<std::uint64_t>(agent);
  return key;
}

std::uint64_t FeatureEncoding::critic_key(const SystemState& state, const JointAction& actions, int agent) const {
  const auto base = static_cast<std::uint64_t>(queue_levels) * 4;
  std::uint64_t key = 0;
  for (int k = 0; k < num_devices; ++k) {
    const auto& obs = state[k];
    key = key * base + (static_cast<std::uint64_t>(obs.q) * 4 + static_cast<std::uint64_t>(obs.g) * 2 +
                        static_cast<std::uint64_t>(obs.d));
  }
  for (int k = 0; k < num_devices; ++k) key = key * 2 + (k == agent ? 0 : actions[k]);
  return key * static_cast<std::uint64_t>(num_devices) + static_cast<std::uint64_t>(agent);
}

Mlp::Mlp(std::vector<int> layer_sizes, Rng& rng) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw ArgumentError("Mlp: need input and output sizes");
  std::size_t total = 0;
  for (int l = 0; l + 1 < static_cast<int>(sizes_.size()); ++l) {
    offsets_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l + 1]) * (static_cast<std::size_t>(sizes_[l]) + 1);
  }
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
  // Glorot-uniform weights, zero biases.
  for (int l = 0; l < num_layers(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    double* w = params_.data() + offsets_[l];
    for (int i = 0; i < in * out; ++i) w[i] = (2.0 * uniform01(rng) - 1.0) * limit;
  }
}

std::size_t Mlp::weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs) const {
  Trace trace;
  return forward(inputs, trace);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs, Trace& trace) const {
  if (inputs.rows() != input_size()) throw ArgumentError("Mlp::forward: input size mismatch");
  trace.activations.clear();
  trace.activations.reserve(sizes_.size());
  trace.activations.push_back(inputs);
  for (int l = 0; l < num_layers(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const Eigen::Map<const Eigen::MatrixXd> W(params_.data() + weight_offset(l), out, in);
    const Eigen::Map<const Eigen::VectorXd> b(params_.data() + weight_offset(l) + static_cast<std::size_t>(in) * out,
                                              out);
    Eigen::MatrixXd z = W * trace.activations.back();
    z.colwise() += b;
    // tanh through the vectorized exp; Eigen's double tanh is scalar.
    if (l + 1 < num_layers()) z = (2.0 / (1.0 + (-2.0 * z.array()).exp()) - 1.0).matrix();
    trace.activations.push_back(std::move(z));
  }
  return trace.activations.back();
}

Eigen::VectorXd Mlp::backward(const Trace& trace, const Eigen::MatrixXd& output_adjoint) const {
  if (trace.activations.size() != sizes_.size()) throw ArgumentError("Mlp::backward: no recorded forward pass");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd delta = output_adjoint;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const Eigen::MatrixXd& input = trace.activations[static_cast<std::size_t>(l)];
    Eigen::Map<Eigen::MatrixXd> gW(grad.data() + weight_offset(l), out, in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + weight_offset(l) + static_cast<std::size_t>(in) * out, out);
    gW.noalias() = delta * input.transpose();
    gb = delta.rowwise().sum();
    if (!gW.allFinite() || !gb.allFinite())
      throw NumericalError("non-finite gradient in layer " + std::to_string(l), l);
    if (l > 0) {
      const Eigen::Map<const Eigen::MatrixXd> W(params_.data() + weight_offset(l), out, in);
      Eigen::MatrixXd upstream = W.transpose() * delta;
      delta = upstream.array() * (1.0 - input.array().square());
    }
  }
  return grad;
}

PolicyParams make_policy(const FeatureEncoding& encoding, const std::vector<int>& hidden, Rng& rng) {
  std::vector<int> sizes{encoding.actor_size()};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(2);
  return PolicyParams{encoding, Mlp(sizes, rng)};
}

CriticParams make_critic(const FeatureEncoding& encoding, const std::vector<int>& hidden, Rng& rng) {
  std::vector<int> sizes{encoding.critic_size()};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(2);
  return CriticParams{encoding, Mlp(sizes, rng)};
}

std::array<double, 2> masked_softmax(const DeviceObservation& obs, double idle_logit, double transmit_logit) {
  if (obs.q == 0) return {1.0, 0.0};
  const double top = std::max(idle_logit, transmit_logit);
  const double e0 = std::exp(idle_logit - top);
  const double e1 = std::exp(transmit_logit - top);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

std::array<double, 2> policy_forward(const PolicyParams& params, const DeviceObservation& obs, int position,
                                     int agent) {
  Eigen::VectorXd x(params.encoding.actor_size());
  params.encoding.encode_actor(obs, position, agent, {x.data(), static_cast<std::size_t>(x.size())});
  const Eigen::MatrixXd z = params.network.forward(x);
  return masked_softmax(obs, z(0, 0), z(1, 0));
}

std::array<double, 2> critic_forward(const CriticParams& params, const SystemState& state, const JointAction& actions,
                                     int agent) {
  Eigen::VectorXd x(params.encoding.critic_size());
  params.encoding.encode_critic(state, actions, agent, {x.data(), static_cast<std::size_t>(x.size())});
  const Eigen::MatrixXd q = params.network.forward(x);
  return {q(0, 0), q(1, 0)};
}

NeuralPolicy::NeuralPolicy(PolicyParams params) : params_(std::move(params)) {
  const auto& enc = params_.encoding;
  const int n = enc.queue_levels * 4 * enc.frame * enc.num_devices;
  Eigen::MatrixXd inputs(enc.actor_size(), n);
  std::vector<DeviceObservation> obs_of(static_cast<std::size_t>(n));
  for (int q = 0; q < enc.queue_levels; ++q)
    for (int g = 0; g < 2; ++g)
      for (int d = 0; d < 2; ++d)
        for (int p = 0; p < enc.frame; ++p)
          for (int k = 0; k < enc.num_devices; ++k) {
            const DeviceObservation obs{q, g, d};
            const auto key = static_cast<Eigen::Index>(enc.actor_key(obs, p, k));
            enc.encode_actor(obs, p, k, {inputs.col(key).data(), static_cast<std::size_t>(inputs.rows())});
            obs_of[static_cast<std::size_t>(key)] = obs;
          }
  const Eigen::MatrixXd logits = params_.network.forward(inputs);
  cache_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) cache_[static_cast<std::size_t>(i)] = masked_softmax(obs_of[static_cast<std::size_t>(i)], logits(0, i), logits(1, i))[1];
}

double NeuralPolicy::transmit_probability(const DeviceObservation& obs, int t, int agent) const {
  const auto& enc = params_.encoding;
  return cache_[enc.actor_key(obs, t % enc.frame, agent)];
}

void optimizer_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
                    const AdamConfig& config) {
  if (grads.size() != params.size()) throw ArgumentError("optimizer_step: gradient shape mismatch");
  if (state.first_moment.size() != params.size()) {
    state.first_moment = Eigen::VectorXd::Zero(params.size());
    state.second_moment = Eigen::VectorXd::Zero(params.size());
    state.steps = 0;
  }
  ++state.steps;
  state.first_moment = config.beta1 * state.first_moment + (1.0 - config.beta1) * grads;
  state.second_moment = config.beta2 * state.second_moment + (1.0 - config.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.steps));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.steps));
  params.array() -= config.learning_rate * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + config.epsilon);
}

void save_network(std::ostream& out, const char* kind, const FeatureEncoding& encoding, const Mlp& net) {
  out << "dtmac-tensors 1\n";
  out << "kind " << kind << '\n';
  out << "encoding " << encoding.num_devices << ' ' << encoding.queue_levels << ' ' << encoding.frame << '\n';
  out << "layers " << net.layer_sizes().size();
  for (const int s : net.layer_sizes()) out << ' ' << s;
  out << '\n';
  out << "params " << net.parameters().size() << '\n';
  for (Eigen::Index i = 0; i < net.parameters().size(); ++i) out << format_double(net.parameters()(i)) << '\n';
}

void load_network(std::istream& in, const char* kind, FeatureEncoding& encoding, Mlp& net) {
  auto expect = [&in](const std::string& word) {
    std::string got;
    if (!(in >> got) || got != word) throw ConfigError("tensor file: expected '" + word + "', got '" + got + "'");
  };
  expect("dtmac-tensors");
  int version = 0;
  if (!(in >> version) || version != 1) throw ConfigError("tensor file: unsupported version");
  expect("kind");
  std::string got_kind;
  in >> got_kind;
  if (got_kind != kind) throw ConfigError("tensor file: expected kind " + std::string(kind) + ", got " + got_kind);
  expect("encoding");
  in >> encoding.num_devices >> encoding.queue_levels >> encoding.frame;
  expect("layers");
  std::size_t n_layers = 0;
  in >> n_layers;
  if (!in || n_layers < 2 || n_layers > 64) throw ConfigError("tensor file: bad layer count");
  std::vector<int> sizes(n_layers);
  for (auto& s : sizes) in >> s;
  expect("params");
  Eigen::Index count = 0;
  in >> count;
  Rng dummy(0);
  net = Mlp(sizes, dummy);
  if (!in || count != net.parameters().size()) throw ConfigError("tensor file: parameter count does not match layers");
  for (Eigen::Index i = 0; i < count; ++i) {
    std::string token;
    if (!(in >> token)) throw ConfigError("tensor file: truncated parameters");
    net.parameters()(i) = std::stod(token);
  }
  if (!net.parameters().allFinite()) throw ConfigError("tensor file: non-finite parameter");
}

void save_policy(std::ostream& out, const PolicyParams& params) {
  save_network(out, "actor", params.encoding, params.network);
}

PolicyParams load_policy(std::istream& in) {
  PolicyParams params;
  load_network(in, "actor", params.encoding, params.network);
  if (params.network.input_size() != params.encoding.actor_size() || params.network.output_size() != 2)
    throw ConfigError("tensor file: actor shape does not match its encoding");
  return params;
}

void save_critic(std::ostream& out, const CriticParams& params) {
  save_network(out, "critic", params.encoding, params.network);
}

CriticParams load_critic(std::istream& in) {
  CriticParams params;
  load_network(in, "critic", params.encoding, params.network);
  if (params.network.input_size() != params.encoding.critic_size() || params.network.output_size() != 2)
    throw ConfigError("tensor file: critic shape does not match its encoding");
  return params;
}

}  // namespace dtmac
