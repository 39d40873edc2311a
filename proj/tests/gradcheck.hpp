#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "dtmac/nn.hpp"
#include "dtmac/random.hpp"

namespace dtmac::test {

// Scalar loss of a network on a fixed batch together with its output adjoint.
struct Loss {
  virtual ~Loss() = default;
  virtual double value(const Eigen::MatrixXd& out) const = 0;
  virtual Eigen::MatrixXd adjoint(const Eigen::MatrixXd& out) const = 0;
};

// 1/2 sum (Q - y)^2
struct SquaredLoss final : Loss {
  Eigen::MatrixXd target;
  double value(const Eigen::MatrixXd& out) const override { return 0.5 * (out - target).squaredNorm(); }
  Eigen::MatrixXd adjoint(const Eigen::MatrixXd& out) const override { return out - target; }
};

// -sum_i w_i log softmax(z_i)[a_i]
struct LogPolicyLoss final : Loss {
  std::vector<int> actions;
  std::vector<double> weights;
  double value(const Eigen::MatrixXd& z) const override {
    double v = 0.0;
    for (Eigen::Index i = 0; i < z.cols(); ++i) {
      const double top = std::max(z(0, i), z(1, i));
      const double lse = top + std::log(std::exp(z(0, i) - top) + std::exp(z(1, i) - top));
      v -= weights[std::size_t(i)] * (z(actions[std::size_t(i)], i) - lse);
    }
    return v;
  }
  Eigen::MatrixXd adjoint(const Eigen::MatrixXd& z) const override {
    Eigen::MatrixXd adj(2, z.cols());
    for (Eigen::Index i = 0; i < z.cols(); ++i) {
      const double top = std::max(z(0, i), z(1, i));
      const double e0 = std::exp(z(0, i) - top), e1 = std::exp(z(1, i) - top);
      const double p[2] = {e0 / (e0 + e1), e1 / (e0 + e1)};
      for (int a = 0; a < 2; ++a)
        adj(a, i) = -weights[std::size_t(i)] * ((a == actions[std::size_t(i)] ? 1.0 : 0.0) - p[a]);
    }
    return adj;
  }
};

struct GradCheckResult {
  double worst_relative_error = 0.0;
  int coordinates = 0;
};

// Central differences on `coordinates` random parameter indices.
inline GradCheckResult gradient_check(Mlp net, const Eigen::MatrixXd& inputs, const Loss& loss, int coordinates,
                                      double eps, Rng& rng) {
  Mlp::Trace trace;
  const Eigen::MatrixXd out = net.forward(inputs, trace);
  const Eigen::VectorXd grad = net.backward(trace, loss.adjoint(out));
  GradCheckResult r;
  auto& theta = net.parameters();
  for (int c = 0; c < coordinates; ++c) {
    const Eigen::Index i = Eigen::Index(rng() % std::uint64_t(theta.size()));
    const double saved = theta(i);
    theta(i) = saved + eps;
    const double up = loss.value(net.forward(inputs));
    theta(i) = saved - eps;
    const double down = loss.value(net.forward(inputs));
    theta(i) = saved;
    const double fd = (up - down) / (2 * eps);
    const double scale = std::max({std::abs(fd), std::abs(grad(i)), 1e-6});
    r.worst_relative_error = std::max(r.worst_relative_error, std::abs(fd - grad(i)) / scale);
    ++r.coordinates;
  }
  return r;
}

}  // namespace dtmac::test
