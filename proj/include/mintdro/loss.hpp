#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mintdro/dist.hpp"
#include "mintdro/graph.hpp"

namespace mintdro {

/// Weights of the three loss terms: removed benign nodes, cut benign
/// edges, surviving malicious-to-benign edges. Must lie on the simplex.
class TradeoffWeights {
 public:
  TradeoffWeights(double a1, double a2, double a3) : a1_(a1), a2_(a2), a3_(a3) {
    if (!(a1 >= 0.0 && a2 >= 0.0 && a3 >= 0.0))
      throw std::invalid_argument("trade-off weights must be nonnegative");
    if (std::abs(a1 + a2 + a3 - 1.0) > 1e-12)
      throw std::invalid_argument("trade-off weights must sum to one");
  }

  static TradeoffWeights uniform() { return {1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0}; }

  double a1() const { return a1_; }
  double a2() const { return a2_; }
  double a3() const { return a3_; }

 private:
  double a1_, a2_, a3_;
};

struct LossMatrices {
  Eigen::MatrixXd Q;
  Eigen::VectorXd b;
  Eigen::MatrixXd B;  // diag(E[pi_bar])
  Eigen::MatrixXd P;  // A .* E[pi_bar pi_bar^T]
  Eigen::MatrixXd M;  // A .* E[pi pi_bar^T]
};

inline LossMatrices build_matrices(const Eigen::MatrixXd& adjacency,
                                   const Eigen::VectorXd& mu,
                                   const Eigen::MatrixXd& sigma,
                                   const TradeoffWeights& w) {
  if (adjacency.rows() != mu.size() || sigma.rows() != mu.size())
    throw std::invalid_argument("build_matrices: dimension mismatch");
  const auto cm = configuration_moments(mu, sigma);
  LossMatrices lm;
  lm.B = cm.benign_mean.asDiagonal();
  lm.P = adjacency.cwiseProduct(cm.benign_benign);
  lm.M = adjacency.cwiseProduct(cm.malicious_benign);
  lm.Q = (w.a3() / 2.0) * (lm.M + lm.M.transpose()) -
         (w.a2() / 2.0) * (lm.P + lm.P.transpose());
  lm.b = (w.a1() / 2.0) * (lm.B * Eigen::VectorXd::Ones(mu.size()));
  return lm;
}

inline LossMatrices build_matrices(const Graph& g, const MomentModel& model,
                                   const TradeoffWeights& w) {
  return build_matrices(g.adjacency(), model.mu, model.sigma, w);
}

/// Q written directly in terms of (mu, sigma), without going through P, M.
inline Eigen::MatrixXd closed_form_q(const Eigen::MatrixXd& adjacency,
                                     const Eigen::VectorXd& mu,
                                     const Eigen::MatrixXd& sigma,
                                     const TradeoffWeights& w) {
  const Eigen::Index n = mu.size();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd shifted = mu - ones;
  const double half = (w.a3() + 2.0 * w.a2()) / 2.0;
  const double both = w.a2() + w.a3();
  Eigen::MatrixXd inner = half * shifted * ones.transpose() +
                          half * ones * shifted.transpose() +
                          both * Eigen::MatrixXd::Ones(n, n) - both * sigma -
                          both * mu * mu.transpose();
  return adjacency.cwiseProduct(inner);
}

/// x^T Q x + 2 x^T b.
inline double expected_loss(const Eigen::VectorXd& x, const LossMatrices& lm) {
  if (x.size() != lm.b.size())
    throw std::invalid_argument("expected_loss: dimension mismatch");
  return x.dot(lm.Q * x) + 2.0 * x.dot(lm.b);
}

/// The per-configuration loss whose expectation is expected_loss:
/// a1 sum x_i pib_i - a2 sum A_ij x_i x_j pib_i pib_j + a3 sum A_ij x_i x_j pi_i pib_j.
inline double configuration_loss(const Eigen::VectorXd& x, const Eigen::VectorXd& pi,
                                 const Graph& g, const TradeoffWeights& w) {
  double l1 = 0.0, l2 = 0.0, l3 = 0.0;
  for (int i = 0; i < g.size(); ++i) l1 += x[i] * (1.0 - pi[i]);
  for (auto [i, j] : g.edges()) {
    const double xx = x[i] * x[j];
    l2 += 2.0 * xx * (1.0 - pi[i]) * (1.0 - pi[j]);
    l3 += xx * (pi[i] * (1.0 - pi[j]) + pi[j] * (1.0 - pi[i]));
  }
  return w.a1() * l1 - w.a2() * l2 + w.a3() * l3;
}

/// Count-based loss of a removal decision under a fixed configuration.
inline double interpretable_loss(const std::vector<char>& removed,
                                 const Configuration& cfg, const Graph& g,
                                 const TradeoffWeights& w) {
  if (static_cast<int>(removed.size()) != g.size() || cfg.pi.size() != g.size())
    throw std::invalid_argument("interpretable_loss: dimension mismatch");
  int removed_benign = 0, cut_benign = 0, exposed = 0;
  for (int i = 0; i < g.size(); ++i)
    if (removed[i] && !cfg.malicious(i)) ++removed_benign;
  for (auto [u, v] : g.edges()) {
    const bool mu_ = cfg.malicious(u), mv = cfg.malicious(v);
    if (!mu_ && !mv && removed[u] != removed[v]) ++cut_benign;
    if (!removed[u] && !removed[v] && mu_ != mv) ++exposed;
  }
  return w.a1() * removed_benign + w.a2() * cut_benign + w.a3() * exposed;
}

inline std::vector<char> removal_mask(const Eigen::VectorXd& x_binary) {
  std::vector<char> mask(x_binary.size());
  for (Eigen::Index i = 0; i < x_binary.size(); ++i) mask[i] = x_binary[i] > 0.0;
  return mask;
}

/// Sample mean of configuration_loss over independent Bernoulli draws.
inline double monte_carlo_loss(const Eigen::VectorXd& x, const Graph& g,
                               const MomentModel& model, const TradeoffWeights& w,
                               std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("monte_carlo_loss: samples must be positive");
  Rng rng = make_rng(seed);
  double sum = 0.0;
  for (std::size_t s = 0; s < samples; ++s)
    sum += configuration_loss(x, sample_configuration(model, rng).pi, g, w);
  return sum / static_cast<double>(samples);
}

}  // namespace mintdro
