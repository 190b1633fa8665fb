#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "mintdro/graph.hpp"
#include "mintdro/rng.hpp"

namespace mintdro {

/// Probability clip keeping Bernoulli variances away from zero.
inline constexpr double kProbClip = 1e-4;
/// Ridge added to every constructed covariance.
inline constexpr double kCovarianceRidge = 1e-6;

enum class MomentKind { estimated, evaluation };

/// Mean and covariance of the node-maliciousness distribution.
///
/// Plain aggregate: degenerate models (for example sigma = 0) are legal
/// inputs to the moment and loss algebra. Code that needs sigma^{-1}
/// checks positive definiteness itself.
struct MomentModel {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  MomentKind kind = MomentKind::estimated;

  int size() const { return static_cast<int>(mu.size()); }

  /// Independent-Bernoulli model: sigma = diag(mu .* (1 - mu)) + ridge * I.
  static MomentModel bernoulli(const Eigen::VectorXd& mu,
                               MomentKind kind = MomentKind::estimated,
                               double ridge = kCovarianceRidge) {
    MomentModel m;
    m.mu = mu;
    Eigen::VectorXd var = mu.array() * (1.0 - mu.array());
    m.sigma = var.asDiagonal();
    m.sigma.diagonal().array() += ridge;
    m.kind = kind;
    return m;
  }
};

struct Configuration {
  Eigen::VectorXd pi;

  Eigen::VectorXd pi_bar() const { return Eigen::VectorXd::Ones(pi.size()) - pi; }
  bool malicious(int i) const { return pi[i] > 0.5; }
};

struct BetaParams {
  double a = 1.0;
  double b = 1.0;

  /// Degenerate limits: a = inf is a point mass at 1, b = inf at 0.
  static BetaParams point_mass_one() {
    return {std::numeric_limits<double>::infinity(), 1.0};
  }
  static BetaParams point_mass_zero() {
    return {1.0, std::numeric_limits<double>::infinity()};
  }
  double mean() const {
    if (std::isinf(a)) return 1.0;
    if (std::isinf(b)) return 0.0;
    return a / (a + b);
  }
};

namespace detail {

inline void check_beta(const BetaParams& p) {
  if (!(p.a > 0.0) || !(p.b > 0.0) || (std::isinf(p.a) && std::isinf(p.b)))
    throw std::invalid_argument("beta parameters must be positive");
}

inline double draw_beta(const BetaParams& p, Rng& rng) {
  if (std::isinf(p.a)) return 1.0;
  if (std::isinf(p.b)) return 0.0;
  std::gamma_distribution<double> ga(p.a, 1.0), gb(p.b, 1.0);
  double x = ga(rng);
  double y = gb(rng);
  return x / (x + y);
}

inline double clip_probability(double p) {
  return std::clamp(p, kProbClip, 1.0 - kProbClip);
}

}  // namespace detail

/// Per-node maliciousness probabilities drawn from one of two beta laws,
/// standing in for a trained classifier applied to assigned features.
inline MomentModel simulate_moments(const Graph& g, const NodeSet& malicious_set,
                                    const BetaParams& benign,
                                    const BetaParams& malicious,
                                    std::uint64_t seed,
                                    MomentKind kind = MomentKind::estimated) {
  detail::check_beta(benign);
  detail::check_beta(malicious);
  const int n = g.size();
  std::vector<char> is_mal(n, 0);
  for (NodeId v : malicious_set) {
    if (v < 0 || v >= n)
      throw std::out_of_range("simulate_moments: malicious node out of range");
    is_mal[v] = 1;
  }
  Rng rng = make_rng(seed);
  Eigen::VectorXd mu(n);
  for (int i = 0; i < n; ++i)
    mu[i] = detail::clip_probability(
        detail::draw_beta(is_mal[i] ? malicious : benign, rng));
  return MomentModel::bernoulli(mu, kind);
}

/// Adds i.i.d. N(0, noise_std^2) to every mean, clips, and rebuilds the
/// Bernoulli covariance.
inline MomentModel perturb(const MomentModel& model, double noise_std,
                           std::uint64_t seed) {
  if (!(noise_std >= 0.0))
    throw std::invalid_argument("perturb: noise_std must be nonnegative");
  if (noise_std == 0.0) return MomentModel::bernoulli(model.mu, model.kind);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> noise(0.0, noise_std);
  Eigen::VectorXd mu(model.size());
  for (int i = 0; i < model.size(); ++i)
    mu[i] = detail::clip_probability(model.mu[i] + noise(rng));
  return MomentModel::bernoulli(mu, model.kind);
}

struct ConfigurationMoments {
  Eigen::VectorXd benign_mean;        // E[pi_bar]
  Eigen::MatrixXd benign_benign;      // E[pi_bar pi_bar^T]
  Eigen::MatrixXd malicious_benign;   // E[pi pi_bar^T]
};

inline ConfigurationMoments configuration_moments(const Eigen::VectorXd& mu,
                                                  const Eigen::MatrixXd& sigma) {
  const Eigen::Index n = mu.size();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  ConfigurationMoments cm;
  cm.benign_mean = ones - mu;
  cm.benign_benign = Eigen::MatrixXd::Ones(n, n) - ones * mu.transpose() -
                     mu * ones.transpose() + sigma + mu * mu.transpose();
  cm.malicious_benign = mu * ones.transpose() - sigma - mu * mu.transpose();
  return cm;
}

inline ConfigurationMoments configuration_moments(const MomentModel& model) {
  return configuration_moments(model.mu, model.sigma);
}

/// Independent Bernoulli(mu_i) draw.
inline Configuration sample_configuration(const MomentModel& model, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Configuration c;
  c.pi.resize(model.size());
  for (int i = 0; i < model.size(); ++i) c.pi[i] = u(rng) < model.mu[i] ? 1.0 : 0.0;
  return c;
}

inline Configuration sample_configuration(const MomentModel& model,
                                          std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return sample_configuration(model, rng);
}

struct ProbabilityTable {
  MomentModel estimated;
  MomentModel evaluation;
};

/// Reads `node,p_est,p_eval` rows keyed by graph label.
inline ProbabilityTable load_probability_csv(std::istream& in, const Graph& g) {
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  auto split = [&](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
  };
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  ++lineno;
  if (split(line) != std::vector<std::string>{"node", "p_est", "p_eval"})
    throw ParseError(lineno, "header must be node,p_est,p_eval");

  std::unordered_map<std::string, int> index;
  for (int v = 0; v < g.size(); ++v) index.emplace(g.label(v), v);
  const int n = g.size();
  Eigen::VectorXd est = Eigen::VectorXd::Constant(n, -1.0);
  Eigen::VectorXd eval = Eigen::VectorXd::Constant(n, -1.0);
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (cells.size() != 3) throw ParseError(lineno, "expected 3 columns");
    auto it = index.find(cells[0]);
    if (it == index.end()) throw ParseError(lineno, "unknown node '" + cells[0] + "'");
    double pe, pv;
    try {
      pe = std::stod(cells[1]);
      pv = std::stod(cells[2]);
    } catch (const std::exception&) {
      throw ParseError(lineno, "probability is not a number");
    }
    if (!(pe >= 0.0 && pe <= 1.0 && pv >= 0.0 && pv <= 1.0))
      throw ParseError(lineno, "probability outside [0,1]");
    est[it->second] = detail::clip_probability(pe);
    eval[it->second] = detail::clip_probability(pv);
  }
  for (int v = 0; v < n; ++v)
    if (est[v] < 0.0)
      throw ParseError(lineno, "no probability row for node '" + g.label(v) + "'");
  return {MomentModel::bernoulli(est, MomentKind::estimated),
          MomentModel::bernoulli(eval, MomentKind::evaluation)};
}

}  // namespace mintdro
