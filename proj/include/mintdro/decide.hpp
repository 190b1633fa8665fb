#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mintdro/dist.hpp"
#include "mintdro/graph.hpp"
#include "mintdro/loss.hpp"
#include "mintdro/rng.hpp"
#include "mintdro/robust.hpp"
#include "mintdro/sdp/jacobi.hpp"
#include "mintdro/sdp/solver.hpp"

namespace mintdro {

enum class Method { mint, mint_dro };

inline const char* to_string(Method m) { return m == Method::mint ? "mint" : "mint_dro"; }

inline Method parse_method(const std::string& s) {
  if (s == "mint") return Method::mint;
  if (s == "mint_dro" || s == "dro") return Method::mint_dro;
  throw std::invalid_argument("unknown method: " + s);
}

/// x_binary[i] = +1 means node i is removed.
struct RemovalDecision {
  Eigen::VectorXd x_relaxed;
  Eigen::VectorXd x_binary;
  NodeSet removed_set;
  Method method = Method::mint;
  double objective_relaxed = 0.0;
  sdp::SolveStatus status = sdp::SolveStatus::optimal;
  int iterations = 0;
};

inline NodeSet removed_nodes(const Eigen::VectorXd& x_binary) {
  NodeSet out;
  for (Eigen::Index i = 0; i < x_binary.size(); ++i)
    if (x_binary[i] > 0.0) out.push_back(static_cast<NodeId>(i));
  return out;
}

/// Sign rounding; exact zeros keep the node (-1).
inline Eigen::VectorXd round_sign(const Eigen::VectorXd& x) {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? 1.0 : -1.0;
  return out;
}

using Score = std::function<double(const Eigen::VectorXd&)>;

/// Hyperplane rounding of the lifted block [[X, x], [x^T, 1]].
///
/// The block is factored as V V^T; each trial draws a Gaussian direction r
/// and sets x_i = sign(<v_i, r>) * sign(<v_last, r>). The result is the
/// lowest-scoring of round_sign(x) and the trials, earliest on ties.
inline Eigen::VectorXd round_randomized(const Eigen::VectorXd& x, const Eigen::MatrixXd& X,
                                        int trials, const Score& score, std::uint64_t seed) {
  const Eigen::Index n = x.size();
  if (X.rows() != n || X.cols() != n) throw std::invalid_argument("round_randomized: X has wrong shape");
  if (trials < 0) throw std::invalid_argument("round_randomized: trials must be >= 0");
  Eigen::VectorXd best = round_sign(x);
  if (trials == 0) return best;
  double best_score = score(best);

  Eigen::MatrixXd Z(n + 1, n + 1);
  Z.topLeftCorner(n, n) = 0.5 * (X + X.transpose());
  Z.topRightCorner(n, 1) = x;
  Z.bottomLeftCorner(1, n) = x.transpose();
  Z(n, n) = 1.0;
  const sdp::EigenDecomposition e = sdp::jacobi_eigen(Z);
  if (e.values.minCoeff() < -1e-6)
    throw std::runtime_error("round_randomized: lifted block is not positive semidefinite");
  const Eigen::MatrixXd V = e.vectors * e.values.cwiseMax(0.0).cwiseSqrt().asDiagonal();

  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd r(n + 1), cand(n);
  for (int k = 0; k < trials; ++k) {
    for (Eigen::Index i = 0; i <= n; ++i) r[i] = gauss(rng);
    const Eigen::VectorXd proj = V * r;
    const double ref = proj[n] >= 0.0 ? 1.0 : -1.0;
    for (Eigen::Index i = 0; i < n; ++i) cand[i] = proj[i] * ref > 0.0 ? 1.0 : -1.0;
    const double s = score(cand);
    if (s < best_score) {
      best_score = s;
      best = cand;
    }
  }
  return best;
}

struct DecideOptions {
  sdp::SolverOptions solver;
  int rounding_trials = 100;
  std::uint64_t seed = 0;
};

/// Solves the relaxed problem for `method`, then rounds with
/// round_randomized scored by the expected loss under `center`.
inline RemovalDecision decide(Method method, const Graph& g, const MomentModel& center,
                              const TradeoffWeights& w, const AmbiguityParams& amb,
                              const DecideOptions& opt = {}) {
  const DroSdp d = method == Method::mint ? build_mint_sdp(g, center, w)
                                          : build_dro_sdp(g, center, w, amb);
  const sdp::ConicSolution sol = sdp::solve(d.program, opt.solver);
  RemovalDecision out;
  out.method = method;
  out.status = sol.status;
  out.iterations = sol.iterations;
  out.objective_relaxed = sol.objective;
  // x and X both come from the PSD Schur block, rescaled to unit diagonal
  // so the corner is exactly 1 and the block stays PSD.
  Eigen::MatrixXd Z = d.schur_value(sol);
  const Eigen::VectorXd inv_root = Z.diagonal().cwiseMax(1e-12).cwiseSqrt().cwiseInverse();
  Z = inv_root.asDiagonal() * Z * inv_root.asDiagonal();
  out.x_relaxed = Z.topRightCorner(d.n, 1).cwiseMax(-1.0).cwiseMin(1.0);
  const LossMatrices lm = build_matrices(g, center, w);
  const Score score = [&](const Eigen::VectorXd& xb) { return expected_loss(xb, lm); };
  out.x_binary = round_randomized(out.x_relaxed, Z.topLeftCorner(d.n, d.n), opt.rounding_trials,
                                  score, opt.seed);
  out.removed_set = removed_nodes(out.x_binary);
  return out;
}

struct EvaluationReport {
  double expected_loss_eval = 0.0;
  double interpretable_samples_mean = 0.0;
  double interpretable_stderr = 0.0;
};

inline EvaluationReport evaluate(const Eigen::VectorXd& x_binary, const MomentModel& eval_model,
                                 const Graph& g, const TradeoffWeights& w, int samples = 1000,
                                 std::uint64_t seed = 0) {
  if (samples < 1) throw std::invalid_argument("evaluate: samples must be >= 1");
  EvaluationReport r;
  r.expected_loss_eval = expected_loss(x_binary, build_matrices(g, eval_model, w));
  const std::vector<char> removed = removal_mask(x_binary);
  Rng rng = make_rng(seed);
  double sum = 0.0, sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double l = interpretable_loss(removed, sample_configuration(eval_model, rng), g, w);
    sum += l;
    sq += l * l;
  }
  r.interpretable_samples_mean = sum / samples;
  if (samples > 1) {
    const double var =
        std::max(0.0, (sq - samples * r.interpretable_samples_mean * r.interpretable_samples_mean) /
                          (samples - 1));
    r.interpretable_stderr = std::sqrt(var / samples);
  }
  return r;
}

inline EvaluationReport evaluate(const RemovalDecision& d, const MomentModel& eval_model,
                                 const Graph& g, const TradeoffWeights& w, int samples = 1000,
                                 std::uint64_t seed = 0) {
  return evaluate(d.x_binary, eval_model, g, w, samples, seed);
}

struct BruteForceResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
};

inline constexpr int kMaxBruteForceNodes = 20;

namespace detail {

inline Eigen::VectorXd binary_from_mask(int n, std::uint32_t mask) {
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = (mask >> i) & 1u ? 1.0 : -1.0;
  return x;
}

template <class F>
BruteForceResult enumerate_binary(int n, F&& value_of) {
  if (n < 1 || n > kMaxBruteForceNodes)
    throw std::invalid_argument("brute force enumeration needs 1 <= n <= 20");
  BruteForceResult best;
  const std::uint32_t count = 1u << n;
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    Eigen::VectorXd x = binary_from_mask(n, mask);
    const double v = value_of(x);
    if (v < best.value) {
      best.value = v;
      best.x = std::move(x);
    }
  }
  return best;
}

}  // namespace detail

/// Exact minimizer of x^T Q x + 2 b^T x over {-1,1}^n.
inline BruteForceResult brute_force_binary(const Graph& g, const MomentModel& model,
                                           const TradeoffWeights& w) {
  const LossMatrices lm = build_matrices(g, model, w);
  return detail::enumerate_binary(g.size(), [&](const Eigen::VectorXd& x) {
    return expected_loss(x, lm);
  });
}

/// Minimizer over {-1,1}^n of the worst-case expected loss, each candidate
/// scored by inner_worst_case.
inline BruteForceResult brute_force_robust(const Graph& g, const MomentModel& model,
                                           const TradeoffWeights& w, const AmbiguityParams& amb,
                                           const sdp::SolverOptions& opt = {}) {
  return detail::enumerate_binary(g.size(), [&](const Eigen::VectorXd& x) {
    return inner_worst_case(x, g, model, w, amb, opt).value;
  });
}

}  // namespace mintdro
