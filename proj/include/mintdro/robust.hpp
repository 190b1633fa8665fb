#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mintdro/calibration.hpp"
#include "mintdro/dist.hpp"
#include "mintdro/graph.hpp"
#include "mintdro/loss.hpp"
#include "mintdro/sdp/conic_program.hpp"
#include "mintdro/sdp/jacobi.hpp"
#include "mintdro/sdp/solver.hpp"

namespace mintdro {

/// Radii of the moment ambiguity set around the estimated model.
struct AmbiguityParams {
  double gamma1 = 1.0;  // mean ellipsoid radius
  double gamma2 = 2.0;  // second-moment scale
  bool calibrated = false;

  static AmbiguityParams uncalibrated() { return {1.0, 2.0, false}; }

  /// gamma1 just above beta(delta1); gamma2 from the covariance bound when
  /// that bound is valid, otherwise `fallback_gamma2`.
  static AmbiguityParams from_calibration(const CalibrationInput& c,
                                          double fallback_gamma2 = 2.0) {
    const double beta = calibrate_gamma1(c);
    const Gamma2Bound g2 = calibrate_gamma2(c);
    return {std::nextafter(beta, INFINITY), g2.valid ? std::nextafter(g2.value, INFINITY)
                                                     : fallback_gamma2,
            g2.valid};
  }

  void validate() const {
    if (!(gamma1 > 0.0) || !(gamma2 > 0.0))
      throw std::invalid_argument("ambiguity radii gamma1, gamma2 must be positive");
  }
};

/// f(mu) = mu^T R mu + mu^T r + z.
struct QuadraticInMu {
  Eigen::MatrixXd R;
  Eigen::VectorXd r;
  double z = 0.0;

  double operator()(const Eigen::VectorXd& mu) const {
    return mu.dot(R * mu) + mu.dot(r) + z;
  }
};

/// Coefficients of x^T Q(mu, Sigma_hat) x + 2 x^T b(mu) - t - mu^T K mu as a
/// quadratic in mu, for a fixed decision x.
inline QuadraticInMu quadratic_in_mu(const Eigen::MatrixXd& adjacency,
                                     const Eigen::VectorXd& x,
                                     const MomentModel& center,
                                     const TradeoffWeights& w, double t,
                                     const Eigen::MatrixXd& K) {
  const Eigen::Index n = adjacency.rows();
  if (x.size() != n || center.size() != n || K.rows() != n || K.cols() != n)
    throw std::invalid_argument("quadratic_in_mu: dimension mismatch");
  const double both = w.a2() + w.a3();
  const Eigen::MatrixXd xx = x * x.transpose();
  QuadraticInMu q;
  q.R = -both * adjacency.cwiseProduct(xx) - K;
  q.r = (w.a3() + 2.0 * w.a2()) * x.cwiseProduct(adjacency * x) - w.a1() * x;
  const Eigen::MatrixXd weighted = both * adjacency.cwiseProduct(center.sigma) + w.a2() * adjacency;
  q.z = w.a1() * x.sum() - x.dot(weighted * x) - t;
  return q;
}

struct TraceResiduals {
  double hadamard = 0.0;  // |A.*(xx^T) - A.*X|
  double diagonal = 0.0;  // |diag(x) A x - diag(A X)|
  double trace = 0.0;     // |x^T W x - ((a2+a3) Tr((A.*S)X) + a2 Tr(AX))|
};

/// Max-abs residuals of the three identities that let the lifted matrix X
/// stand in for xx^T. All three vanish when X = xx^T.
inline TraceResiduals trace_relations_check(const Eigen::VectorXd& x,
                                            const Eigen::MatrixXd& X, const Graph& g,
                                            const MomentModel& model,
                                            const TradeoffWeights& w) {
  const Eigen::MatrixXd& A = g.adjacency();
  TraceResiduals res;
  res.hadamard = (A.cwiseProduct(x * x.transpose()) - A.cwiseProduct(X)).cwiseAbs().maxCoeff();
  const Eigen::VectorXd lhs2 = x.cwiseProduct(A * x);
  const Eigen::VectorXd rhs2 = (A * X).diagonal();
  res.diagonal = (lhs2 - rhs2).cwiseAbs().maxCoeff();
  const double both = w.a2() + w.a3();
  const Eigen::MatrixXd as = A.cwiseProduct(model.sigma);
  const double lhs3 = x.dot((both * as + w.a2() * A) * x);
  const double rhs3 = both * (as * X).trace() + w.a2() * (A * X).trace();
  res.trace = std::abs(lhs3 - rhs3);
  return res;
}

/// Change of variables mu = mu_hat + L w with Sigma_hat = L L^T. In w the
/// support ellipsoid is the ball |w|^2 <= gamma1, which keeps the S-Lemma
/// block well scaled for a first-order solver.
struct Whitening {
  Eigen::MatrixXd L;
  Eigen::MatrixXd L_inv;
  Eigen::VectorXd mu_hat;
  Eigen::VectorXd w_hat;  // L^{-1} mu_hat
  Eigen::MatrixXd sigma;
  // Nonzeros of each row of L.
  std::vector<std::vector<std::pair<int, double>>> rows;

  explicit Whitening(const MomentModel& center) : mu_hat(center.mu), sigma(center.sigma) {
    const Eigen::Index n = center.size();
    if (center.sigma.rows() != n || center.sigma.cols() != n)
      throw std::invalid_argument("whitening: covariance has wrong shape");
    Eigen::LLT<Eigen::MatrixXd> llt(center.sigma);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("covariance of the center model is not positive definite");
    L = llt.matrixL();
    L_inv = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
    w_hat = L_inv * mu_hat;
    rows.resize(n);
    for (Eigen::Index k = 0; k < n; ++k)
      for (Eigen::Index a = 0; a <= k; ++a)
        if (L(k, a) != 0.0) rows[k].emplace_back(static_cast<int>(a), L(k, a));
  }

  int size() const { return static_cast<int>(mu_hat.size()); }
  /// K in mu coordinates from K~ = L^T K L.
  Eigen::MatrixXd unwhiten_k(const Eigen::MatrixXd& k_tilde) const {
    return L_inv.transpose() * k_tilde * L_inv;
  }
  Eigen::MatrixXd whiten_k(const Eigen::MatrixXd& k) const { return L.transpose() * k * L; }
};

/// Problem data for the relaxed removal problem, either robust (with the
/// S-Lemma block) or nominal.
///
/// Robust layout:
///   schur  psd(n+1)   [[X, x], [x^T, 1]], X_ii = 1
///   x      box(n)     [-1, 1], tied to the last column of schur
///   t      free(1)
///   k      psd(n)     K~ = L^T K L
///   lambda nonneg(1)
///   slack  psd(n+1)   T^T (lambda G - F) T with T = [[L, mu_hat], [0, 1]]
/// objective  t + Tr((gamma2 Sigma_hat + mu_hat mu_hat^T) K) = t + <gamma2 I + w_hat w_hat^T, K~>.
/// The nominal problem keeps only schur and x, with objective
/// Tr(Q X) + 2 b^T x.
struct DroSdp {
  sdp::ConicProgram program;
  bool robust = false;
  int n = 0;
  int schur = -1, x = -1, t = -1, k = -1, lambda = -1, slack = -1;
  // Robust only.
  std::optional<Whitening> whitening;
  double gamma1 = 0.0, gamma2 = 0.0;
  // Nominal only.
  Eigen::MatrixXd Q;
  Eigen::VectorXd b;

  Eigen::VectorXd x_value(const sdp::ConicSolution& s) const { return s.vector(program, x); }
  Eigen::MatrixXd lifted(const sdp::ConicSolution& s) const {
    return s.matrix(program, schur).topLeftCorner(n, n);
  }
  Eigen::MatrixXd schur_value(const sdp::ConicSolution& s) const {
    return s.matrix(program, schur);
  }
  double t_value(const sdp::ConicSolution& s) const { return s.scalar(program, t); }
  double lambda_value(const sdp::ConicSolution& s) const { return s.scalar(program, lambda); }
  Eigen::MatrixXd k_value(const sdp::ConicSolution& s) const {
    return whitening->unwhiten_k(s.matrix(program, k));
  }
};

namespace detail {

// Where the lifted quantities (x, X) come from: decision variables of the
// program, or fixed numbers folded into the right-hand side.
struct LiftedSource {
  int schur = -1;
  int x = -1;
  const Eigen::VectorXd* x_fixed = nullptr;
};

// Rows  slack_ij + F~_ij - lambda G~_ij = 0  for the whitened S-Lemma block.
inline void add_slemma_rows(sdp::ConicProgram& p, const Whitening& wh,
                            const Eigen::MatrixXd& adjacency, const Graph& g,
                            const TradeoffWeights& w, double gamma1, int slack, int t,
                            int k, int lambda, const LiftedSource& src) {
  const int n = wh.size();
  const int dim = n + 1;
  std::vector<int> row(sdp::packed_size(dim));
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i <= j; ++i) {
      const int r = p.add_equality(0.0);
      row[sdp::packed_index(i, j)] = r;
      p.add_entry_coef(r, slack, i, j, 1.0);
    }
  auto at = [&](int i, int j) { return row[sdp::packed_index(i, j)]; };
  const bool fixed = src.x_fixed != nullptr;

  // Adds coef * (term) to F~_ij where term is the lifted quantity
  // X_kl (kl >= 0) or x_i (x_index >= 0).
  auto emit_x_entry = [&](int r, int kk, int ll, double coef) {
    if (coef == 0.0) return;
    if (fixed)
      p.add_to_rhs(r, -coef * (*src.x_fixed)[kk] * (*src.x_fixed)[ll]);
    else
      p.add_entry_coef(r, src.schur, kk, ll, coef);
  };
  auto emit_x = [&](int r, int i, double coef) {
    if (coef == 0.0) return;
    if (fixed)
      p.add_to_rhs(r, -coef * (*src.x_fixed)[i]);
    else
      p.add_coef(r, p.var(src.x, i), coef);
  };

  const double both = w.a2() + w.a3();
  const double cut = 2.0 * w.a2() + w.a3();
  const Eigen::VectorXd& mu = wh.mu_hat;

  // Edge terms X_kl (k < l).
  for (auto [kk, ll] : g.edges()) {
    const double a_kl = adjacency(kk, ll);
    // ww block: -both * (L_k^T L_l + L_l^T L_k).
    for (auto [a, lka] : wh.rows[kk])
      for (auto [b, llb] : wh.rows[ll]) {
        const double v = -both * a_kl * lka * llb * (a == b ? 2.0 : 1.0);
        emit_x_entry(at(std::min(a, b), std::max(a, b)), kk, ll, v);
      }
    // w1 column.
    const double ck = a_kl * (-both * mu[ll] + 0.5 * cut);
    const double cl = a_kl * (-both * mu[kk] + 0.5 * cut);
    for (auto [a, lka] : wh.rows[kk]) emit_x_entry(at(a, n), kk, ll, ck * lka);
    for (auto [a, lla] : wh.rows[ll]) emit_x_entry(at(a, n), kk, ll, cl * lla);
    // corner.
    const double corner = a_kl * (-2.0 * both * mu[kk] * mu[ll] + cut * (mu[kk] + mu[ll]) -
                                  2.0 * both * wh.sigma(kk, ll) - 2.0 * w.a2());
    emit_x_entry(at(n, n), kk, ll, corner);
  }
  // Linear x terms.
  for (int i = 0; i < n; ++i) {
    for (auto [a, lia] : wh.rows[i]) emit_x(at(a, n), i, -0.5 * w.a1() * lia);
    emit_x(at(n, n), i, w.a1() * (1.0 - mu[i]));
  }
  // t enters the corner with coefficient -1.
  p.add_coef(at(n, n), p.var(t), -1.0);
  // K~ terms: F~ -= [I; w_hat^T] K~ [I, w_hat].
  const Eigen::VectorXd& wv = wh.w_hat;
  for (int b = 0; b < n; ++b)
    for (int a = 0; a <= b; ++a) {
      const bool diag = a == b;
      p.add_entry_coef(at(a, b), k, a, b, -1.0);
      if (diag) {
        p.add_entry_coef(at(a, n), k, a, a, -wv[a]);
        p.add_entry_coef(at(n, n), k, a, a, -wv[a] * wv[a]);
      } else {
        p.add_entry_coef(at(a, n), k, a, b, -wv[b]);
        p.add_entry_coef(at(b, n), k, a, b, -wv[a]);
        p.add_entry_coef(at(n, n), k, a, b, -2.0 * wv[a] * wv[b]);
      }
    }
  // -lambda G~ with G~ = diag(I, -gamma1).
  for (int i = 0; i < n; ++i) p.add_coef(at(i, i), p.var(lambda), -1.0);
  p.add_coef(at(n, n), p.var(lambda), gamma1);
}

inline void add_schur_block(DroSdp& d) {
  auto& p = d.program;
  const int n = d.n;
  d.schur = p.add_psd(n + 1, "schur");
  d.x = p.add_box(n, -1.0, 1.0, "x");
  for (int i = 0; i <= n; ++i) p.add_entry_coef(p.add_equality(1.0), d.schur, i, i, 1.0);
  for (int i = 0; i < n; ++i) {
    const int r = p.add_equality(0.0);
    p.add_coef(r, p.var(d.x, i), 1.0);
    p.add_entry_coef(r, d.schur, i, n, -1.0);
  }
}

inline void add_dual_blocks(DroSdp& d, const Whitening& wh, double gamma2) {
  auto& p = d.program;
  const int n = d.n;
  d.t = p.add_free(1, "t");
  d.k = p.add_psd(n, "k_whitened");
  d.lambda = p.add_nonneg(1, "lambda");
  d.slack = p.add_psd(n + 1, "slemma_slack");
  p.add_objective(p.var(d.t), 1.0);
  const Eigen::MatrixXd c_tilde =
      gamma2 * Eigen::MatrixXd::Identity(n, n) + wh.w_hat * wh.w_hat.transpose();
  p.add_objective_matrix(d.k, c_tilde);
}

}  // namespace detail

/// Relaxed robust problem: the lifted S-Lemma LMI plus the Schur block.
inline DroSdp build_dro_sdp(const Graph& g, const MomentModel& center,
                            const TradeoffWeights& w, const AmbiguityParams& amb) {
  amb.validate();
  if (center.size() != g.size()) throw std::invalid_argument("build_dro_sdp: dimension mismatch");
  DroSdp d;
  d.robust = true;
  d.n = g.size();
  d.gamma1 = amb.gamma1;
  d.gamma2 = amb.gamma2;
  d.whitening.emplace(center);
  detail::add_schur_block(d);
  detail::add_dual_blocks(d, *d.whitening, amb.gamma2);
  detail::add_slemma_rows(d.program, *d.whitening, g.adjacency(), g, w, amb.gamma1, d.slack,
                          d.t, d.k, d.lambda, {d.schur, d.x, nullptr});
  return d;
}

/// Relaxed nominal problem: min Tr(Q X) + 2 b^T x over the Schur block.
inline DroSdp build_mint_sdp(const Graph& g, const MomentModel& center,
                             const TradeoffWeights& w) {
  if (center.size() != g.size()) throw std::invalid_argument("build_mint_sdp: dimension mismatch");
  DroSdp d;
  d.n = g.size();
  const LossMatrices lm = build_matrices(g, center, w);
  d.Q = lm.Q;
  d.b = lm.b;
  detail::add_schur_block(d);
  auto& p = d.program;
  for (int j = 0; j < d.n; ++j)
    for (int i = 0; i <= j; ++i) {
      const double q = i == j ? lm.Q(i, i) : lm.Q(i, j) + lm.Q(j, i);
      if (q != 0.0) p.add_objective_entry(d.schur, i, j, q);
    }
  for (int i = 0; i < d.n; ++i) p.add_objective(p.var(d.x, i), 2.0 * lm.b[i]);
  return d;
}

/// [[R^, r^/2], [r^T/2, z^]] in the original mu coordinates, evaluated at
/// given (x, X, t, K). At X = xx^T it equals the quadratic_in_mu block.
inline Eigen::MatrixXd slemma_lhs(const Graph& g, const MomentModel& center,
                                  const TradeoffWeights& w, const Eigen::VectorXd& x,
                                  const Eigen::MatrixXd& X, double t,
                                  const Eigen::MatrixXd& K) {
  const int n = g.size();
  const Eigen::MatrixXd& A = g.adjacency();
  const double both = w.a2() + w.a3();
  const Eigen::MatrixXd R = -both * A.cwiseProduct(X) - K;
  const Eigen::VectorXd r = (2.0 * w.a2() + w.a3()) * (A * X).diagonal() - w.a1() * x;
  const double z = w.a1() * x.sum() -
                   (both * (A.cwiseProduct(center.sigma) * X).trace() + w.a2() * (A * X).trace()) -
                   t;
  Eigen::MatrixXd F(n + 1, n + 1);
  F.topLeftCorner(n, n) = 0.5 * (R + R.transpose());
  F.topRightCorner(n, 1) = 0.5 * r;
  F.bottomLeftCorner(1, n) = 0.5 * r.transpose();
  F(n, n) = z;
  return F;
}

/// [[S^-1, -S^-1 mu], [-mu^T S^-1, mu^T S^-1 mu - gamma1]] for the center.
inline Eigen::MatrixXd slemma_rhs(const MomentModel& center, double gamma1) {
  const int n = center.size();
  Eigen::LLT<Eigen::MatrixXd> llt(center.sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("covariance of the center model is not positive definite");
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::VectorXd inv_mu = inv * center.mu;
  Eigen::MatrixXd G(n + 1, n + 1);
  G.topLeftCorner(n, n) = 0.5 * (inv + inv.transpose());
  G.topRightCorner(n, 1) = -inv_mu;
  G.bottomLeftCorner(1, n) = -inv_mu.transpose();
  G(n, n) = center.mu.dot(inv_mu) - gamma1;
  return G;
}

struct InnerResult {
  double value = 0.0;  // t + Tr(C K) at an exactly feasible repaired point
  double solver_objective = 0.0;
  double t = 0.0;
  Eigen::MatrixXd K;
  double lambda = 0.0;
  sdp::SolveStatus status = sdp::SolveStatus::max_iters;
  int iterations = 0;
};

namespace detail {

// T^T (lambda G - F) T at fixed x with X = xx^T and t = 0, in whitened
// coordinates. Adding t to the corner entry gives the full slack.
inline Eigen::MatrixXd whitened_slack(const Whitening& wh, const Graph& g,
                                      const TradeoffWeights& w, const Eigen::VectorXd& x,
                                      const Eigen::MatrixXd& k_tilde, double lambda,
                                      double gamma1) {
  const int n = wh.size();
  const MomentModel center{wh.mu_hat, wh.sigma, MomentKind::estimated};
  const Eigen::MatrixXd F0 = slemma_lhs(g, center, w, x, x * x.transpose(), 0.0,
                                        Eigen::MatrixXd::Zero(n, n));
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n + 1, n + 1);
  T.topLeftCorner(n, n) = wh.L;
  T.topRightCorner(n, 1) = wh.mu_hat;
  T(n, n) = 1.0;
  Eigen::MatrixXd U(n + 1, n);
  U.topRows(n).setIdentity();
  U.bottomRows(1) = wh.w_hat.transpose();
  Eigen::MatrixXd S = U * k_tilde * U.transpose() - T.transpose() * F0 * T;
  S.diagonal().head(n).array() += lambda;
  S(n, n) -= lambda * gamma1;
  return 0.5 * (S + S.transpose());
}

// Smallest t with slack + t e e^T >= 0, or +inf if the leading block is
// not positive definite.
inline double minimal_t(const Eigen::MatrixXd& S) {
  const Eigen::Index n = S.rows() - 1;
  Eigen::LLT<Eigen::MatrixXd> llt(S.topLeftCorner(n, n));
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd s = S.topRightCorner(n, 1);
  return s.dot(llt.solve(s)) - S(n, n);
}

}  // namespace detail

/// Worst-case expected loss of a fixed decision x over the ambiguity set,
/// as the optimal value of the S-Lemma dual with X = xx^T.
///
/// The returned value comes from a repaired certificate: K is projected
/// onto the PSD cone, then lambda and t are re-chosen so that t is the
/// smallest value for which the LMI holds. So `value` is attained by an
/// exactly feasible dual point.
inline InnerResult inner_worst_case(const Eigen::VectorXd& x, const Graph& g,
                                    const MomentModel& center, const TradeoffWeights& w,
                                    const AmbiguityParams& amb,
                                    const sdp::SolverOptions& opt = {}) {
  amb.validate();
  const int n = g.size();
  if (x.size() != n || center.size() != n)
    throw std::invalid_argument("inner_worst_case: dimension mismatch");
  DroSdp d;
  d.robust = true;
  d.n = n;
  d.gamma1 = amb.gamma1;
  d.gamma2 = amb.gamma2;
  d.whitening.emplace(center);
  detail::add_dual_blocks(d, *d.whitening, amb.gamma2);
  detail::add_slemma_rows(d.program, *d.whitening, g.adjacency(), g, w, amb.gamma1, d.slack,
                          d.t, d.k, d.lambda, {-1, -1, &x});
  const sdp::ConicSolution sol = sdp::solve(d.program, opt);

  const Whitening& wh = *d.whitening;
  Eigen::MatrixXd k_tilde = sdp::project_psd(sol.matrix(d.program, d.k));
  double lambda = std::max(0.0, sol.scalar(d.program, d.lambda));
  const Eigen::MatrixXd c_tilde =
      amb.gamma2 * Eigen::MatrixXd::Identity(n, n) + wh.w_hat * wh.w_hat.transpose();

  // t*(lambda) is convex on the lambda range where the leading slack
  // block is positive definite; minimize it there by golden section in
  // log(lambda - lambda_floor).
  const Eigen::MatrixXd S0 = detail::whitened_slack(wh, g, w, x, k_tilde, 0.0, amb.gamma1);
  auto t_at = [&](double lam) {
    Eigen::MatrixXd S = S0;
    S.diagonal().head(n).array() += lam;
    S(n, n) -= lam * amb.gamma1;
    return detail::minimal_t(S);
  };
  const double floor = std::max(0.0, -sdp::min_eigenvalue(S0.topLeftCorner(n, n)));
  const double scale = 1.0 + std::max(floor, lambda);
  double best_lambda = lambda;
  double t = lambda > floor ? t_at(lambda) : std::numeric_limits<double>::infinity();
  {
    constexpr double kInvPhi = 0.6180339887498949;
    double lo = std::log(1e-12 * scale), hi = std::log(1e6 * scale);
    auto at = [&](double s) { return t_at(floor + std::exp(s)); };
    double a = hi - kInvPhi * (hi - lo), b = lo + kInvPhi * (hi - lo);
    double fa = at(a), fb = at(b);
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
      if (fa <= fb) {
        hi = b;
        b = a;
        fb = fa;
        a = hi - kInvPhi * (hi - lo);
        fa = at(a);
      } else {
        lo = a;
        a = b;
        fa = fb;
        b = lo + kInvPhi * (hi - lo);
        fb = at(b);
      }
    }
    const double cand = floor + std::exp(fa <= fb ? a : b);
    const double tc = t_at(cand);
    if (tc < t) {
      t = tc;
      best_lambda = cand;
    }
  }
  if (!std::isfinite(t)) throw std::runtime_error("inner_worst_case: could not repair certificate");
  lambda = best_lambda;

  InnerResult out;
  out.t = t;
  out.K = wh.unwhiten_k(k_tilde);
  out.lambda = lambda;
  out.value = t + (c_tilde.cwiseProduct(k_tilde)).sum();
  out.solver_objective = sol.objective;
  out.status = sol.status;
  out.iterations = sol.iterations;
  return out;
}

}  // namespace mintdro
