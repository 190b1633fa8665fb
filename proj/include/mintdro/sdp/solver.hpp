#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "mintdro/sdp/conic_program.hpp"
#include "mintdro/sdp/jacobi.hpp"

namespace mintdro::sdp {

enum class SolveStatus { optimal, max_iters, infeasible_suspect };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::infeasible_suspect: return "infeasible_suspect";
  }
  return "?";
}

struct SolverOptions {
  double eps_abs = 1e-5;
  double eps_rel = 1e-5;
  int max_iters = 50000;
  double rho = 1.0;
  // Accepted for interface stability; the iteration starts from zero and
  // involves no randomness.
  std::uint64_t seed = 0;
  int check_every = 10;
};

struct ConicSolution {
  Eigen::VectorXd primal;  // packed, cone-feasible
  Eigen::VectorXd dual_eq;    // multipliers of A v = b
  Eigen::VectorXd dual_cone;  // z in the dual cone
  double objective = 0.0;
  double dual_objective = 0.0;
  SolveStatus status = SolveStatus::max_iters;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;

  bool optimal() const { return status == SolveStatus::optimal; }

  Eigen::MatrixXd matrix(const ConicProgram& p, int b) const {
    const Block& blk = p.block(b);
    return unpack(primal.segment(blk.offset, blk.size), blk.dim);
  }
  Eigen::VectorXd vector(const ConicProgram& p, int b) const {
    const Block& blk = p.block(b);
    return primal.segment(blk.offset, blk.size);
  }
  double scalar(const ConicProgram& p, int b, int i = 0) const {
    return primal[p.var(b, i)];
  }
};

namespace detail {

struct Residuals {
  double primal, dual, gap, pobj, dobj;
  double primal_tol, dual_tol, gap_tol;
  bool converged() const {
    return primal <= primal_tol && dual <= dual_tol && gap <= gap_tol;
  }
  double badness() const {
    return std::max({primal / primal_tol, dual / dual_tol, gap / gap_tol});
  }
};

// Residuals of (s, nu, z) computed from the problem data alone.
inline Residuals evaluate(const ConicProgram& p, const Eigen::SparseMatrix<double>& a,
                          const Eigen::VectorXd& b, const Eigen::VectorXd& s,
                          const Eigen::VectorXd& nu, const Eigen::VectorXd& z,
                          const SolverOptions& opt) {
  const Eigen::VectorXd& c = p.objective();
  Residuals r{};
  const Eigen::VectorXd as = a * s;
  r.primal = (as - b).norm();
  const Eigen::VectorXd atnu = a.transpose() * nu;
  r.dual = (c + atnu - z).norm();
  r.pobj = c.dot(s);
  r.dobj = -b.dot(nu);
  for (const Block& blk : p.blocks()) {
    if (blk.kind != ConeKind::box) continue;
    for (int i = 0; i < blk.size; ++i) {
      const double zi = z[blk.offset + i];
      r.dobj += std::min(zi * blk.lo, zi * blk.hi);
    }
  }
  r.gap = std::abs(r.pobj - r.dobj);
  r.primal_tol = opt.eps_abs + opt.eps_rel * std::max(b.norm(), as.norm());
  r.dual_tol = opt.eps_abs + opt.eps_rel * std::max({c.norm(), atnu.norm(), z.norm()});
  r.gap_tol = opt.eps_abs + opt.eps_rel * std::max({1.0, std::abs(r.pobj), std::abs(r.dobj)});
  return r;
}

}  // namespace detail

/// Operator-splitting solver for ConicProgram.
///
/// Iterates on  min c^T v + I_K(s)  s.t.  A v = b,  v = s:
///   v <- affine projection of (s - u - c/rho)   (factorization of A A^T cached)
///   s <- Pi_K(v + u)                             (eigen-clipping per psd block)
///   u <- u + v - s
/// Dual estimates are nu = rho * eta from the affine step and z = -rho * u.
inline ConicSolution solve(const ConicProgram& p, const SolverOptions& opt = {}) {
  if (!(opt.rho > 0.0)) throw std::invalid_argument("solve: rho must be positive");
  const int nv = p.num_vars();
  const int m = p.num_constraints();
  const Eigen::SparseMatrix<double> a = p.constraint_matrix();
  const Eigen::VectorXd b =
      Eigen::Map<const Eigen::VectorXd>(p.rhs().data(), static_cast<Eigen::Index>(m));
  const Eigen::VectorXd& c = p.objective();

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> aat;
  if (m > 0) {
    Eigen::SparseMatrix<double> gram = a * a.transpose();
    aat.compute(gram);
    if (aat.info() != Eigen::Success || (aat.vectorD().array() <= 1e-14).any()) {
      // Rank-deficient constraints: regularize slightly.
      Eigen::SparseMatrix<double> eye(m, m);
      eye.setIdentity();
      gram += 1e-10 * eye;
      aat.compute(gram);
      if (aat.info() != Eigen::Success)
        throw std::runtime_error("solve: cannot factor constraint Gram matrix");
    }
  }

  std::vector<Eigen::MatrixXd> warm(p.blocks().size());
  for (std::size_t k = 0; k < p.blocks().size(); ++k)
    if (p.blocks()[k].kind == ConeKind::psd)
      warm[k] = Eigen::MatrixXd::Identity(p.blocks()[k].dim, p.blocks()[k].dim);

  auto project = [&](Eigen::VectorXd& y) {
    for (std::size_t k = 0; k < p.blocks().size(); ++k) {
      const Block& blk = p.blocks()[k];
      auto seg = y.segment(blk.offset, blk.size);
      switch (blk.kind) {
        case ConeKind::free: break;
        case ConeKind::nonneg: seg = seg.cwiseMax(0.0); break;
        case ConeKind::box: seg = seg.cwiseMax(blk.lo).cwiseMin(blk.hi); break;
        case ConeKind::psd: {
          const Eigen::MatrixXd mat = unpack(seg, blk.dim);
          EigenDecomposition e = jacobi_eigen_warm(mat, warm[k]);
          warm[k] = e.vectors;
          seg = pack(project_psd(e));
          break;
        }
      }
    }
  };

  Eigen::VectorXd s = Eigen::VectorXd::Zero(nv);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(nv);
  Eigen::VectorXd v(nv), w(nv), nu = Eigen::VectorXd::Zero(m);

  ConicSolution best;
  double best_badness = std::numeric_limits<double>::infinity();
  bool diverging = false;
  const int check_every = std::max(1, opt.check_every);

  int it = 0;
  while (it < opt.max_iters) {
    ++it;
    w = s - u - c / opt.rho;
    if (m > 0) {
      const Eigen::VectorXd eta = aat.solve(a * w - b);
      v = w - a.transpose() * eta;
      nu = opt.rho * eta;
    } else {
      v = w;
    }
    Eigen::VectorXd shifted = v + u;
    project(shifted);
    s = std::move(shifted);
    u += v - s;

    if (it % check_every == 0 || it == opt.max_iters) {
      const Eigen::VectorXd z = -opt.rho * u;
      const auto r = detail::evaluate(p, a, b, s, nu, z, opt);
      const double bad = r.badness();
      if (bad < best_badness || r.converged()) {
        best_badness = bad;
        best.primal = s;
        best.dual_eq = nu;
        best.dual_cone = z;
        best.iterations = it;
      }
      if (r.converged()) break;
      if (!std::isfinite(bad) || z.norm() > 1e12) {
        diverging = true;
        break;
      }
    }
  }

  // Final report, recomputed from the stored iterate.
  const auto r = detail::evaluate(p, a, b, best.primal, best.dual_eq, best.dual_cone, opt);
  best.objective = r.pobj;
  best.dual_objective = r.dobj;
  best.primal_residual = r.primal;
  best.dual_residual = r.dual;
  best.gap = r.gap;
  if (r.converged())
    best.status = SolveStatus::optimal;
  else if (diverging)
    best.status = SolveStatus::infeasible_suspect;
  else
    best.status = SolveStatus::max_iters;
  return best;
}

}  // namespace mintdro::sdp
