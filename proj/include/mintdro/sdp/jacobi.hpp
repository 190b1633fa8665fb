#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace mintdro::sdp {

struct EigenDecomposition {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns, orthonormal
  int sweeps = 0;
};

namespace detail {

inline double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i) s += 2.0 * a(i, j) * a(i, j);
  return std::sqrt(s);
}

// Cyclic-by-row Jacobi sweeps on `a` (overwritten, becomes ~diagonal),
// accumulating rotations into the columns of `v`.
inline int jacobi_sweeps(Eigen::MatrixXd& a, Eigen::MatrixXd& v, double frob,
                         int max_sweeps) {
  const Eigen::Index n = a.rows();
  const double stop = 1e-12 * frob;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    if (off_diagonal_norm(a) <= stop) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p), aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- J^T A J with J the (p,q) rotation.
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  return sweep;
}

inline EigenDecomposition sorted(const Eigen::MatrixXd& a, const Eigen::MatrixXd& v,
                                 int sweeps) {
  const Eigen::Index n = a.rows();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
  EigenDecomposition out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  out.sweeps = sweeps;
  return out;
}

inline void check_symmetric(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols()) throw std::invalid_argument("jacobi_eigen: matrix is not square");
  const double tol = 1e-10 * std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("jacobi_eigen: matrix is not symmetric");
}

}  // namespace detail

inline constexpr int kMaxJacobiSweeps = 100;

/// Symmetric eigendecomposition S = V diag(values) V^T by cyclic Jacobi.
inline EigenDecomposition jacobi_eigen(const Eigen::MatrixXd& s) {
  detail::check_symmetric(s);
  Eigen::MatrixXd a = 0.5 * (s + s.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(s.rows(), s.cols());
  const int sweeps = detail::jacobi_sweeps(a, v, a.norm(), kMaxJacobiSweeps);
  return detail::sorted(a, v, sweeps);
}

/// Same result as jacobi_eigen, but starts from the basis `guess` (for
/// example the eigenvectors of a nearby matrix), which usually leaves only
/// one or two sweeps of work. `guess` must be orthogonal.
inline EigenDecomposition jacobi_eigen_warm(const Eigen::MatrixXd& s,
                                            const Eigen::MatrixXd& guess) {
  Eigen::MatrixXd a = guess.transpose() * (0.5 * (s + s.transpose())) * guess;
  a = 0.5 * (a + a.transpose()).eval();
  Eigen::MatrixXd v = guess;
  const int sweeps = detail::jacobi_sweeps(a, v, a.norm(), kMaxJacobiSweeps);
  return detail::sorted(a, v, sweeps);
}

inline Eigen::MatrixXd reconstruct(const EigenDecomposition& e) {
  return e.vectors * e.values.asDiagonal() * e.vectors.transpose();
}

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues clipped to 0.
inline Eigen::MatrixXd project_psd(const EigenDecomposition& e) {
  const Eigen::VectorXd clipped = e.values.cwiseMax(0.0);
  Eigen::MatrixXd out = e.vectors * clipped.asDiagonal() * e.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

inline Eigen::MatrixXd project_psd(const Eigen::MatrixXd& s) {
  return project_psd(jacobi_eigen(s));
}

inline double min_eigenvalue(const Eigen::MatrixXd& s) {
  return jacobi_eigen(s).values.minCoeff();
}

}  // namespace mintdro::sdp
