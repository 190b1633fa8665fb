#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "mintdro/sdp/conic_program.hpp"
#include "mintdro/sdp/jacobi.hpp"

using namespace mintdro::sdp;

namespace {

Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  return 0.5 * (a + a.transpose());
}

}  // namespace

TEST(Jacobi, ReconstructsAndIsOrthogonal) {
  std::mt19937_64 rng(1);
  for (int n : {1, 2, 5, 12, 30}) {
    const Eigen::MatrixXd a = random_symmetric(n, rng);
    const EigenDecomposition e = jacobi_eigen(a);
    EXPECT_LT((reconstruct(e) - a).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
    for (int i = 1; i < n; ++i) EXPECT_GE(e.values[i - 1], e.values[i]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(a);
    EXPECT_NEAR(e.values.minCoeff(), ref.eigenvalues().minCoeff(), 1e-10);
    EXPECT_NEAR(e.values.maxCoeff(), ref.eigenvalues().maxCoeff(), 1e-10);
  }
}

TEST(Jacobi, DiagonalAndRepeated) {
  Eigen::MatrixXd d = Eigen::Vector3d(3, -1, 3).asDiagonal();
  const EigenDecomposition e = jacobi_eigen(d);
  EXPECT_EQ(e.values, Eigen::Vector3d(3, 3, -1));
  EXPECT_EQ(e.sweeps, 0);
  EXPECT_NEAR(min_eigenvalue(Eigen::MatrixXd::Ones(4, 4)), 0.0, 1e-12);
}

TEST(Jacobi, WarmStartMatchesCold) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd a = random_symmetric(8, rng);
  const EigenDecomposition cold = jacobi_eigen(a);
  const Eigen::MatrixXd b = a + 1e-3 * random_symmetric(8, rng);
  const EigenDecomposition warm = jacobi_eigen_warm(b, cold.vectors);
  EXPECT_LT((reconstruct(warm) - b).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((warm.values - jacobi_eigen(b).values).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Jacobi, ProjectPsd) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd a = random_symmetric(6, rng);
  const Eigen::MatrixXd p = project_psd(a);
  EXPECT_GE(min_eigenvalue(p), -1e-12);
  // Nearest in Frobenius norm: the residual is negative semidefinite.
  EXPECT_LE(jacobi_eigen(a - p).values.maxCoeff(), 1e-10);
  EXPECT_LT((project_psd(p) - p).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Jacobi, RejectsNonSquare) {
  EXPECT_THROW(jacobi_eigen(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST(Packing, Isometry) {
  std::mt19937_64 rng(4);
  for (int n : {1, 3, 7}) {
    const Eigen::MatrixXd s = random_symmetric(n, rng), t = random_symmetric(n, rng);
    EXPECT_NEAR(pack(s).dot(pack(t)), s.cwiseProduct(t).sum(), 1e-12);
    EXPECT_LT((unpack(pack(s), n) - s).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(pack(s).size(), packed_size(n));
  }
  EXPECT_EQ(packed_index(2, 1), packed_index(1, 2));
  EXPECT_EQ(packed_index(0, 0), 0);
  EXPECT_EQ(packed_index(1, 1), 2);
}
