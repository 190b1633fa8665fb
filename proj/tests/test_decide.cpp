#include <gtest/gtest.h>

#include <random>

#include "mintdro/decide.hpp"
#include "oracles.hpp"

using namespace mintdro;

namespace {

const TradeoffWeights kUniform = TradeoffWeights::uniform();

double count_score(const Eigen::VectorXd& x) { return (x.array() > 0.0).count(); }

}  // namespace

TEST(Method, ParseAndPrint) {
  EXPECT_EQ(parse_method("mint"), Method::mint);
  EXPECT_EQ(parse_method("dro"), Method::mint_dro);
  EXPECT_STREQ(to_string(Method::mint_dro), "mint_dro");
  EXPECT_THROW(parse_method("robust"), std::invalid_argument);
}

TEST(Rounding, SignKeepsZeros) {
  EXPECT_EQ(round_sign(Eigen::Vector3d(0.2, 0.0, -0.4)), Eigen::Vector3d(1, -1, -1));
  EXPECT_EQ(removed_nodes(Eigen::Vector3d(1, -1, 1)), (NodeSet{0, 2}));
}

TEST(Rounding, OutputIsBinaryAndNoWorseThanSign) {
  std::mt19937_64 rng(40);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd v = oracle::random_probabilities(6, rng).array() * 2.0 - 1.0;
    Eigen::MatrixXd Z = Eigen::MatrixXd::Identity(7, 7);
    Z.topRightCorner(6, 1) = 0.3 * v;
    Z.bottomLeftCorner(1, 6) = 0.3 * v.transpose();
    const Eigen::VectorXd x = Z.topRightCorner(6, 1);
    const Eigen::VectorXd r = round_randomized(x, Z.topLeftCorner(6, 6), 50, count_score, trial);
    for (int i = 0; i < 6; ++i) EXPECT_TRUE(r[i] == 1.0 || r[i] == -1.0);
    EXPECT_LE(count_score(r), count_score(round_sign(x)));
    EXPECT_EQ(r, round_randomized(x, Z.topLeftCorner(6, 6), 50, count_score, trial));
  }
}

TEST(Rounding, RankOneRecoversVertex) {
  const Eigen::Vector4d x(1, -1, -1, 1);
  const Eigen::VectorXd r = round_randomized(x, x * x.transpose(), 20,
                                             [](const Eigen::VectorXd&) { return 0.0; }, 3);
  EXPECT_EQ(r, x);
}

TEST(Rounding, ZeroTrialsIsSign) {
  const Eigen::Vector2d x(0.5, -0.5);
  EXPECT_EQ(round_randomized(x, Eigen::Matrix2d::Identity(), 0, count_score, 1), round_sign(x));
}

TEST(Rounding, RejectsBadInput) {
  const Eigen::Vector2d x(0.5, -0.5);
  EXPECT_THROW(round_randomized(x, Eigen::Matrix3d::Identity(), 5, count_score, 1), std::invalid_argument);
  EXPECT_THROW(round_randomized(x, Eigen::Matrix2d::Identity(), -1, count_score, 1), std::invalid_argument);
  Eigen::Matrix2d bad;
  bad << 1, 5, 5, 1;
  EXPECT_THROW(round_randomized(x, bad, 5, count_score, 1), std::runtime_error);
}

TEST(Decide, BenignGraphRemovesNobody) {
  Graph g = generate_ba(10, 2, 1);
  const MomentModel c = MomentModel::bernoulli(Eigen::VectorXd::Constant(10, 0.01));
  for (Method m : {Method::mint, Method::mint_dro}) {
    const RemovalDecision d = decide(m, g, c, kUniform, {1.0, 2.0, false});
    EXPECT_TRUE(d.removed_set.empty()) << to_string(m);
    EXPECT_EQ(d.method, m);
  }
}

TEST(Decide, MaliciousHubIsRemoved) {
  // Star with a near-certainly malicious centre.
  std::vector<Edge> e;
  for (int i = 1; i < 7; ++i) e.emplace_back(0, i);
  Graph g(7, e);
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(7, 0.02);
  mu[0] = 0.98;
  const MomentModel c = MomentModel::bernoulli(mu);
  for (Method m : {Method::mint, Method::mint_dro})
    EXPECT_EQ(decide(m, g, c, kUniform, {1.0, 2.0, false}).removed_set, (NodeSet{0})) << to_string(m);
}

TEST(Decide, MintMatchesBruteForceOnSmallGraphs) {
  std::mt19937_64 rng(41);
  int matched = 0;
  for (int trial = 0; trial < 6; ++trial) {
    Graph g = oracle::random_graph(7, 0.4, rng);
    const MomentModel c = MomentModel::bernoulli(oracle::random_probabilities(7, rng));
    const RemovalDecision d = decide(Method::mint, g, c, kUniform, {}, {{}, 100, 5});
    const BruteForceResult bf = brute_force_binary(g, c, kUniform);
    const LossMatrices lm = build_matrices(g, c, kUniform);
    EXPECT_GE(expected_loss(d.x_binary, lm), bf.value - 1e-12);
    EXPECT_LE(d.objective_relaxed, bf.value + 1e-4 * (1.0 + std::abs(bf.value)));
    matched += std::abs(expected_loss(d.x_binary, lm) - bf.value) < 1e-9;
  }
  EXPECT_GE(matched, 4);
}

TEST(Decide, Deterministic) {
  Graph g = generate_ws(10, 4, 0.3, 2);
  const MomentModel c = simulate_moments(g, {1, 5}, {2, 8}, {8, 2}, 3);
  const RemovalDecision a = decide(Method::mint_dro, g, c, kUniform, {1.0, 2.0, false}, {{}, 50, 9});
  const RemovalDecision b = decide(Method::mint_dro, g, c, kUniform, {1.0, 2.0, false}, {{}, 50, 9});
  EXPECT_EQ(a.x_binary, b.x_binary);
  EXPECT_EQ(a.x_relaxed, b.x_relaxed);
  EXPECT_LE(a.x_relaxed.cwiseAbs().maxCoeff(), 1.0);
}

TEST(Evaluate, ExpectedLossAndSamples) {
  Graph g = generate_ba(12, 2, 4);
  const MomentModel c = simulate_moments(g, {0, 1}, {2, 8}, {8, 2}, 6);
  const Eigen::VectorXd x = round_sign(c.mu.array() - 0.5);
  const EvaluationReport r = evaluate(x, c, g, kUniform, 4000, 2);
  EXPECT_DOUBLE_EQ(r.expected_loss_eval, expected_loss(x, build_matrices(g, c, kUniform)));
  // Independent recount of the sample mean with the same stream.
  Rng rng = make_rng(2);
  double sum = 0.0;
  for (int s = 0; s < 4000; ++s) {
    const Configuration cfg = sample_configuration(c, rng);
    double l = 0.0;
    for (int i = 0; i < 12; ++i)
      if (x[i] > 0 && cfg.pi[i] < 0.5) l += kUniform.a1();
    for (auto [u, v] : g.edges()) {
      const bool bu = cfg.pi[u] < 0.5, bv = cfg.pi[v] < 0.5;
      const bool ru = x[u] > 0, rv = x[v] > 0;
      if (bu && bv && ru != rv) l += kUniform.a2();
      if (!ru && !rv && bu != bv) l += kUniform.a3();
    }
    sum += l;
  }
  EXPECT_NEAR(r.interpretable_samples_mean, sum / 4000, 1e-12);
  EXPECT_GT(r.interpretable_stderr, 0.0);
  EXPECT_THROW(evaluate(x, c, g, kUniform, 0, 2), std::invalid_argument);
}

TEST(BruteForce, FindsEnumeratedMinimum) {
  std::mt19937_64 rng(42);
  Graph g = oracle::random_graph(6, 0.5, rng);
  const Eigen::VectorXd mu = oracle::random_probabilities(6, rng);
  const MomentModel c = MomentModel::bernoulli(mu, MomentKind::estimated, 0.0);
  const BruteForceResult bf = brute_force_binary(g, c, kUniform);
  double best = 1e300;
  for (int mask = 0; mask < 64; ++mask) {
    Eigen::VectorXd x(6);
    for (int i = 0; i < 6; ++i) x[i] = (mask >> i) & 1 ? 1.0 : -1.0;
    best = std::min(best, oracle::enumerated_loss(g.adjacency(), mu, x, 1.0 / 3, 1.0 / 3, 1.0 / 3));
  }
  EXPECT_NEAR(bf.value, best, 1e-10);
  EXPECT_THROW(brute_force_binary(generate_ba(21, 1, 1),
                                  MomentModel::bernoulli(Eigen::VectorXd::Constant(21, 0.5)), kUniform),
               std::invalid_argument);
}

TEST(BruteForce, RobustDominatesNominal) {
  std::mt19937_64 rng(43);
  Graph g = oracle::random_graph(5, 0.5, rng);
  const MomentModel c = MomentModel::bernoulli(oracle::random_probabilities(5, rng));
  const AmbiguityParams amb{1.0, 2.0, false};
  const BruteForceResult nom = brute_force_binary(g, c, kUniform);
  const BruteForceResult rob = brute_force_robust(g, c, kUniform, amb);
  EXPECT_GE(rob.value, nom.value - 1e-6 * (1.0 + std::abs(nom.value)));
  const DroSdp d = build_dro_sdp(g, c, kUniform, amb);
  EXPECT_LE(sdp::solve(d.program).objective, rob.value + 1e-4 * (1.0 + std::abs(rob.value)));
}
