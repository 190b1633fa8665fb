#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mintdro/calibration.hpp"
#include "mintdro/experiment.hpp"

using namespace mintdro;

namespace {

struct GraphArgs {
  std::string family = "ba";
  std::string path;
  int n = 32, m = 3, k = 10;
  double p = 0.2;
};

void add_graph_options(CLI::App* app, GraphArgs& g) {
  app->add_option("--family", g.family, "ba or ws (ignored with --graph)")
      ->check(CLI::IsMember({"ba", "ws"}));
  app->add_option("--graph", g.path, "edge list file")->check(CLI::ExistingFile);
  app->add_option("--n", g.n, "node count")->check(CLI::PositiveNumber);
  app->add_option("--m", g.m, "BA attachment count");
  app->add_option("--k", g.k, "WS ring degree (even)");
  app->add_option("--p", g.p, "WS rewiring probability");
}

Graph make_graph(const GraphArgs& a, std::uint64_t seed) {
  if (!a.path.empty()) {
    std::ifstream in(a.path);
    Graph g = load_edge_list(in);
    if (g.self_loops_dropped() || g.duplicates_dropped())
      std::cerr << a.path << ": dropped " << g.self_loops_dropped() << " self-loops and "
                << g.duplicates_dropped() << " duplicate edges\n";
    return g;
  }
  return a.family == "ba" ? generate_ba(a.n, a.m, seed) : generate_ws(a.n, a.k, a.p, seed);
}

TradeoffWeights parse_weights(const std::vector<double>& w) {
  if (w.size() != 3) throw std::invalid_argument("--weights needs three values");
  return TradeoffWeights(w[0], w[1], w[2]);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_gen_graph(const GraphArgs& ga, std::uint64_t seed, const std::string& out_path) {
  const Graph g = make_graph(ga, seed);
  const GraphStats s = stats(g);
  std::ostringstream out;
  out << "# nodes " << g.size() << " edges " << s.edge_count << " density " << fmt(s.density)
      << " clustering " << fmt(s.clustering_coeff) << " zero_degree " << fmt(s.zero_degree_fraction)
      << "\n";
  for (auto [u, v] : g.edges()) out << g.label(u) << " " << g.label(v) << "\n";
  if (out_path.empty() || out_path == "-") {
    std::cout << out.str();
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out_path);
    f << out.str();
    std::cerr << "wrote " << g.size() << " nodes, " << s.edge_count << " edges to " << out_path << "\n";
  }
  return 0;
}

int cmd_bounds(const CalibrationInput& c) {
  const double beta = calibrate_gamma1(c);
  const Gamma2Bound g2 = calibrate_gamma2(c);
  const FailureProbability fp = failure_probability(c.delta1, c.delta2);
  std::cout << "n " << c.n << "  m_samples " << c.m_samples << "  r2 " << c.r2 << "  delta1 "
            << c.delta1 << "  delta2 " << c.delta2 << "\n";
  std::cout << "beta(delta1) " << fmt(beta) << "\n";
  std::cout << "gamma1 >= " << static_cast<long long>(beta) << " (integer part)\n";
  if (g2.valid) {
    std::cout << "alpha(delta2) " << fmt(g2.alpha) << "\n";
    std::cout << "gamma2 > " << fmt(g2.value) << "\n";
  } else {
    std::cout << "alpha(delta2) " << (std::isnan(g2.alpha) ? std::string("undefined (r2^2 < n)") : fmt(g2.alpha))
              << "\n";
    std::cout << "gamma2 bound: invalid (sample-size condition fails)\n";
  }
  std::cout << "failure probability <= " << fp.value << (fp.capped ? " (capped at 1)" : "")
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust malicious-node removal: graphs, calibration, solves and experiments"};
  app.require_subcommand(1);

  // gen-graph
  GraphArgs gen_graph;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-graph", "generate a BA or WS graph as an edge list");
  add_graph_options(gen, gen_graph);
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output file (default stdout)");

  // bounds
  CalibrationInput cal;
  cal.n = 128;
  cal.m_samples = 5;
  cal.r2 = 256;
  auto* bounds = app.add_subcommand("bounds", "print the ambiguity-set calibration report");
  bounds->add_option("--n", cal.n, "dimension");
  bounds->add_option("--m-samples", cal.m_samples, "samples behind the estimate");
  bounds->add_option("--r2", cal.r2, "squared support radius");
  bounds->add_option("--delta1", cal.delta1, "mean failure probability");
  bounds->add_option("--delta2", cal.delta2, "covariance failure probability");

  // solve
  GraphArgs solve_graph;
  std::string probs, method = "mint_dro", json_out;
  double fraction = 0.10, gamma1 = 1.0, gamma2 = 2.0;
  bool strategic = false;
  std::vector<double> weights{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::vector<double> calibrate;
  std::uint64_t solve_seed = 1;
  int trials = 100, samples = 1000;
  auto* solve = app.add_subcommand("solve", "solve one instance and print the decision");
  add_graph_options(solve, solve_graph);
  solve->add_option("--probabilities", probs, "CSV with node,p_est,p_eval")->check(CLI::ExistingFile);
  solve->add_option("--malicious-fraction", fraction, "fraction of simulated malicious nodes");
  solve->add_flag("--strategic", strategic, "place malicious nodes greedily");
  solve->add_option("--method", method, "mint or mint_dro")->check(CLI::IsMember({"mint", "mint_dro"}));
  auto* g1 = solve->add_option("--gamma1", gamma1, "mean radius");
  auto* g2 = solve->add_option("--gamma2", gamma2, "second-moment scale");
  solve->add_option("--calibrate", calibrate, "m_samples r2 delta1 delta2")
      ->expected(4)
      ->excludes(g1)
      ->excludes(g2);
  solve->add_option("--weights", weights, "a1 a2 a3")->expected(3);
  solve->add_option("--seed", solve_seed, "master seed");
  solve->add_option("--trials", trials, "randomized rounding trials");
  solve->add_option("--samples", samples, "configurations sampled for the interpretable loss");
  solve->add_option("--json-out", json_out, "write the decision JSON here instead of stdout");

  // experiment
  std::string config_path, output_override;
  int threads = 0;
  auto* exp = app.add_subcommand("experiment", "run a noise-sweep experiment from a JSON config");
  exp->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  exp->add_option("--output", output_override, "CSV path (overrides the config)");
  exp->add_option("--threads", threads, "worker threads (overrides the config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_graph(gen_graph, gen_seed, gen_out);
    if (*bounds) return cmd_bounds(cal);
    if (*solve) {
      const TradeoffWeights w = parse_weights(weights);
      const Graph g = make_graph(solve_graph, split_seed(solve_seed, "graph"));
      MomentModel est, eval_model;
      if (!probs.empty()) {
        std::ifstream in(probs);
        ProbabilityTable t = load_probability_csv(in, g);
        est = std::move(t.estimated);
        eval_model = std::move(t.evaluation);
      } else {
        const NodeSet mal = detail::pick_malicious(g, fraction, strategic,
                                                   split_seed(solve_seed, "malicious"));
        est = simulate_moments(g, mal, {2.0, 8.0}, {8.0, 2.0}, split_seed(solve_seed, "est"));
        eval_model = simulate_moments(g, mal, {2.0, 8.0}, {8.0, 2.0},
                                      split_seed(solve_seed, "eval"), MomentKind::evaluation);
      }
      AmbiguityParams amb{gamma1, gamma2, false};
      if (!calibrate.empty()) {
        CalibrationInput c;
        c.n = g.size();
        c.m_samples = static_cast<int>(calibrate[0]);
        c.r2 = calibrate[1];
        c.delta1 = calibrate[2];
        c.delta2 = calibrate[3];
        amb = AmbiguityParams::from_calibration(c);
      }
      DecideOptions opt;
      opt.rounding_trials = trials;
      opt.seed = split_seed(solve_seed, "rounding");
      const SolveOnceResult r = solve_once(g, est, eval_model, parse_method(method), amb, w, opt,
                                           samples, split_seed(solve_seed, "samples"));
      const std::string js = decision_json(r, g).dump(2);
      if (json_out.empty()) {
        std::cout << js << "\n";
      } else {
        std::ofstream f(json_out, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + json_out);
        f << js << "\n";
      }
      const auto& cols = csv_columns();
      for (std::size_t i = 0; i < cols.size(); ++i) std::cout << (i ? "," : "") << cols[i];
      std::cout << "\n"
                << solve_seed << ",0," << to_string(r.decision.method) << ","
                << fmt(r.report.expected_loss_eval) << "," << fmt(r.report.interpretable_samples_mean)
                << "," << sdp::to_string(r.decision.status) << "," << r.decision.iterations << ",0\n";
      return 0;
    }
    if (*exp) {
      std::ifstream in(config_path);
      ExperimentConfig cfg = config_from_json(nlohmann::json::parse(in));
      if (!output_override.empty()) cfg.output = output_override;
      if (threads > 0) cfg.threads = threads;
      const ExperimentResult r = run_experiment(cfg);
      const auto path = resolve_output_path(cfg.output);
      write_outputs(path, r);
      std::cerr << "wrote " << r.rows.size() << " rows and " << r.aggregates.size()
                << " aggregate rows to " << path.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
