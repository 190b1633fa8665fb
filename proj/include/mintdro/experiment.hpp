#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mintdro/calibration.hpp"
#include "mintdro/decide.hpp"
#include "mintdro/dist.hpp"
#include "mintdro/graph.hpp"
#include "mintdro/loss.hpp"
#include "mintdro/rng.hpp"
#include "mintdro/robust.hpp"

namespace mintdro {

struct GraphSpec {
  std::string family = "ba";  // ba | ws | edge_list
  int n = 32;
  int m = 3;         // ba
  int k = 10;        // ws
  double p = 0.2;    // ws rewiring
  std::string path;  // edge_list
  int subsample = 0; // edge_list: nodes kept per topology, 0 keeps all
};

struct GammaSpec {
  std::optional<AmbiguityParams> explicit_params;
  std::optional<CalibrationInput> calibration;  // n is taken from the graph

  AmbiguityParams resolve(int n) const {
    if (explicit_params) return *explicit_params;
    if (calibration) {
      CalibrationInput c = *calibration;
      c.n = n;
      return AmbiguityParams::from_calibration(c);
    }
    return AmbiguityParams::uncalibrated();
  }
};

struct ExperimentConfig {
  GraphSpec graph;
  double malicious_fraction = 0.10;
  bool strategic = false;
  TradeoffWeights weights = TradeoffWeights::uniform();
  std::vector<double> noise{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  int repetitions = 30;
  GammaSpec gamma;
  BetaParams benign_beta{2.0, 8.0};
  BetaParams malicious_beta{8.0, 2.0};
  sdp::SolverOptions solver;
  int rounding_trials = 100;
  int eval_samples = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
  bool record_timing = false;
  std::string output = "results.csv";

  void validate() const {
    if (!(malicious_fraction >= 0.0 && malicious_fraction <= 1.0))
      throw std::invalid_argument("malicious_fraction must lie in [0,1]");
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (noise.empty()) throw std::invalid_argument("noise list must not be empty");
    for (double s : noise)
      if (!(s >= 0.0)) throw std::invalid_argument("noise levels must be nonnegative");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (eval_samples < 1) throw std::invalid_argument("eval_samples must be >= 1");
    if (rounding_trials < 0) throw std::invalid_argument("rounding_trials must be >= 0");
    if (graph.family != "ba" && graph.family != "ws" && graph.family != "edge_list")
      throw std::invalid_argument("graph.family must be ba, ws or edge_list");
    if (graph.family == "edge_list" && graph.path.empty())
      throw std::invalid_argument("graph.path is required for edge_list");
  }
};

namespace detail {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline BetaParams beta_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("beta parameters must be [a, b]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (j.contains("graph")) {
    const auto& g = j.at("graph");
    detail::read_opt(g, "family", c.graph.family);
    detail::read_opt(g, "n", c.graph.n);
    detail::read_opt(g, "m", c.graph.m);
    detail::read_opt(g, "k", c.graph.k);
    detail::read_opt(g, "p", c.graph.p);
    detail::read_opt(g, "path", c.graph.path);
    detail::read_opt(g, "subsample", c.graph.subsample);
  }
  detail::read_opt(j, "malicious_fraction", c.malicious_fraction);
  detail::read_opt(j, "strategic", c.strategic);
  if (j.contains("weights")) {
    const auto w = j.at("weights").get<std::vector<double>>();
    if (w.size() != 3) throw std::invalid_argument("weights must have three entries");
    c.weights = TradeoffWeights(w[0], w[1], w[2]);
  }
  detail::read_opt(j, "noise", c.noise);
  detail::read_opt(j, "repetitions", c.repetitions);
  if (j.contains("gamma")) {
    const auto& g = j.at("gamma");
    if (g.contains("calibration")) {
      const auto& cal = g.at("calibration");
      CalibrationInput in;
      detail::read_opt(cal, "m_samples", in.m_samples);
      detail::read_opt(cal, "r2", in.r2);
      detail::read_opt(cal, "delta1", in.delta1);
      detail::read_opt(cal, "delta2", in.delta2);
      c.gamma.calibration = in;
    } else {
      AmbiguityParams a = AmbiguityParams::uncalibrated();
      detail::read_opt(g, "gamma1", a.gamma1);
      detail::read_opt(g, "gamma2", a.gamma2);
      a.validate();
      c.gamma.explicit_params = a;
    }
  }
  if (j.contains("benign_beta")) c.benign_beta = detail::beta_from_json(j.at("benign_beta"));
  if (j.contains("malicious_beta"))
    c.malicious_beta = detail::beta_from_json(j.at("malicious_beta"));
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    detail::read_opt(s, "eps_abs", c.solver.eps_abs);
    detail::read_opt(s, "eps_rel", c.solver.eps_rel);
    detail::read_opt(s, "max_iters", c.solver.max_iters);
    detail::read_opt(s, "rho", c.solver.rho);
    detail::read_opt(s, "seed", c.solver.seed);
  }
  detail::read_opt(j, "rounding_trials", c.rounding_trials);
  detail::read_opt(j, "eval_samples", c.eval_samples);
  detail::read_opt(j, "seed", c.seed);
  detail::read_opt(j, "threads", c.threads);
  detail::read_opt(j, "record_timing", c.record_timing);
  detail::read_opt(j, "output", c.output);
  c.validate();
  return c;
}

struct ResultRow {
  std::string seed;  // topology seed, or "mean" / "stderr" for aggregates
  double noise_std = 0.0;
  Method method = Method::mint;
  double expected_loss_eval = 0.0;
  double interpretable_mean = 0.0;
  std::string solver_status;
  double iterations = 0.0;
  double wall_ms = 0.0;
};

struct TopologyProvenance {
  std::uint64_t seed = 0;
  NodeSet malicious_set;
  bool strategic = false;
  std::map<std::string, NodeSet> removed;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;        // one per (topology, noise, method)
  std::vector<ResultRow> aggregates;  // mean and stderr per (noise, method)
  std::vector<TopologyProvenance> provenance;
  AmbiguityParams gamma;
};

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{"seed",          "noise_std",   "method",
                                             "expected_loss_eval", "interpretable_mean",
                                             "solver_status", "iterations", "wall_ms"};
  return cols;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Graph make_topology(const ExperimentConfig& cfg, const Graph* base, std::uint64_t seed) {
  const GraphSpec& gs = cfg.graph;
  if (gs.family == "ba") return generate_ba(gs.n, gs.m, seed);
  if (gs.family == "ws") return generate_ws(gs.n, gs.k, gs.p, seed);
  if (gs.subsample > 0 && gs.subsample < base->size()) return subsample_nodes(*base, gs.subsample, seed);
  return *base;
}

inline NodeSet pick_malicious(const Graph& g, double fraction, bool strategic, std::uint64_t seed) {
  const int k = static_cast<int>(std::lround(fraction * g.size()));
  if (strategic) return greedy_strategic_nodes(g, k);
  std::vector<NodeId> nodes(g.size());
  std::iota(nodes.begin(), nodes.end(), 0);
  Rng rng = make_rng(seed);
  std::shuffle(nodes.begin(), nodes.end(), rng);
  NodeSet out(nodes.begin(), nodes.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

struct Cell {
  std::vector<ResultRow> rows;
  TopologyProvenance provenance;
};

inline Cell run_topology(const ExperimentConfig& cfg, const Graph* base,
                         const AmbiguityParams& amb, int rep) {
  Cell cell;
  const std::uint64_t topo_seed = split_seed(split_seed(cfg.seed, "topology"), rep);
  cell.provenance.seed = topo_seed;
  cell.provenance.strategic = cfg.strategic;
  const std::string seed_str = std::to_string(topo_seed);
  const Method methods[] = {Method::mint, Method::mint_dro};

  auto fail_rows = [&](const std::string& why) {
    for (double s : cfg.noise)
      for (Method m : methods)
        cell.rows.push_back({seed_str, s, m, std::nan(""), std::nan(""), "error: " + why, 0.0, 0.0});
  };

  try {
    const Graph g = make_topology(cfg, base, split_seed(topo_seed, "graph"));
    cell.provenance.malicious_set =
        pick_malicious(g, cfg.malicious_fraction, cfg.strategic, split_seed(topo_seed, "malicious"));
    const MomentModel est = simulate_moments(g, cell.provenance.malicious_set, cfg.benign_beta,
                                             cfg.malicious_beta, split_seed(topo_seed, "est"),
                                             MomentKind::estimated);
    const MomentModel truth = simulate_moments(g, cell.provenance.malicious_set, cfg.benign_beta,
                                               cfg.malicious_beta, split_seed(topo_seed, "eval"),
                                               MomentKind::evaluation);

    struct Solved {
      std::optional<RemovalDecision> decision;
      std::string error;
      double ms = 0.0;
    };
    std::vector<Solved> solved;
    for (Method m : methods) {
      Solved s;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        DecideOptions opt;
        opt.solver = cfg.solver;
        opt.rounding_trials = cfg.rounding_trials;
        opt.seed = split_seed(topo_seed, std::string("rounding/") + to_string(m));
        s.decision = decide(m, g, est, cfg.weights, amb, opt);
        cell.provenance.removed[to_string(m)] = s.decision->removed_set;
      } catch (const std::exception& e) {
        s.error = e.what();
      }
      s.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      solved.push_back(std::move(s));
    }

    for (std::size_t j = 0; j < cfg.noise.size(); ++j) {
      const double sigma = cfg.noise[j];
      const MomentModel eval_model = perturb(truth, sigma, split_seed(split_seed(topo_seed, "noise"), j));
      const std::uint64_t sample_seed = split_seed(split_seed(topo_seed, "samples"), j);
      for (std::size_t k = 0; k < solved.size(); ++k) {
        ResultRow row{seed_str, sigma, methods[k], std::nan(""), std::nan(""), "", 0.0, 0.0};
        row.wall_ms = cfg.record_timing ? solved[k].ms : 0.0;
        if (!solved[k].decision) {
          row.solver_status = "error: " + solved[k].error;
        } else {
          const RemovalDecision& d = *solved[k].decision;
          // Same samples for both methods at a given noise level.
          const EvaluationReport r = evaluate(d, eval_model, g, cfg.weights, cfg.eval_samples, sample_seed);
          row.expected_loss_eval = r.expected_loss_eval;
          row.interpretable_mean = r.interpretable_samples_mean;
          row.solver_status = sdp::to_string(d.status);
          row.iterations = d.iterations;
        }
        cell.rows.push_back(std::move(row));
      }
    }
  } catch (const std::exception& e) {
    cell.rows.clear();
    fail_rows(e.what());
  }
  return cell;
}

}  // namespace detail

/// Mean and standard error per (noise, method), skipping rows whose metrics
/// are not finite. Order follows cfg.noise, then method.
inline std::vector<ResultRow> aggregate_rows(const std::vector<ResultRow>& rows,
                                             const std::vector<double>& noise) {
  std::vector<ResultRow> out;
  for (double s : noise)
    for (Method m : {Method::mint, Method::mint_dro}) {
      std::vector<const ResultRow*> sel;
      for (const auto& r : rows)
        if (r.noise_std == s && r.method == m && std::isfinite(r.expected_loss_eval) &&
            std::isfinite(r.interpretable_mean))
          sel.push_back(&r);
      auto stats = [&](auto get) {
        const double k = static_cast<double>(sel.size());
        if (sel.empty()) return std::pair{std::nan(""), std::nan("")};
        double sum = 0.0;
        for (auto* r : sel) sum += get(*r);
        const double mean = sum / k;
        if (sel.size() < 2) return std::pair{mean, std::nan("")};
        double ss = 0.0;
        for (auto* r : sel) ss += (get(*r) - mean) * (get(*r) - mean);
        return std::pair{mean, std::sqrt(ss / (k - 1.0) / k)};
      };
      const auto el = stats([](const ResultRow& r) { return r.expected_loss_eval; });
      const auto im = stats([](const ResultRow& r) { return r.interpretable_mean; });
      const auto it = stats([](const ResultRow& r) { return r.iterations; });
      const auto ms = stats([](const ResultRow& r) { return r.wall_ms; });
      const std::string status = std::to_string(sel.size()) + "/" +
                                 std::to_string(std::count_if(rows.begin(), rows.end(), [&](const ResultRow& r) {
                                   return r.noise_std == s && r.method == m;
                                 })) + " ok";
      out.push_back({"mean", s, m, el.first, im.first, status, it.first, ms.first});
      out.push_back({"stderr", s, m, el.second, im.second, status, it.second, ms.second});
    }
  return out;
}

/// Runs every (topology, noise, method) cell. Topologies may be processed on
/// several threads; each cell's seeds derive only from (cfg.seed, index), so
/// the result does not depend on the thread count.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::optional<Graph> base;
  if (cfg.graph.family == "edge_list") {
    std::ifstream in(cfg.graph.path);
    if (!in) throw std::runtime_error("cannot open edge list: " + cfg.graph.path);
    base = load_edge_list(in);
  }
  ExperimentResult result;
  int n = cfg.graph.n;
  if (base) n = cfg.graph.subsample > 0 ? std::min(cfg.graph.subsample, base->size()) : base->size();
  const AmbiguityParams gamma = cfg.gamma.resolve(n);
  result.gamma = gamma;

  std::vector<detail::Cell> cells(cfg.repetitions);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int rep = next++; rep < cfg.repetitions; rep = next++)
      cells[rep] = detail::run_topology(cfg, base ? &*base : nullptr, gamma, rep);
  };
  const int nthreads = std::min(cfg.threads, cfg.repetitions);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& c : cells) {
    result.rows.insert(result.rows.end(), c.rows.begin(), c.rows.end());
    result.provenance.push_back(std::move(c.provenance));
  }
  result.aggregates = aggregate_rows(result.rows, cfg.noise);
  return result;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_csv(std::ostream& out, const ExperimentResult& r) {
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  auto line = [&](const ResultRow& row) {
    out << csv_escape(row.seed) << "," << detail::fmt(row.noise_std) << "," << to_string(row.method)
        << "," << detail::fmt(row.expected_loss_eval) << "," << detail::fmt(row.interpretable_mean)
        << "," << csv_escape(row.solver_status) << "," << detail::fmt(row.iterations) << ","
        << detail::fmt(row.wall_ms) << "\n";
  };
  for (const auto& row : r.rows) line(row);
  for (const auto& row : r.aggregates) line(row);
}

inline nlohmann::json provenance_json(const ExperimentResult& r) {
  nlohmann::json j;
  j["gamma1"] = r.gamma.gamma1;
  j["gamma2"] = r.gamma.gamma2;
  j["gamma_calibrated"] = r.gamma.calibrated;
  auto& topo = j["topologies"] = nlohmann::json::array();
  for (const auto& p : r.provenance) {
    nlohmann::json t{{"seed", std::to_string(p.seed)},
                     {"strategic", p.strategic},
                     {"malicious_set", p.malicious_set}};
    for (const auto& [method, set] : p.removed) t["removed"][method] = set;
    topo.push_back(t);
  }
  return j;
}

struct SolveOnceResult {
  RemovalDecision decision;
  EvaluationReport report;
  AmbiguityParams gamma;
};

/// One decision on one instance, evaluated against `eval_model`.
inline SolveOnceResult solve_once(const Graph& g, const MomentModel& est,
                                  const MomentModel& eval_model, Method method,
                                  const AmbiguityParams& amb, const TradeoffWeights& w,
                                  const DecideOptions& opt, int eval_samples,
                                  std::uint64_t eval_seed) {
  SolveOnceResult r;
  r.gamma = amb;
  r.decision = decide(method, g, est, w, amb, opt);
  r.report = evaluate(r.decision, eval_model, g, w, eval_samples, eval_seed);
  return r;
}

inline nlohmann::json decision_json(const SolveOnceResult& r, const Graph& g) {
  nlohmann::json j;
  j["method"] = to_string(r.decision.method);
  j["solver_status"] = sdp::to_string(r.decision.status);
  j["iterations"] = r.decision.iterations;
  j["objective_relaxed"] = r.decision.objective_relaxed;
  j["x_relaxed"] = std::vector<double>(r.decision.x_relaxed.data(),
                                       r.decision.x_relaxed.data() + r.decision.x_relaxed.size());
  j["x_binary"] = std::vector<double>(r.decision.x_binary.data(),
                                      r.decision.x_binary.data() + r.decision.x_binary.size());
  auto& removed = j["removed"] = nlohmann::json::array();
  for (NodeId v : r.decision.removed_set) removed.push_back(g.label(v));
  j["gamma1"] = r.gamma.gamma1;
  j["gamma2"] = r.gamma.gamma2;
  j["gamma_calibrated"] = r.gamma.calibrated;
  j["expected_loss_eval"] = r.report.expected_loss_eval;
  j["interpretable_mean"] = r.report.interpretable_samples_mean;
  return j;
}

/// Output path for `configured`, redirected into $MINTDRO_OUTPUT_DIR when set.
inline std::filesystem::path resolve_output_path(const std::string& configured) {
  std::filesystem::path p(configured);
  if (const char* dir = std::getenv("MINTDRO_OUTPUT_DIR"); dir && *dir)
    return std::filesystem::path(dir) / p.filename();
  return p;
}

/// Writes the CSV and, next to it, `<name>.provenance.json`.
inline void write_outputs(const std::filesystem::path& csv_path, const ExperimentResult& r) {
  if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + csv_path.string());
    write_csv(out, r);
  }
  std::filesystem::path side = csv_path;
  side += ".provenance.json";
  std::ofstream out(side, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + side.string());
  out << provenance_json(r).dump(2) << "\n";
}

}  // namespace mintdro
