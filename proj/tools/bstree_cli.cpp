// Command-line front end: exact tree-posterior summaries, MCMC fits, the
// tree HMM, data simulation and benchmark runs. Every subcommand writes into
// an output directory with a manifest.json describing the files.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bstree/edge_weights.hpp"
#include "bstree/experiments.hpp"
#include "bstree/io.hpp"
#include "bstree/mode.hpp"
#include "bstree/sampler.hpp"
#include "bstree/tree_distribution.hpp"
#include "bstree/tree_hmm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bstree;

namespace {

#ifndef BSTREE_VERSION
#define BSTREE_VERSION "unknown"
#endif

void write_manifest(const fs::path& out, const std::string& command, const json& spec,
                    const json& files) {
  write_json(out / "manifest.json", {{"tool", "bstree"},
                                     {"version", BSTREE_VERSION},
                                     {"command", command},
                                     {"spec", spec},
                                     {"files", files}});
}

json prior_json(const TreePrior& prior) {
  if (std::holds_alternative<EdgePrior>(prior)) return {{"kind", "edge"}};
  if (const auto* d = std::get_if<DegreePrior>(&prior)) {
    return {{"kind", "degree"}, {"alpha_dir", d->alpha_dir}};
  }
  return {{"kind", "uniform"}};
}

std::vector<std::string> numbered(const std::string& prefix, int count) {
  std::vector<std::string> out;
  for (int i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

struct LoadedData {
  DataMatrix data;
  ModelConfig config;
};

LoadedData load(const fs::path& data_path, const fs::path& config_path, bool raw) {
  const CsvTable table = read_csv(data_path, true);
  LoadedData out;
  out.data = raw ? unstandardized(table.values, table.header) : standardize(table.values, table.header);
  out.config = read_model_config(config_path, out.data.p());
  return out;
}

// tau from the config if given, else the plug-in estimate on the mode tree.
std::pair<double, std::string> resolve_tau(const LoadedData& in, const PairwiseDistances& dist,
                                           const SpanningTree& mode) {
  if (in.config.tau_init) return {*in.config.tau_init, "config"};
  return {tau_hat(mode, dist, in.config.alpha), "tau_hat"};
}

SpanningTree mode_tree(const LoadedData& in, const PairwiseDistances& dist, double mu) {
  return prim_mode(assemble_log_weights(dist, {in.config.alpha, mu, mu}, in.config.prior));
}

void write_edge_list(const fs::path& path, const std::vector<Edge>& edges) {
  std::ofstream out(path);
  out << "j,k\n";
  auto sorted = edges;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& e : sorted) out << e.j + 1 << ',' << e.k + 1 << '\n';
}

void write_degree_trace(std::ofstream& out, int chain, const std::vector<std::vector<int>>& trace) {
  for (std::size_t it = 0; it < trace.size(); ++it) {
    out << chain << ',' << it + 1;
    for (int d : trace[it]) out << ',' << d;
    out << '\n';
  }
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

std::vector<RecoveryMethodSpec> parse_methods(const std::string& s, int sweeps) {
  std::vector<RecoveryMethodSpec> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    RecoveryMethodSpec m;
    m.sweeps = sweeps;
    const auto colon = item.find(':');
    const std::string name = item.substr(0, colon);
    if (colon != std::string::npos) m.cutoff = std::stod(item.substr(colon + 1));
    if (name == "mode") {
      m.method = RecoveryMethod::mode;
    } else if (name == "mcp_plugin") {
      m.method = RecoveryMethod::mcp_plugin;
    } else if (name == "mcmc_mcp") {
      m.method = RecoveryMethod::mcmc_mcp;
    } else if (name == "threshold") {
      m.method = RecoveryMethod::threshold;
    } else {
      throw std::invalid_argument("unknown method '" + name + "'");
    }
    out.push_back(m);
  }
  return out;
}

int run_mcp(const fs::path& data_path, const fs::path& config_path, const fs::path& out, bool raw) {
  const auto in = load(data_path, config_path, raw);
  const auto dist = pairwise_distances(in.data);
  const double mu = empirical_tau_prior_mean(dist);
  const auto [tau, source] = resolve_tau(in, dist, mode_tree(in, dist, mu));
  const auto summary =
      marginal_connecting_probabilities(assemble_log_weights(dist, {in.config.alpha, tau, mu}, in.config.prior));
  write_csv(out / "mcp.csv", summary.mcp, in.data.names);
  json s = {{"log_z", summary.log_z},     {"shift", summary.shift},
            {"clamp_magnitude", summary.clamp_magnitude},
            {"tau", tau},                 {"tau_source", source},
            {"mu_tau", mu},               {"alpha", in.config.alpha},
            {"n", in.data.n()},           {"p", in.data.p()},
            {"prior", prior_json(in.config.prior)}};
  write_json(out / "summary.json", s);
  write_manifest(out, "mcp", {{"data", data_path.string()}, {"config", config_path.string()}},
                 {{"mcp", "mcp.csv"}, {"summary", "summary.json"}});
  return 0;
}

int run_mode(const fs::path& data_path, const fs::path& config_path, const fs::path& out, bool raw) {
  const auto in = load(data_path, config_path, raw);
  const auto dist = pairwise_distances(in.data);
  const double mu = empirical_tau_prior_mean(dist);
  const SpanningTree tree = mode_tree(in, dist, mu);
  const double that = tau_hat(tree, dist, in.config.alpha);
  const auto summary = marginal_connecting_probabilities(
      assemble_log_weights(dist, {in.config.alpha, that, mu}, in.config.prior));
  write_tree_csv(out / "tree.csv", tree);
  write_csv(out / "mcp.csv", summary.mcp, in.data.names);
  write_json(out / "summary.json", {{"tau_hat", that},
                                    {"mu_tau", mu},
                                    {"log_z_at_tau_hat", summary.log_z},
                                    {"alpha", in.config.alpha},
                                    {"n", in.data.n()},
                                    {"p", in.data.p()},
                                    {"edges", tree_to_json(tree)}});
  write_manifest(out, "mode", {{"data", data_path.string()}, {"config", config_path.string()}},
                 {{"tree", "tree.csv"}, {"mcp", "mcp.csv"}, {"summary", "summary.json"}});
  return 0;
}

json draw_json(int chain, int index, const PosteriorDraw& d) {
  json j = {{"chain", chain}, {"draw", index}, {"tau", d.tau}, {"log_post", d.log_post},
            {"edges", tree_to_json(d.tree)}};
  if (d.v) j["v"] = std::vector<double>(d.v->data(), d.v->data() + d.v->size());
  return j;
}

int run_fit(const fs::path& data_path, const fs::path& config_path, const fs::path& out, bool raw,
            ChainConfig chain, int chains, bool tau_averaged) {
  const auto in = load(data_path, config_path, raw);
  SamplerModel model = make_sampler_model(in.data, in.config.alpha, in.config.prior);
  chain.tau_init = in.config.tau_init;
  const auto results = run_chains(model, chain, chains);

  fs::create_directories(out);
  std::ofstream draws(out / "draws.jsonl");
  std::ofstream tau_trace(out / "tau_trace.csv");
  std::ofstream degree_trace(out / "degree_trace.csv");
  tau_trace << "chain,iteration,tau\n";
  degree_trace << "chain,iteration";
  for (const auto& name : in.data.names) degree_trace << ',' << name;
  degree_trace << '\n';
  std::vector<PosteriorDraw> pooled;
  json diag = json::array();
  for (int c = 0; c < chains; ++c) {
    const auto& r = results[c];
    for (std::size_t i = 0; i < r.draws.size(); ++i) draws << draw_json(c, static_cast<int>(i), r.draws[i]).dump() << '\n';
    for (std::size_t it = 0; it < r.diagnostics.tau_trace.size(); ++it) {
      tau_trace << c << ',' << it + 1 << ',' << r.diagnostics.tau_trace[it] << '\n';
    }
    write_degree_trace(degree_trace, c, r.diagnostics.degree_trace);
    pooled.insert(pooled.end(), r.draws.begin(), r.draws.end());
    const auto& d = r.diagnostics;
    diag.push_back({{"chain", c},
                    {"seed", split_seed(chain.seed, static_cast<std::uint64_t>(c))},
                    {"accept_rate_tau", d.accept_rate_tau},
                    {"accept_rate_tau_post_adapt", d.accept_rate_tau_post_adapt},
                    {"final_delta", d.final_delta},
                    {"ess_tau", d.ess_tau},
                    {"ess_degree", d.ess_degree},
                    {"gram_refreshes", d.gram_refreshes},
                    {"drift_recoveries", d.drift_recoveries},
                    {"seconds", d.seconds},
                    {"draws", r.draws.size()}});
  }
  write_csv(out / "mcp.csv", edge_frequencies(pooled, in.data.p()), in.data.names);
  json files = {{"draws", "draws.jsonl"},
                {"mcp", "mcp.csv"},
                {"diagnostics", "diagnostics.json"},
                {"tau_trace", "tau_trace.csv"},
                {"degree_trace", "degree_trace.csv"}};
  if (tau_averaged) {
    write_csv(out / "mcp_tau_averaged.csv", tau_averaged_mcp(pooled, model), in.data.names);
    files["mcp_tau_averaged"] = "mcp_tau_averaged.csv";
  }
  write_json(out / "diagnostics.json", {{"mu_tau", model.mu_tau}, {"chains", diag}});
  write_manifest(out, "fit",
                 {{"data", data_path.string()},
                  {"config", config_path.string()},
                  {"iterations", chain.iterations},
                  {"burn_in", chain.burn_in},
                  {"seed", chain.seed},
                  {"chains", chains},
                  {"scan", chain.scan == ScanKind::full ? "full" : "random"},
                  {"fix_tau", chain.fix_tau},
                  {"alpha", in.config.alpha},
                  {"prior", prior_json(in.config.prior)}},
                 files);
  return 0;
}

int run_hmm(const fs::path& dir, fs::path manifest_path, const fs::path& out, HmmConfig config) {
  if (manifest_path.empty()) manifest_path = dir / "manifest.json";
  const json manifest = read_json(manifest_path);
  std::vector<std::string> condition_names;
  std::vector<HmmSeries> train;
  std::vector<HmmSeries> test;
  for (const auto& entry : manifest.at("series")) {
    const std::string cond = entry.at("condition").is_string() ? entry.at("condition").get<std::string>()
                                                               : entry.at("condition").dump();
    auto it = std::find(condition_names.begin(), condition_names.end(), cond);
    if (it == condition_names.end()) {
      condition_names.push_back(cond);
      it = condition_names.end() - 1;
    }
    const int g = static_cast<int>(it - condition_names.begin());
    const fs::path file = dir / entry.at("file").get<std::string>();
    const std::string subject = entry.contains("subject") ? (entry.at("subject").is_string() ? entry.at("subject").get<std::string>() : entry.at("subject").dump()) : "";
    auto series = standardized_series(read_csv(file, true).values, g, entry.at("file").get<std::string>(), subject);
    (entry.value("split", std::string("train")) == "test" ? test : train).push_back(std::move(series));
  }
  if (train.empty()) throw std::invalid_argument("manifest lists no training series");
  const HmmFit fit = fit_tree_hmm(train, config);
  const int k = fit.model.states();
  const int p = train.front().p();

  json files = json::object();
  for (int s = 0; s < k; ++s) {
    const std::string tree_file = "state_" + std::to_string(s + 1) + "_tree.csv";
    const std::string mcp_file = "state_" + std::to_string(s + 1) + "_mcp.csv";
    write_tree_csv(out / tree_file, fit.model.trees[s]);
    std::vector<std::pair<int, int>> points;
    for (std::size_t i = 0; i < train.size(); ++i) {
      for (std::size_t t = 0; t < fit.modal_states[i].size(); ++t) {
        if (fit.modal_states[i][t] == s) points.emplace_back(static_cast<int>(i), static_cast<int>(t));
      }
    }
    const Eigen::MatrixXd q = points.empty() ? Eigen::MatrixXd::Zero(p, p)
                                             : state_log_weights(train, points, fit.model.tau, fit.model.alpha);
    Eigen::MatrixXd qq = q;
    qq.diagonal().setConstant(-std::numeric_limits<double>::infinity());
    write_csv(out / mcp_file, marginal_connecting_probabilities(qq).mcp, numbered("V", p));
    files["state_trees"].push_back(tree_file);
    files["state_mcp"].push_back(mcp_file);
  }
  {
    std::ofstream states(out / "states.csv");
    states << "series,condition,t,modal_state";
    for (int s = 1; s <= k; ++s) states << ",pr_state_" << s;
    states << '\n';
    for (std::size_t i = 0; i < train.size(); ++i) {
      for (std::size_t t = 0; t < fit.modal_states[i].size(); ++t) {
        states << train[i].name << ',' << condition_names[train[i].condition] << ',' << t + 1 << ','
               << fit.modal_states[i][t] + 1;
        for (int s = 0; s < k; ++s) states << ',' << fit.state_probabilities[i](static_cast<Eigen::Index>(t), s);
        states << '\n';
      }
    }
    std::ofstream occ(out / "occupancy_trace.csv");
    occ << "iteration,tau";
    for (int s = 1; s <= k; ++s) occ << ",state_" << s;
    occ << '\n';
    for (std::size_t it = 0; it < fit.occupancy_trace.size(); ++it) {
      occ << it + 1 << ',' << fit.tau_trace[it];
      for (int c : fit.occupancy_trace[it]) occ << ',' << c;
      occ << '\n';
    }
  }
  json trans = json::object();
  for (int g = 0; g < fit.model.conditions(); ++g) {
    json rows = json::array();
    for (int r = 0; r < k; ++r) {
      json row = json::array();
      for (int c = 0; c < k; ++c) row.push_back(fit.model.trans[g](r, c));
      rows.push_back(row);
    }
    trans[condition_names[g]] = rows;
  }
  write_json(out / "transitions.json",
             {{"q0", std::vector<double>(fit.model.q0.data(), fit.model.q0.data() + k)},
              {"trans", trans},
              {"tau", fit.model.tau},
              {"mu_tau", fit.mu_tau},
              {"accept_rate_tau", fit.accept_rate_tau}});
  files["states"] = "states.csv";
  files["occupancy_trace"] = "occupancy_trace.csv";
  files["transitions"] = "transitions.json";

  if (condition_names.size() == 2) {
    const auto& targets = test.empty() ? train : test;
    std::ofstream report(out / "classification.csv");
    report << "series,true_condition,pr_" << condition_names[0] << ",decision\n";
    for (const auto& s : targets) {
      const double pr = classify_condition(s, fit.model, 0, 1);
      report << s.name << ',' << condition_names[s.condition] << ',' << pr << ','
             << condition_names[pr > 0.5 ? 0 : 1] << '\n';
    }
    files["classification"] = "classification.csv";
  }
  write_manifest(out, "hmm",
                 {{"manifest", manifest_path.string()},
                  {"states", config.states},
                  {"iterations", config.iterations},
                  {"burn_in", config.burn_in},
                  {"seed", config.seed},
                  {"alpha", config.alpha},
                  {"dir_conc", config.dir_conc},
                  {"conditions", condition_names}},
                 files);
  return 0;
}

struct SimulateOptions {
  std::string kind = "sparse_precision";
  int p = 50;
  int n = 100;
  double sparsity = 0.03;
  std::string construction = "diagonal_dominance";
  double edge_sd = 1.0;
  double noise = 0.05;
  double spread = 1.0;
  int states = 3;
  int length = 100;
  int series_per_condition = 10;
  std::uint64_t seed = 1;
};

int run_simulate(const SimulateOptions& o, const fs::path& out) {
  Rng rng = make_rng(o.seed);
  json files = json::object();
  if (o.kind == "sparse_precision") {
    SparsePrecisionSpec spec;
    spec.p = o.p;
    spec.sparsity = o.sparsity;
    spec.construction = o.construction == "cholesky_factor" ? SparseConstruction::cholesky_factor
                                                            : SparseConstruction::diagonal_dominance;
    const auto inst = generate_sparse_precision(spec, rng);
    write_csv(out / "data.csv", sample_gaussian(inst.covariance, o.n, rng), numbered("V", o.p));
    write_csv(out / "covariance.csv", inst.covariance);
    write_csv(out / "precision.csv", inst.precision);
    write_edge_list(out / "graph.csv", inst.graph);
    write_tree_csv(out / "backbone.csv", inst.backbone);
    files = {{"data", "data.csv"}, {"covariance", "covariance.csv"}, {"precision", "precision.csv"},
             {"graph", "graph.csv"}, {"backbone", "backbone.csv"}};
  } else if (o.kind == "oracle_tree") {
    const auto inst = generate_tree_instance(o.p, o.edge_sd, rng);
    write_csv(out / "data.csv", sample_tree_data(inst.tree, inst.root, inst.edge_sd, o.n, rng),
              numbered("V", o.p));
    write_csv(out / "covariance.csv", inst.covariance);
    write_tree_csv(out / "backbone.csv", inst.tree);
    files = {{"data", "data.csv"}, {"covariance", "covariance.csv"}, {"backbone", "backbone.csv"}};
  } else if (o.kind == "blobs" || o.kind == "two_moons") {
    const Eigen::MatrixXd pts = o.kind == "blobs" ? generate_blobs(std::max(1, o.p / 3), o.spread, rng)
                                                  : generate_two_moons(o.p, o.noise, rng);
    write_csv(out / "data.csv", pts, numbered("P", static_cast<int>(pts.cols())));
    write_csv(out / "points.csv", pts.transpose(), {"x", "y"});
    files = {{"data", "data.csv"}, {"points", "points.csv"}};
  } else if (o.kind == "regimes") {
    RegimeSpec spec;
    spec.states = o.states;
    spec.p = o.p;
    spec.length = o.length;
    spec.series_per_condition = o.series_per_condition;
    spec.edge_sd = o.edge_sd;
    const auto data = generate_regime_data(spec, rng);
    json series = json::array();
    std::ofstream paths(out / "true_states.csv");
    paths << "series,t,state\n";
    for (std::size_t i = 0; i < data.series.size(); ++i) {
      const auto& s = data.series[i];
      const std::string file = s.name + ".csv";
      write_csv(out / file, s.y, numbered("V", spec.p));
      const bool is_test = static_cast<int>(i % spec.series_per_condition) >= spec.series_per_condition / 2;
      series.push_back({{"file", file}, {"subject", s.subject},
                        {"condition", s.condition == 0 ? "sticky" : "moving"},
                        {"split", is_test ? "test" : "train"}});
      for (std::size_t t = 0; t < data.paths[i].size(); ++t) paths << s.name << ',' << t + 1 << ',' << data.paths[i][t] + 1 << '\n';
    }
    for (int k = 0; k < spec.states; ++k) write_tree_csv(out / ("true_state_" + std::to_string(k + 1) + "_tree.csv"), data.trees[k]);
    write_json(out / "manifest.json", {{"tool", "bstree"},
                                       {"version", BSTREE_VERSION},
                                       {"command", "simulate"},
                                       {"spec", {{"kind", o.kind}, {"seed", o.seed}, {"p", o.p},
                                                 {"states", o.states}, {"length", o.length},
                                                 {"edge_sd", o.edge_sd}}},
                                       {"series", series},
                                       {"files", {{"true_states", "true_states.csv"}}}});
    return 0;
  } else {
    throw std::invalid_argument("unknown simulation kind '" + o.kind + "'");
  }
  write_manifest(out, "simulate",
                 {{"kind", o.kind}, {"p", o.p}, {"n", o.n}, {"sparsity", o.sparsity},
                  {"construction", o.construction}, {"edge_sd", o.edge_sd}, {"noise", o.noise},
                  {"seed", o.seed}},
                 files);
  return 0;
}

int run_recovery_benchmark(const RecoveryConfig& config, const fs::path& out) {
  const auto report = recovery_experiment(config);
  {
    std::ofstream rows(out / "recovery_rows.csv");
    rows << "n,method,replicate,seed,missed_backbone,false_edges,combined,estimated_edges,"
            "backbone_edges,graph_edges,backbone_outside_graph\n";
    for (const auto& r : report.rows) {
      rows << r.n << ',' << r.method << ',' << r.replicate << ',' << r.seed << ','
           << r.counts.missed_backbone << ',' << r.counts.false_edges << ',' << r.counts.combined
           << ',' << r.counts.estimated_edges << ',' << r.backbone_edges << ',' << r.graph_edges
           << ',' << r.backbone_outside_graph << '\n';
    }
    std::ofstream summary(out / "recovery_summary.csv");
    summary << std::setprecision(10) << "n,method,mean_combined,lower,upper,mean_missed,mean_false\n";
    for (const auto& s : report.summary) {
      summary << s.n << ',' << s.method << ',' << s.mean_combined << ',' << s.lower << ','
              << s.upper << ',' << s.mean_missed << ',' << s.mean_false << '\n';
    }
  }
  write_manifest(out, "benchmark", {{"experiment", "recovery"}, {"config", to_json(config)}},
                 {{"rows", "recovery_rows.csv"}, {"summary", "recovery_summary.csv"}});
  return 0;
}

int run_manifold_benchmark(const ManifoldConfig& config, const fs::path& out) {
  const auto result = manifold_uq_experiment(config);
  write_csv(out / "points.csv", result.points.transpose(), {"x", "y"});
  write_tree_csv(out / "mode_tree.csv", result.mode_tree);
  write_csv(out / "mcp.csv", result.mcp, numbered("P", static_cast<int>(result.points.cols())));
  {
    std::ofstream draws(out / "draws.jsonl");
    for (std::size_t i = 0; i < result.chain.draws.size(); ++i) {
      draws << draw_json(0, static_cast<int>(i), result.chain.draws[i]).dump() << '\n';
    }
    std::ofstream tau(out / "tau_trace.csv");
    tau << "chain,iteration,tau\n";
    for (std::size_t it = 0; it < result.chain.diagnostics.tau_trace.size(); ++it) {
      tau << 0 << ',' << it + 1 << ',' << result.chain.diagnostics.tau_trace[it] << '\n';
    }
    std::ofstream deg(out / "degree_trace.csv");
    deg << "chain,iteration";
    for (Eigen::Index c = 1; c <= result.points.cols(); ++c) deg << ",P" << c;
    deg << '\n';
    write_degree_trace(deg, 0, result.chain.diagnostics.degree_trace);
  }
  const auto& d = result.chain.diagnostics;
  write_json(out / "summary.json", {{"kind", to_string(config.kind)},
                                    {"mode_edges_above_90", result.mode_edges_above_90},
                                    {"mean_mode_edge_mcp", result.mean_mode_edge_mcp},
                                    {"connected_pairs_below_50", result.connected_pairs_below_50},
                                    {"accept_rate_tau", d.accept_rate_tau},
                                    {"ess_tau", d.ess_tau},
                                    {"seconds", d.seconds}});
  write_manifest(out, "benchmark",
                 {{"experiment", "manifold"},
                  {"kind", to_string(config.kind)},
                  {"points", config.points},
                  {"noise", config.noise},
                  {"spread", config.spread},
                  {"seed", config.seed},
                  {"iterations", config.chain.iterations},
                  {"burn_in", config.chain.burn_in},
                  {"alpha", config.alpha}},
                 {{"points", "points.csv"}, {"mode_tree", "mode_tree.csv"}, {"mcp", "mcp.csv"},
                  {"draws", "draws.jsonl"}, {"tau_trace", "tau_trace.csv"},
                  {"degree_trace", "degree_trace.csv"}, {"summary", "summary.json"}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian spanning-tree graphical models"};
  app.require_subcommand(1);

  fs::path data_path;
  fs::path config_path;
  fs::path out = "run";
  bool raw = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--data", data_path, "CSV, rows are samples, header names the variables")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--config", config_path, "JSON model configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory");
    sub->add_flag("--raw", raw, "Use values as given instead of standardizing columns");
  };

  auto* mcp = app.add_subcommand("mcp", "Marginal connecting probabilities and log partition function");
  add_common(mcp);
  auto* mode = app.add_subcommand("mode", "Posterior mode tree, tau estimate and mcp at that tau");
  add_common(mode);

  auto* fit = app.add_subcommand("fit", "Gibbs sampler over trees and tau");
  add_common(fit);
  ChainConfig chain;
  int chains = 1;
  std::string scan = "full";
  bool tau_averaged = false;
  fit->add_option("--iters", chain.iterations, "Sweeps per chain, burn-in included")->capture_default_str();
  fit->add_option("--burnin", chain.burn_in, "Burn-in sweeps")->capture_default_str();
  fit->add_option("--seed", chain.seed, "Random seed")->capture_default_str();
  fit->add_option("--chains", chains, "Independent chains")->capture_default_str();
  fit->add_option("--thin", chain.thin, "Keep every k-th draw")->capture_default_str();
  fit->add_option("--scan", scan, "full or random")->check(CLI::IsMember({"full", "random"}));
  fit->add_option("--scan-edges", chain.random_scan_edges, "Edges per random-scan sweep");
  fit->add_option("--delta", chain.delta, "Initial tau step half-width");
  fit->add_flag("--fix-tau", chain.fix_tau, "Hold tau at its initial value");
  fit->add_flag("--tau-averaged-mcp", tau_averaged, "Also write closed-form mcp averaged over tau draws");

  auto* hmm = app.add_subcommand("hmm", "Tree hidden Markov model over a directory of series");
  fs::path hmm_dir;
  fs::path hmm_manifest;
  HmmConfig hmm_config;
  hmm->add_option("--dir", hmm_dir, "Directory holding the series CSVs")->required()->check(CLI::ExistingDirectory);
  hmm->add_option("--manifest", hmm_manifest, "Manifest JSON (default: <dir>/manifest.json)");
  hmm->add_option("--out", out, "Output directory");
  hmm->add_option("--states", hmm_config.states, "Number of tree states")->capture_default_str();
  hmm->add_option("--iters", hmm_config.iterations, "Gibbs iterations")->capture_default_str();
  hmm->add_option("--burnin", hmm_config.burn_in, "Burn-in iterations")->capture_default_str();
  hmm->add_option("--seed", hmm_config.seed, "Random seed")->capture_default_str();
  hmm->add_option("--alpha", hmm_config.alpha, "Shrinkage shape")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Write a synthetic data set and its ground truth");
  SimulateOptions sim;
  simulate->add_option("--kind", sim.kind, "sparse_precision, oracle_tree, blobs, two_moons or regimes")
      ->check(CLI::IsMember({"sparse_precision", "oracle_tree", "blobs", "two_moons", "regimes"}));
  simulate->add_option("--p", sim.p, "Variables (points for blobs/two_moons)")->capture_default_str();
  simulate->add_option("--n", sim.n, "Samples")->capture_default_str();
  simulate->add_option("--sparsity", sim.sparsity, "Pattern density")->capture_default_str();
  simulate->add_option("--construction", sim.construction, "diagonal_dominance or cholesky_factor")
      ->check(CLI::IsMember({"diagonal_dominance", "cholesky_factor"}));
  simulate->add_option("--edge-sd", sim.edge_sd, "Edge noise for tree-generated data")->capture_default_str();
  simulate->add_option("--noise", sim.noise, "Point noise (two_moons)")->capture_default_str();
  simulate->add_option("--spread", sim.spread, "Blob standard deviation (blobs)")->capture_default_str();
  simulate->add_option("--states", sim.states, "HMM states (regimes)")->capture_default_str();
  simulate->add_option("--length", sim.length, "Series length (regimes)")->capture_default_str();
  simulate->add_option("--series", sim.series_per_condition, "Series per condition (regimes)")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--out", out, "Output directory");

  auto* bench = app.add_subcommand("benchmark", "Recovery-versus-n or manifold uncertainty study");
  std::string experiment = "recovery";
  RecoveryConfig rec;
  std::string truth = "sparse_precision";
  std::string n_grid = "25,50,100,200,400";
  std::string methods = "mode,threshold:0.5,threshold:0.9";
  std::string construction = "diagonal_dominance";
  int sweeps = 200;
  ManifoldConfig man;
  std::string manifold_kind = "two_moons";
  bench->add_option("--experiment", experiment, "recovery or manifold")->check(CLI::IsMember({"recovery", "manifold"}));
  bench->add_option("--truth", truth, "sparse_precision or oracle_tree")->check(CLI::IsMember({"sparse_precision", "oracle_tree"}));
  bench->add_option("--p", rec.sparse.p, "Variables")->capture_default_str();
  bench->add_option("--sparsity", rec.sparse.sparsity, "Pattern density")->capture_default_str();
  bench->add_option("--construction", construction, "diagonal_dominance or cholesky_factor")
      ->check(CLI::IsMember({"diagonal_dominance", "cholesky_factor"}));
  bench->add_option("--n-grid", n_grid, "Comma-separated sample sizes")->capture_default_str();
  bench->add_option("--replicates", rec.replicates, "Replicates per grid point")->capture_default_str();
  bench->add_option("--methods", methods, "mode, mcp_plugin[:c], mcmc_mcp[:c], threshold:c")->capture_default_str();
  bench->add_option("--sweeps", sweeps, "Sweeps for mcmc_mcp")->capture_default_str();
  bench->add_option("--kind", manifold_kind, "blobs or two_moons")->check(CLI::IsMember({"blobs", "two_moons"}));
  bench->add_option("--points", man.points, "Points (manifold)")->capture_default_str();
  bench->add_option("--noise", man.noise, "Point noise (two_moons)")->capture_default_str();
  bench->add_option("--spread", man.spread, "Blob standard deviation (blobs)")->capture_default_str();
  bench->add_option("--iters", man.chain.iterations, "Sweeps (manifold)")->capture_default_str();
  bench->add_option("--burnin", man.chain.burn_in, "Burn-in sweeps (manifold)")->capture_default_str();
  std::uint64_t bench_seed = 1;
  bench->add_option("--seed", bench_seed, "Random seed")->capture_default_str();
  bench->add_option("--out", out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(out);
    if (mcp->parsed()) return run_mcp(data_path, config_path, out, raw);
    if (mode->parsed()) return run_mode(data_path, config_path, out, raw);
    if (fit->parsed()) {
      chain.scan = scan == "random" ? ScanKind::random : ScanKind::full;
      return run_fit(data_path, config_path, out, raw, chain, chains, tau_averaged);
    }
    if (hmm->parsed()) return run_hmm(hmm_dir, hmm_manifest, out, hmm_config);
    if (simulate->parsed()) return run_simulate(sim, out);
    if (bench->parsed()) {
      if (experiment == "recovery") {
        rec.truth = truth == "oracle_tree" ? TruthKind::oracle_tree : TruthKind::sparse_precision;
        rec.sparse.construction = construction == "cholesky_factor" ? SparseConstruction::cholesky_factor
                                                                    : SparseConstruction::diagonal_dominance;
        rec.tree_p = rec.sparse.p;
        rec.n_grid = parse_int_list(n_grid);
        rec.methods = parse_methods(methods, sweeps);
        rec.seed = bench_seed;
        return run_recovery_benchmark(rec, out);
      }
      man.kind = manifold_kind == "blobs" ? ManifoldKind::blobs : ManifoldKind::two_moons;
      man.seed = bench_seed;
      return run_manifold_benchmark(man, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
