#include "losstomo/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "losstomo/analysis.hpp"
#include "losstomo/errors.hpp"
#include "losstomo/probe_simulator.hpp"
#include "losstomo/report_io.hpp"
#include "losstomo/statistics.hpp"
#include "losstomo/tree_model.hpp"

namespace losstomo::cli {

void ExperimentConfig::validate() const {
  if (probes < 1) throw ConfigError("--n must be at least 1");
  if (replications < 1) throw ConfigError("--reps must be at least 1");
  if (methods.empty()) throw ConfigError("no methods given");
  if (alpha && !(*alpha >= 0.0 && *alpha <= 1.0)) throw ConfigError("--alpha must lie in [0, 1]");
  if (!tree_path.empty() && !std::filesystem::exists(tree_path))
    throw ConfigError("tree spec '" + tree_path + "' does not exist");
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

TreeSpec load_model(const ExperimentConfig& cfg) {
  TreeSpec spec = load_tree_spec(cfg.tree_path);
  if (cfg.alpha) spec.model = LossModel::uniform(spec.tree, *cfg.alpha);
  return spec;
}

// Writes to --out when given, else to the command's stdout stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ConfigError("cannot write '" + path + "'");
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw ConfigError("--format must be csv or json");
}

struct AnalysisRow {
  NodeId node;
  std::string estimator;
  double delta;
  double information;
  double crb_single;
  double info_low;
  double info_high;
};

double guarded(auto&& f) {
  try {
    return f();
  } catch (const SingularityError&) {
    return kNaN;
  }
}

std::vector<AnalysisRow> analysis_table(const TrueRates& rates) {
  const Tree& tree = rates.tree();
  std::vector<AnalysisRow> rows;
  for (NodeId k = 1; k < tree.node_count(); ++k) {
    const auto kids = tree.children(k);
    if (kids.size() < 2) continue;
    const double a = rates.path_rate(k);
    const NodeSet all(kids.begin(), kids.end());
    const NodeSet pair(kids.begin(), kids.begin() + 2);

    const double beta = rates.subtree_rate(k);
    rows.push_back({k, "mle", beta, guarded([&] { return fisher_mle(rates, k); }),
                    guarded([&] { return crb_from_delta(a, beta); }), kNaN, kNaN});
    rows.push_back({k, "merged", beta, guarded([&] { return fisher_from_delta(a, beta); }),
                    guarded([&] { return merged_mle_variance(rates, k, default_partition(tree, k)); }), kNaN, kNaN});
    const double psi_pair = rates.all_observe(k, pair);
    rows.push_back({k, "ibe-pair", psi_pair, guarded([&] { return fisher_ibe(rates, k, pair); }),
                    guarded([&] { return crb_from_delta(a, psi_pair); }), kNaN, kNaN});
    if (kids.size() > 2) {
      const double psi_all = rates.all_observe(k, all);
      rows.push_back({k, "ibe", psi_all, guarded([&] { return fisher_ibe(rates, k, all); }),
                      guarded([&] { return crb_from_delta(a, psi_all); }), kNaN, kNaN});
    }
    InformationRange range{kNaN, kNaN};
    try {
      range = bwe_information_range(rates, k, 2);
    } catch (const SingularityError&) {
    }
    rows.push_back({k, "bwe:2", kNaN, kNaN, kNaN, range.low, range.high});
  }
  return rows;
}

void write_analysis(std::ostream& out, const std::vector<AnalysisRow>& rows, Format format, const std::string& mode) {
  if (format == Format::Csv) {
    out << "node,estimator,delta,information,crb_single,info_low,info_high\n";
    for (const auto& r : rows)
      out << r.node << ',' << r.estimator << ',' << format_number(r.delta) << ',' << format_number(r.information)
          << ',' << format_number(r.crb_single) << ',' << format_number(r.info_low) << ','
          << format_number(r.info_high) << '\n';
    return;
  }
  auto num = [](double v) -> nlohmann::json { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"node", r.node},
                   {"estimator", r.estimator},
                   {"delta", num(r.delta)},
                   {"information", num(r.information)},
                   {"crb_single", num(r.crb_single)},
                   {"info_low", num(r.info_low)},
                   {"info_high", num(r.info_high)}});
  out << nlohmann::json{{"mode", mode}, {"rows", std::move(arr)}}.dump(2) << '\n';
}

// Node 1 with three receivers below it, every link at rate alpha.
std::vector<std::pair<std::string, double>> example_variances(double alpha) {
  const Tree tree = Tree::from_parents({0, 0, 1, 1, 1});
  const TrueRates rates(tree, LossModel::uniform(tree, alpha));
  const double a = rates.path_rate(1);
  return {
      {"direct", crb_from_delta(a, 1.0)},
      {"mle", crb_variance(rates, 1, EstimatorTag{EstimatorKind::Mle})},
      {"ibe-pair", crb_variance(rates, 1, EstimatorTag{EstimatorKind::Ibe, NodeSet{2, 3}})},
      {"ibe-all", crb_variance(rates, 1, EstimatorTag{EstimatorKind::Ibe, NodeSet{2, 3, 4}})},
  };
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Loss tomography on multicast trees: simulate, estimate, analyze"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  double alpha = kNaN;
  std::string format = "csv";
  std::string methods;
  std::string method = "mle";
  std::string obs_path;

  auto add_common = [&](CLI::App* sub, bool needs_tree) {
    auto* t = sub->add_option("--tree", cfg.tree_path, "tree spec file (<node> <parent> <pass-rate> per line)");
    if (needs_tree) t->required();
    sub->add_option("--alpha", alpha, "uniform pass rate overriding the tree file");
    sub->add_option("--out", cfg.output_path, "output file (default stdout)");
  };

  auto* sim = app.add_subcommand("simulate", "simulate probes and write an observation dump");
  add_common(sim, true);
  sim->add_option("--n", cfg.probes, "probe count")->required();
  sim->add_option("--seed", cfg.seed, "RNG seed");

  auto* est = app.add_subcommand("estimate", "estimate path and link rates");
  add_common(est, true);
  est->add_option("--obs", obs_path, "observation dump (default: simulate inline)");
  est->add_option("--n", cfg.probes, "probe count for inline simulation");
  est->add_option("--seed", cfg.seed, "RNG seed for inline simulation");
  est->add_option("--method", method, "mle | rse[:s] | bwe[:i] | ibe | ibe-pair | ibe:s | merged");
  est->add_option("--format", format, "csv | json");

  auto* ana = app.add_subcommand("analyze", "Fisher information and variance formulas per node");
  add_common(ana, true);
  ana->add_option("--obs", obs_path, "evaluate at MLE estimates from this dump instead of the true model");
  ana->add_option("--format", format, "csv | json");

  auto* mc = app.add_subcommand("mc", "Monte-Carlo variance study");
  add_common(mc, true);
  mc->add_option("--n", cfg.probes, "probes per replication")->required();
  mc->add_option("--reps", cfg.replications, "replications")->required();
  mc->add_option("--seed", cfg.seed, "base seed; replication r uses seed + r");
  mc->add_option("--methods", methods, "comma-separated methods")->default_val("mle,merged,ibe");
  mc->add_option("--format", format, "csv | json");

  auto* rep = app.add_subcommand("reproduce-example", "variances of four estimators on a three-receiver node");
  alpha = kNaN;
  rep->add_option("--alpha", alpha, "pass rate of every link")->default_val(0.99);
  rep->add_option("--format", format, "csv | json");
  rep->add_option("--out", cfg.output_path, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (!std::isnan(alpha)) cfg.alpha = alpha;
    cfg.format = parse_format(format);

    if (*sim) {
      cfg.validate();
      const TreeSpec spec = load_model(cfg);
      const auto result = simulate(spec.tree, spec.model, cfg.probes, cfg.seed);
      Sink sink(cfg.output_path, out);
      write_observations(sink.get(), result.observations);
    } else if (*est) {
      cfg.methods = {parse_method(method)};
      cfg.validate();
      const TreeSpec spec = load_model(cfg);
      const ObservationMatrix obs = obs_path.empty()
                                        ? simulate(spec.tree, spec.model, cfg.probes, cfg.seed).observations
                                        : load_observations(obs_path);
      const SubtreeStatistics stats(spec.tree, obs);
      const EstimateSet estimates = estimate_tree(stats, cfg.methods.front());
      Sink sink(cfg.output_path, out);
      if (cfg.format == Format::Csv)
        write_estimates_csv(sink.get(), estimates);
      else
        write_estimates_json(sink.get(), estimates, cfg.methods.front().label());
    } else if (*ana) {
      cfg.validate();
      const TreeSpec spec = load_model(cfg);
      std::string mode = "model";
      LossModel model = spec.model;
      if (!obs_path.empty()) {
        const SubtreeStatistics stats(spec.tree, load_observations(obs_path));
        model = model_from_estimates(spec.tree, estimate_tree(stats, Method{}));
        mode = "plug-in";
      }
      const TrueRates rates(spec.tree, model);
      Sink sink(cfg.output_path, out);
      write_analysis(sink.get(), analysis_table(rates), cfg.format, mode);
    } else if (*mc) {
      cfg.methods = parse_method_list(methods);
      cfg.validate();
      const TreeSpec spec = load_model(cfg);
      MonteCarloConfig mcc;
      mcc.probes = cfg.probes;
      mcc.replications = cfg.replications;
      mcc.seed = cfg.seed;
      mcc.methods = cfg.methods;
      const auto reports = monte_carlo(spec.tree, spec.model, mcc);
      Sink sink(cfg.output_path, out);
      if (cfg.format == Format::Csv)
        write_reports_csv(sink.get(), reports);
      else
        write_reports_json(sink.get(), reports);
    } else if (*rep) {
      if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("--alpha must lie in (0, 1]");
      const auto rows = example_variances(alpha);
      Sink sink(cfg.output_path, out);
      if (cfg.format == Format::Csv) {
        sink.get() << "estimator,variance,rounded\n";
        for (const auto& [name, v] : rows) sink.get() << name << ',' << format_number(v) << ',' << fixed4(v) << '\n';
      } else {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [name, v] : rows) arr.push_back({{"estimator", name}, {"variance", v}});
        sink.get() << nlohmann::json{{"alpha", alpha}, {"rows", std::move(arr)}}.dump(2) << '\n';
      }
    }
  } catch (const CapacityError& e) {
    err << "error: " << e.what() << '\n';
    return kCapacityError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const SingularityError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace losstomo::cli
