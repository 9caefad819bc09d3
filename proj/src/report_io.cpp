#include "losstomo/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "json.hpp"

namespace losstomo {

namespace {

nlohmann::json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

void write_estimates_csv(std::ostream& out, const EstimateSet& estimates) {
  out << "node,estimator,A_hat,alpha_hat,flags\n";
  for (std::size_t k = 1; k < estimates.path.size(); ++k) {
    const Estimate& e = estimates.path[k];
    const Flags flags = e.flags | estimates.link_flags[k];
    out << k << ',' << e.estimator.label() << ',' << format_number(e.value) << ','
        << format_number(estimates.link[k]) << ',' << flags.to_string() << '\n';
  }
}

void write_estimates_json(std::ostream& out, const EstimateSet& estimates, const std::string& method) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t k = 1; k < estimates.path.size(); ++k) {
    const Estimate& e = estimates.path[k];
    nodes.push_back({{"node", k},
                     {"estimator", e.estimator.label()},
                     {"A_hat", number_or_null(e.value)},
                     {"alpha_hat", number_or_null(estimates.link[k])},
                     {"flags", e.flags.names()},
                     {"link_flags", estimates.link_flags[k].names()}});
  }
  const nlohmann::json doc{{"method", method}, {"nodes", std::move(nodes)}};
  out << doc.dump(2) << '\n';
}

void write_reports_csv(std::ostream& out, const std::vector<VarianceReport>& reports) {
  out << "node,estimator,crb_single,crb_n,mc_mean,mc_var,excluded\n";
  for (const auto& r : reports) {
    out << r.node << ',' << r.estimator << ',' << format_number(r.crb_single_obs) << ',' << format_number(r.crb_n)
        << ',' << format_number(r.mc_mean) << ',' << format_number(r.mc_variance) << ',' << r.excluded << '\n';
  }
}

void write_reports_json(std::ostream& out, const std::vector<VarianceReport>& reports) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : reports) {
    doc.push_back({{"node", r.node},
                   {"estimator", r.estimator},
                   {"crb_single_obs", number_or_null(r.crb_single_obs)},
                   {"crb_n", number_or_null(r.crb_n)},
                   {"mc_mean", number_or_null(r.mc_mean)},
                   {"mc_variance", number_or_null(r.mc_variance)},
                   {"replications", r.replications},
                   {"excluded", r.excluded},
                   {"n", r.n}});
  }
  out << doc.dump(2) << '\n';
}

}  // namespace losstomo
