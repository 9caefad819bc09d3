#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "losstomo/analysis.hpp"
#include "losstomo/estimators.hpp"

namespace losstomo {

// "%.12g"; NaN as "nan".
std::string format_number(double value);

// node,estimator,A_hat,alpha_hat,flags  (one row per non-root node)
void write_estimates_csv(std::ostream& out, const EstimateSet& estimates);
void write_estimates_json(std::ostream& out, const EstimateSet& estimates, const std::string& method);

// node,estimator,crb_single,crb_n,mc_mean,mc_var,excluded
void write_reports_csv(std::ostream& out, const std::vector<VarianceReport>& reports);
// Array of objects with every VarianceReport field; NaN becomes null.
void write_reports_json(std::ostream& out, const std::vector<VarianceReport>& reports);

}  // namespace losstomo
