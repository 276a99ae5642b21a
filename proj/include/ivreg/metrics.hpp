#pragma once

#include "ivreg/interval_models.hpp"
#include "ivreg/interval_table.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace ivreg {

/// Lower/upper boundary RMSE and squared correlations.
///
/// r2_l / r2_u are empty when either series of the boundary has zero variance
/// (or n < 2); the correlation is undefined there.
struct EvalReport {
    double rmse_l = 0.0;
    double rmse_u = 0.0;
    std::optional<double> r2_l;
    std::optional<double> r2_u;
    std::size_t n = 0;
    std::size_t ordering_violations = 0;
};

EvalReport evaluate(const std::vector<Interval>& observed, const IntervalPrediction& predicted);

/// Squared Pearson correlation, empty if undefined.
std::optional<double> squared_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

std::string format_report_text(const std::string& method, const EvalReport& report);
std::string report_csv_header();
std::string format_report_csv(const std::string& method, const EvalReport& report);

}  // namespace ivreg
