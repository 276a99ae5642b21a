#include "ivreg/metrics.hpp"

#include "ivreg/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ivreg {

std::optional<double> squared_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size() || a.size() < 2) return std::nullopt;
    const Eigen::ArrayXd da = a.array() - a.mean();
    const Eigen::ArrayXd db = b.array() - b.mean();
    const double saa = (da * da).sum();
    const double sbb = (db * db).sum();
    if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
    const double sab = (da * db).sum();
    const double r2 = (sab * sab) / (saa * sbb);
    // Rounding can push a perfect correlation a hair past 1.
    return std::min(r2, 1.0);
}

EvalReport evaluate(const std::vector<Interval>& observed, const IntervalPrediction& predicted) {
    const auto n = observed.size();
    if (n == 0) throw ValidationError("cannot evaluate an empty prediction set");
    if (predicted.lower.size() != static_cast<Eigen::Index>(n) ||
        predicted.upper.size() != static_cast<Eigen::Index>(n)) {
        throw ValidationError("observed and predicted lengths differ");
    }
    Eigen::VectorXd yl(static_cast<Eigen::Index>(n));
    Eigen::VectorXd yu(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        yl(static_cast<Eigen::Index>(i)) = observed[i].lower();
        yu(static_cast<Eigen::Index>(i)) = observed[i].upper();
    }
    EvalReport report;
    report.n = n;
    report.rmse_l = std::sqrt((yl - predicted.lower).squaredNorm() / static_cast<double>(n));
    report.rmse_u = std::sqrt((yu - predicted.upper).squaredNorm() / static_cast<double>(n));
    report.r2_l = squared_correlation(yl, predicted.lower);
    report.r2_u = squared_correlation(yu, predicted.upper);
    for (std::size_t i = 0; i < n; ++i) {
        if (predicted.lower(static_cast<Eigen::Index>(i)) > predicted.upper(static_cast<Eigen::Index>(i))) {
            ++report.ordering_violations;
        }
    }
    return report;
}

namespace {

std::string fixed(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.7g", v);
    return buf;
}

std::string fixed(const std::optional<double>& v) { return v ? fixed(*v) : "undefined"; }

}  // namespace

std::string format_report_text(const std::string& method, const EvalReport& report) {
    char line[256];
    std::ostringstream out;
    std::snprintf(line, sizeof line, "%-10s %12s %12s %12s %12s %10s\n", "method", "RMSE_L", "RMSE_U",
                  "r2_L", "r2_U", "violations");
    out << line;
    std::snprintf(line, sizeof line, "%-10s %12s %12s %12s %12s %10zu\n", method.c_str(),
                  fixed(report.rmse_l).c_str(), fixed(report.rmse_u).c_str(), fixed(report.r2_l).c_str(),
                  fixed(report.r2_u).c_str(), report.ordering_violations);
    out << line;
    return out.str();
}

std::string report_csv_header() { return "method,RMSE_L,RMSE_U,r2_L,r2_U,violations"; }

std::string format_report_csv(const std::string& method, const EvalReport& report) {
    const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    std::ostringstream out;
    out << method << ',' << format_double(report.rmse_l) << ',' << format_double(report.rmse_u) << ','
        << opt(report.r2_l) << ',' << opt(report.r2_u) << ',' << report.ordering_violations;
    return out.str();
}

}  // namespace ivreg
