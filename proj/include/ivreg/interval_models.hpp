#pragma once

#include "ivreg/interval_table.hpp"
#include "ivreg/solvers.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ivreg {

enum class Family { CM, CRM };
enum class Penalty { None, Ridge, Lasso, ElasticNet };

/// One of the eight interval methods plus its hyperparameters.
class MethodSpec {
public:
    static MethodSpec cm() { return MethodSpec(Family::CM, Penalty::None, 0, 0, 0); }
    static MethodSpec crm() { return MethodSpec(Family::CRM, Penalty::None, 0, 0, 0); }
    static MethodSpec ridge(Family family, double lambda_center, double lambda_range);
    static MethodSpec lasso(Family family, double lambda_center, double lambda_range);
    static MethodSpec elastic_net(Family family, double lambda_center, double lambda_range,
                                  double alpha);
    /// Shared lambda for both fits.
    static MethodSpec make(Family family, Penalty penalty, double lambda = 0.0, double alpha = 1.0);

    /// Parses the CLI name ("cm", "lasso-crm", ...). Hyperparameters are zero.
    static MethodSpec parse(std::string_view name);
    std::string name() const;

    Family family() const noexcept { return family_; }
    Penalty penalty() const noexcept { return penalty_; }
    double lambda_center() const noexcept { return lambda_center_; }
    double lambda_range() const noexcept { return lambda_range_; }
    /// Elastic-net mixing; 1 for lasso and 0 for ridge so every penalized
    /// method maps onto PenaltySpec.
    double alpha() const noexcept { return alpha_; }

    bool is_selecting() const noexcept {
        return penalty_ == Penalty::Lasso || penalty_ == Penalty::ElasticNet;
    }

    MethodSpec with_lambdas(double lambda_center, double lambda_range) const;

    friend bool operator==(const MethodSpec&, const MethodSpec&) = default;

private:
    MethodSpec(Family f, Penalty p, double lc, double lr, double a);

    Family family_;
    Penalty penalty_;
    double lambda_center_;
    double lambda_range_;
    double alpha_;
};

/// Coefficient magnitude above which a center predictor counts as selected.
inline constexpr double kSupportThreshold = 1e-10;

struct FittedModel {
    MethodSpec spec;
    CoefficientSet center;
    std::optional<CoefficientSet> range;
    std::vector<std::string> predictor_names;
    std::string response_name;
    /// Set when a selecting CRM center fit kept no predictor; the range model
    /// is then intercept-only.
    bool empty_support = false;

    /// Indices j with |center beta_j| > kSupportThreshold.
    std::vector<std::size_t> center_support() const;
};

struct IntervalPrediction {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    /// Rows with lower > upper in the returned vectors.
    std::size_t ordering_violations = 0;
    /// Rows whose endpoints were swapped by the optional clamp.
    std::size_t clamped = 0;
};

struct PredictOptions {
    bool clamp = false;
};

FittedModel fit(const IntervalTable& table, const MethodSpec& spec,
                const SolverOptions& options = {});

IntervalPrediction predict(const FittedModel& model, const IntervalFrame& data,
                           const PredictOptions& options = {});
IntervalPrediction predict(const FittedModel& model, const IntervalTable& data,
                           const PredictOptions& options = {});

/// Center-model predictions for CRM families (midpoint of the interval
/// prediction) and the range-model predictions.
Eigen::VectorXd predict_centers(const FittedModel& model, const IntervalFrame& data);
Eigen::VectorXd predict_half_ranges(const FittedModel& model, const IntervalFrame& data);

inline constexpr std::string_view kModelFormatTag = "ivreg-model";
inline constexpr int kModelFormatVersion = 1;

std::string serialize(const FittedModel& model);
/// Throws VersionMismatch for another format version, ValidationError when malformed.
FittedModel deserialize(const std::string& text);

namespace detail {

/// Fits one component (center or range) using only `columns` of X; the
/// remaining betas are exactly zero. An empty column set gives an
/// intercept-only fit.
CoefficientSet fit_component(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const std::vector<std::size_t>& columns, Penalty penalty, double lambda,
                             double alpha, const SolverOptions& options,
                             const Eigen::VectorXd* warm_start);

/// Columns the range model may use: the center support for selecting
/// penalties, minus constant half-range columns.
std::vector<std::size_t> range_columns(const Eigen::MatrixXd& halfranges_X,
                                       const CoefficientSet& center, Penalty penalty);

}  // namespace detail

}  // namespace ivreg
