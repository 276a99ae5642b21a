#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ivreg {

/// Closed real interval [lower, upper]. Degenerate intervals are legal.
class Interval {
public:
    Interval() = default;
    /// Throws ValidationError when an endpoint is not finite or lower > upper.
    Interval(double lower, double upper);

    static Interval point(double v) { return Interval(v, v); }

    double lower() const noexcept { return lower_; }
    double upper() const noexcept { return upper_; }
    double center() const noexcept { return (lower_ + upper_) / 2.0; }
    double half_range() const noexcept { return (upper_ - lower_) / 2.0; }

    friend bool operator==(const Interval&, const Interval&) = default;

private:
    double lower_ = 0.0;
    double upper_ = 0.0;
};

/// Named interval columns, column-major, with an optional plain-text label
/// column (e.g. the concept produced by aggregation). No column is designated
/// as the response.
class IntervalFrame {
public:
    IntervalFrame(std::vector<std::string> names, std::vector<std::vector<Interval>> columns,
                  std::optional<std::string> label_name = std::nullopt,
                  std::vector<std::string> labels = {});

    std::size_t rows() const noexcept { return columns_.front().size(); }
    std::size_t cols() const noexcept { return columns_.size(); }

    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<Interval>& column(std::size_t j) const { return columns_.at(j); }
    /// Throws SchemaMismatch naming the column when absent.
    const std::vector<Interval>& column(const std::string& name) const;
    std::optional<std::size_t> find(const std::string& name) const;

    const std::optional<std::string>& label_name() const noexcept { return label_name_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

private:
    std::vector<std::string> names_;
    std::vector<std::vector<Interval>> columns_;
    std::optional<std::string> label_name_;
    std::vector<std::string> labels_;
};

/// p interval predictors plus one interval response over n rows.
class IntervalTable {
public:
    IntervalTable(std::vector<std::string> predictor_names,
                  std::vector<std::vector<Interval>> predictors, std::string response_name,
                  std::vector<Interval> response);

    /// Every frame column other than `response` becomes a predictor, in frame order.
    static IntervalTable from_frame(const IntervalFrame& frame, const std::string& response);
    static IntervalTable from_frame(const IntervalFrame& frame, const std::string& response,
                                    const std::vector<std::string>& predictors);

    std::size_t rows() const noexcept { return response_.size(); }
    std::size_t predictor_count() const noexcept { return predictors_.size(); }

    const std::vector<std::string>& predictor_names() const noexcept { return predictor_names_; }
    const std::string& response_name() const noexcept { return response_name_; }
    const std::vector<Interval>& predictor(std::size_t j) const { return predictors_.at(j); }
    const std::vector<Interval>& response() const noexcept { return response_; }

    /// Row subset in the given order (used for cross-validation folds).
    IntervalTable select_rows(const std::vector<std::size_t>& rows) const;

    /// Response first, then predictors.
    IntervalFrame to_frame() const;

private:
    std::vector<std::string> predictor_names_;
    std::vector<std::vector<Interval>> predictors_;
    std::string response_name_;
    std::vector<Interval> response_;
};

/// Midpoints and half-ranges of a table.
struct CenterRangeView {
    Eigen::MatrixXd centers_X;
    Eigen::VectorXd centers_y;
    Eigen::MatrixXd halfranges_X;
    Eigen::VectorXd halfranges_y;
};

CenterRangeView to_center_range(const IntervalTable& table);

/// Lower/upper endpoint matrices of the predictors (n x p).
Eigen::MatrixXd lower_endpoints(const IntervalFrame& frame, const std::vector<std::string>& names);
Eigen::MatrixXd upper_endpoints(const IntervalFrame& frame, const std::vector<std::string>& names);
Eigen::MatrixXd centers(const IntervalFrame& frame, const std::vector<std::string>& names);
Eigen::MatrixXd half_ranges(const IntervalFrame& frame, const std::vector<std::string>& names);

/// Untyped table of text cells as read from a classic CSV.
struct ClassicTable {
    std::vector<std::string> names;
    std::vector<std::vector<std::string>> rows;
};

/// Group classic rows by `concept_column` and summarise each value column as
/// [min, max] over the group. Output rows follow first appearance of each
/// concept value; the concept becomes the frame's label column.
/// An empty `value_columns` means every column except the concept.
IntervalFrame aggregate_classic(const ClassicTable& classic, const std::string& concept_column,
                                const std::vector<std::string>& value_columns = {});

ClassicTable read_classic_csv(const std::filesystem::path& path);
ClassicTable parse_classic_csv(const std::string& text);

/// `<name>_lo,<name>_hi` column pairs. At most one unpaired column is allowed
/// and becomes the label column.
IntervalFrame read_interval_csv(const std::filesystem::path& path);
IntervalFrame parse_interval_csv(const std::string& text);
IntervalTable read_interval_csv(const std::filesystem::path& path, const std::string& response);

void write_interval_csv(const IntervalFrame& frame, const std::filesystem::path& path);
void write_interval_csv(const IntervalTable& table, const std::filesystem::path& path);
std::string format_interval_csv(const IntervalFrame& frame);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace ivreg
