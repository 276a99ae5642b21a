#include "ivreg/interval_table.hpp"

#include "ivreg/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace ivreg {

namespace {

void require_unique(const std::vector<std::string>& names) {
    std::unordered_set<std::string> seen;
    for (const auto& name : names) {
        if (name.empty()) throw ValidationError("empty variable name");
        if (!seen.insert(name).second) throw ValidationError("duplicate variable name '" + name + "'");
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw ValidationError("error writing '" + path.string() + "'");
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return std::string(s.substr(first, last - first + 1));
}

// One CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_record(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            fields.push_back(was_quoted ? cur : trim(cur));
            cur.clear();
            was_quoted = false;
        } else {
            cur += c;
        }
    }
    if (quoted) throw ValidationError("line " + std::to_string(line_no) + ": unterminated quote");
    fields.push_back(was_quoted ? cur : trim(cur));
    return fields;
}

std::vector<std::vector<std::string>> split_lines(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        records.push_back(split_record(line, line_no));
    }
    return records;
}

std::optional<double> parse_number(const std::string& cell) {
    std::string_view s = cell;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

double require_number(const std::string& cell, std::size_t row, const std::string& column) {
    const auto v = parse_number(cell);
    if (!v) {
        throw ValidationError("row " + std::to_string(row) + ", column '" + column +
                              "': non-numeric value '" + cell + "'");
    }
    return *v;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

Eigen::MatrixXd endpoint_matrix(const IntervalFrame& frame, const std::vector<std::string>& names,
                                double (*get)(const Interval&)) {
    Eigen::MatrixXd M(static_cast<Eigen::Index>(frame.rows()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto& col = frame.column(names[j]);
        for (std::size_t i = 0; i < col.size(); ++i) {
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = get(col[i]);
        }
    }
    return M;
}

}  // namespace

Interval::Interval(double lower, double upper) : lower_(lower), upper_(upper) {
    if (!std::isfinite(lower) || !std::isfinite(upper)) {
        throw ValidationError("interval endpoints must be finite");
    }
    if (lower > upper) {
        throw ValidationError("interval lower bound " + format_double(lower) +
                              " exceeds upper bound " + format_double(upper));
    }
}

IntervalFrame::IntervalFrame(std::vector<std::string> names,
                             std::vector<std::vector<Interval>> columns,
                             std::optional<std::string> label_name, std::vector<std::string> labels)
    : names_(std::move(names)),
      columns_(std::move(columns)),
      label_name_(std::move(label_name)),
      labels_(std::move(labels)) {
    if (names_.empty()) throw ValidationError("interval frame needs at least one column");
    if (names_.size() != columns_.size()) throw ValidationError("column name count mismatch");
    require_unique(names_);
    if (label_name_ && std::find(names_.begin(), names_.end(), *label_name_) != names_.end()) {
        throw ValidationError("label column '" + *label_name_ + "' clashes with an interval variable");
    }
    const auto n = columns_.front().size();
    if (n == 0) throw ValidationError("interval frame has no rows");
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (columns_[j].size() != n) {
            throw ValidationError("column '" + names_[j] + "' has " +
                                  std::to_string(columns_[j].size()) + " rows, expected " +
                                  std::to_string(n));
        }
    }
    if (label_name_ && labels_.size() != n) throw ValidationError("label column length mismatch");
    if (!label_name_ && !labels_.empty()) throw ValidationError("labels given without a label column");
}

std::optional<std::size_t> IntervalFrame::find(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
}

const std::vector<Interval>& IntervalFrame::column(const std::string& name) const {
    const auto j = find(name);
    if (!j) throw SchemaMismatch("missing column '" + name + "'");
    return columns_[*j];
}

IntervalTable::IntervalTable(std::vector<std::string> predictor_names,
                             std::vector<std::vector<Interval>> predictors,
                             std::string response_name, std::vector<Interval> response)
    : predictor_names_(std::move(predictor_names)),
      predictors_(std::move(predictors)),
      response_name_(std::move(response_name)),
      response_(std::move(response)) {
    if (predictors_.empty()) throw ValidationError("interval table needs at least one predictor");
    if (predictor_names_.size() != predictors_.size()) {
        throw ValidationError("predictor name count mismatch");
    }
    if (response_.empty()) throw ValidationError("interval table has no rows");
    auto all = predictor_names_;
    all.push_back(response_name_);
    require_unique(all);
    for (std::size_t j = 0; j < predictors_.size(); ++j) {
        if (predictors_[j].size() != response_.size()) {
            throw ValidationError("predictor '" + predictor_names_[j] + "' has " +
                                  std::to_string(predictors_[j].size()) + " rows, expected " +
                                  std::to_string(response_.size()));
        }
    }
}

IntervalTable IntervalTable::from_frame(const IntervalFrame& frame, const std::string& response) {
    std::vector<std::string> predictors;
    for (const auto& name : frame.names()) {
        if (name != response) predictors.push_back(name);
    }
    return from_frame(frame, response, predictors);
}

IntervalTable IntervalTable::from_frame(const IntervalFrame& frame, const std::string& response,
                                        const std::vector<std::string>& predictors) {
    std::vector<std::vector<Interval>> cols;
    cols.reserve(predictors.size());
    for (const auto& name : predictors) cols.push_back(frame.column(name));
    return IntervalTable(predictors, std::move(cols), response, frame.column(response));
}

IntervalTable IntervalTable::select_rows(const std::vector<std::size_t>& rows) const {
    std::vector<std::vector<Interval>> cols(predictors_.size());
    std::vector<Interval> resp;
    resp.reserve(rows.size());
    for (const auto i : rows) {
        if (i >= response_.size()) {
            throw ValidationError("row index " + std::to_string(i) + " out of range for " +
                                  std::to_string(response_.size()) + " rows");
        }
        for (std::size_t j = 0; j < predictors_.size(); ++j) cols[j].push_back(predictors_[j][i]);
        resp.push_back(response_[i]);
    }
    return IntervalTable(predictor_names_, std::move(cols), response_name_, std::move(resp));
}

IntervalFrame IntervalTable::to_frame() const {
    std::vector<std::string> names{response_name_};
    names.insert(names.end(), predictor_names_.begin(), predictor_names_.end());
    std::vector<std::vector<Interval>> cols{response_};
    cols.insert(cols.end(), predictors_.begin(), predictors_.end());
    return IntervalFrame(std::move(names), std::move(cols));
}

CenterRangeView to_center_range(const IntervalTable& table) {
    const auto n = static_cast<Eigen::Index>(table.rows());
    const auto p = static_cast<Eigen::Index>(table.predictor_count());
    CenterRangeView view{Eigen::MatrixXd(n, p), Eigen::VectorXd(n), Eigen::MatrixXd(n, p),
                         Eigen::VectorXd(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& y = table.response()[static_cast<std::size_t>(i)];
        view.centers_y(i) = y.center();
        view.halfranges_y(i) = y.half_range();
        for (Eigen::Index j = 0; j < p; ++j) {
            const auto& x = table.predictor(static_cast<std::size_t>(j))[static_cast<std::size_t>(i)];
            view.centers_X(i, j) = x.center();
            view.halfranges_X(i, j) = x.half_range();
        }
    }
    return view;
}

Eigen::MatrixXd lower_endpoints(const IntervalFrame& frame, const std::vector<std::string>& names) {
    return endpoint_matrix(frame, names, [](const Interval& v) { return v.lower(); });
}

Eigen::MatrixXd upper_endpoints(const IntervalFrame& frame, const std::vector<std::string>& names) {
    return endpoint_matrix(frame, names, [](const Interval& v) { return v.upper(); });
}

Eigen::MatrixXd centers(const IntervalFrame& frame, const std::vector<std::string>& names) {
    return endpoint_matrix(frame, names, [](const Interval& v) { return v.center(); });
}

Eigen::MatrixXd half_ranges(const IntervalFrame& frame, const std::vector<std::string>& names) {
    return endpoint_matrix(frame, names, [](const Interval& v) { return v.half_range(); });
}

ClassicTable parse_classic_csv(const std::string& text) {
    auto records = split_lines(text);
    if (records.empty()) throw ValidationError("classic CSV is empty");
    ClassicTable table;
    table.names = std::move(records.front());
    require_unique(table.names);
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.names.size()) {
            throw ValidationError("row " + std::to_string(r) + ": expected " +
                                  std::to_string(table.names.size()) + " fields, found " +
                                  std::to_string(records[r].size()));
        }
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

ClassicTable read_classic_csv(const std::filesystem::path& path) {
    return parse_classic_csv(read_file(path));
}

IntervalFrame aggregate_classic(const ClassicTable& classic, const std::string& concept_column,
                                const std::vector<std::string>& value_columns) {
    const auto index_of = [&](const std::string& name) {
        const auto it = std::find(classic.names.begin(), classic.names.end(), name);
        if (it == classic.names.end()) throw ValidationError("unknown column '" + name + "'");
        return static_cast<std::size_t>(it - classic.names.begin());
    };
    const auto concept_idx = index_of(concept_column);
    std::vector<std::string> values = value_columns;
    if (values.empty()) {
        for (const auto& name : classic.names) {
            if (name != concept_column) values.push_back(name);
        }
    }
    if (values.empty()) throw ValidationError("no value columns to aggregate");
    std::vector<std::size_t> value_idx;
    for (const auto& name : values) {
        if (name == concept_column) throw ValidationError("concept column cannot be a value column");
        value_idx.push_back(index_of(name));
    }
    if (classic.rows.empty()) throw ValidationError("classic table has no rows");

    std::vector<std::string> concepts;
    std::unordered_map<std::string, std::size_t> group_of;
    std::vector<std::vector<double>> lo;
    std::vector<std::vector<double>> hi;
    for (std::size_t r = 0; r < classic.rows.size(); ++r) {
        const auto& row = classic.rows[r];
        const auto [it, inserted] = group_of.try_emplace(row.at(concept_idx), concepts.size());
        if (inserted) {
            concepts.push_back(row[concept_idx]);
            lo.emplace_back(values.size(), std::numeric_limits<double>::infinity());
            hi.emplace_back(values.size(), -std::numeric_limits<double>::infinity());
        }
        const auto g = it->second;
        for (std::size_t k = 0; k < value_idx.size(); ++k) {
            const double v = require_number(row.at(value_idx[k]), r + 1, values[k]);
            lo[g][k] = std::min(lo[g][k], v);
            hi[g][k] = std::max(hi[g][k], v);
        }
    }

    std::vector<std::vector<Interval>> cols(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        cols[k].reserve(concepts.size());
        for (std::size_t g = 0; g < concepts.size(); ++g) cols[k].emplace_back(lo[g][k], hi[g][k]);
    }
    return IntervalFrame(std::move(values), std::move(cols), concept_column, std::move(concepts));
}

IntervalFrame parse_interval_csv(const std::string& text) {
    const auto records = split_lines(text);
    if (records.empty()) throw ValidationError("interval CSV is empty");
    const auto& header = records.front();

    struct Pair {
        std::string name;
        std::optional<std::size_t> lo, hi;
    };
    std::vector<Pair> pairs;
    std::unordered_map<std::string, std::size_t> pair_of;
    std::optional<std::size_t> label_col;
    std::unordered_set<std::string> header_seen;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& h = header[c];
        if (!header_seen.insert(h).second) throw ValidationError("duplicate column '" + h + "'");
        const bool is_lo = ends_with(h, "_lo");
        const bool is_hi = ends_with(h, "_hi");
        if (!is_lo && !is_hi) {
            if (label_col) {
                throw ValidationError("column '" + h + "' is neither _lo nor _hi and a label column '" +
                                      header[*label_col] + "' already exists");
            }
            label_col = c;
            continue;
        }
        const auto name = h.substr(0, h.size() - 3);
        const auto [it, inserted] = pair_of.try_emplace(name, pairs.size());
        if (inserted) pairs.push_back(Pair{name, std::nullopt, std::nullopt});
        auto& pair = pairs[it->second];
        (is_lo ? pair.lo : pair.hi) = c;
    }
    if (pairs.empty()) throw ValidationError("interval CSV has no _lo/_hi column pairs");
    for (const auto& pair : pairs) {
        if (!pair.lo) throw ValidationError("column '" + pair.name + "_hi' has no '" + pair.name + "_lo' partner");
        if (!pair.hi) throw ValidationError("column '" + pair.name + "_lo' has no '" + pair.name + "_hi' partner");
    }
    if (label_col) {
        for (const auto& pair : pairs) {
            if (pair.name == header[*label_col]) {
                throw ValidationError("duplicate variable name '" + pair.name + "'");
            }
        }
    }

    std::vector<std::string> names;
    std::vector<std::vector<Interval>> cols(pairs.size());
    for (const auto& pair : pairs) names.push_back(pair.name);
    std::vector<std::string> labels;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& row = records[r];
        if (row.size() != header.size()) {
            throw ValidationError("row " + std::to_string(r) + ": expected " +
                                  std::to_string(header.size()) + " fields, found " +
                                  std::to_string(row.size()));
        }
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const double lo = require_number(row[*pairs[k].lo], r, pairs[k].name + "_lo");
            const double hi = require_number(row[*pairs[k].hi], r, pairs[k].name + "_hi");
            if (lo > hi) {
                throw ValidationError("row " + std::to_string(r) + ", variable '" + pairs[k].name +
                                      "': interval ordering violated (lo " + row[*pairs[k].lo] +
                                      " > hi " + row[*pairs[k].hi] + ")");
            }
            cols[k].emplace_back(lo, hi);
        }
        if (label_col) labels.push_back(row[*label_col]);
    }
    if (records.size() < 2) throw ValidationError("interval CSV has a header but no rows");
    std::optional<std::string> label_name;
    if (label_col) label_name = header[*label_col];
    return IntervalFrame(std::move(names), std::move(cols), std::move(label_name), std::move(labels));
}

IntervalFrame read_interval_csv(const std::filesystem::path& path) {
    return parse_interval_csv(read_file(path));
}

IntervalTable read_interval_csv(const std::filesystem::path& path, const std::string& response) {
    return IntervalTable::from_frame(read_interval_csv(path), response);
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

namespace {

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos && s == trim(s)) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

}  // namespace

std::string format_interval_csv(const IntervalFrame& frame) {
    std::ostringstream out;
    bool first = true;
    const auto sep = [&] {
        if (!first) out << ',';
        first = false;
    };
    if (frame.label_name()) {
        sep();
        out << quote_if_needed(*frame.label_name());
    }
    for (const auto& name : frame.names()) {
        sep();
        out << name << "_lo," << name << "_hi";
    }
    out << '\n';
    for (std::size_t i = 0; i < frame.rows(); ++i) {
        first = true;
        if (frame.label_name()) {
            sep();
            out << quote_if_needed(frame.labels()[i]);
        }
        for (std::size_t j = 0; j < frame.cols(); ++j) {
            sep();
            const auto& v = frame.column(j)[i];
            out << format_double(v.lower()) << ',' << format_double(v.upper());
        }
        out << '\n';
    }
    return out.str();
}

void write_interval_csv(const IntervalFrame& frame, const std::filesystem::path& path) {
    write_file(path, format_interval_csv(frame));
}

void write_interval_csv(const IntervalTable& table, const std::filesystem::path& path) {
    write_interval_csv(table.to_frame(), path);
}

}  // namespace ivreg
