#include "ivreg/interval_models.hpp"

#include "ivreg/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <utility>

namespace ivreg {

namespace {

void require_lambda(double lambda) {
    if (!std::isfinite(lambda) || lambda < 0.0) throw ValidationError("lambda must be finite and >= 0");
}

void require_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
}

constexpr std::pair<std::string_view, std::pair<Family, Penalty>> kMethodNames[] = {
    {"cm", {Family::CM, Penalty::None}},
    {"crm", {Family::CRM, Penalty::None}},
    {"ridge-cm", {Family::CM, Penalty::Ridge}},
    {"lasso-cm", {Family::CM, Penalty::Lasso}},
    {"net-cm", {Family::CM, Penalty::ElasticNet}},
    {"ridge-crm", {Family::CRM, Penalty::Ridge}},
    {"lasso-crm", {Family::CRM, Penalty::Lasso}},
    {"net-crm", {Family::CRM, Penalty::ElasticNet}},
};

}  // namespace

MethodSpec::MethodSpec(Family f, Penalty p, double lc, double lr, double a)
    : family_(f), penalty_(p), lambda_center_(lc), lambda_range_(f == Family::CRM ? lr : 0.0), alpha_(a) {
    require_lambda(lambda_center_);
    require_lambda(lambda_range_);
    require_alpha(alpha_);
}

MethodSpec MethodSpec::ridge(Family family, double lambda_center, double lambda_range) {
    return MethodSpec(family, Penalty::Ridge, lambda_center, lambda_range, 0.0);
}

MethodSpec MethodSpec::lasso(Family family, double lambda_center, double lambda_range) {
    return MethodSpec(family, Penalty::Lasso, lambda_center, lambda_range, 1.0);
}

MethodSpec MethodSpec::elastic_net(Family family, double lambda_center, double lambda_range,
                                   double alpha) {
    return MethodSpec(family, Penalty::ElasticNet, lambda_center, lambda_range, alpha);
}

MethodSpec MethodSpec::make(Family family, Penalty penalty, double lambda, double alpha) {
    switch (penalty) {
        case Penalty::None: return MethodSpec(family, Penalty::None, 0, 0, 0);
        case Penalty::Ridge: return ridge(family, lambda, lambda);
        case Penalty::Lasso: return lasso(family, lambda, lambda);
        case Penalty::ElasticNet: return elastic_net(family, lambda, lambda, alpha);
    }
    throw ValidationError("unknown penalty");
}

MethodSpec MethodSpec::parse(std::string_view name) {
    for (const auto& [key, value] : kMethodNames) {
        if (key == name) return make(value.first, value.second, 0.0, value.second == Penalty::Ridge ? 0.0 : 1.0);
    }
    throw ValidationError("unknown method '" + std::string(name) +
                          "' (expected cm, crm, ridge-cm, lasso-cm, net-cm, ridge-crm, lasso-crm, net-crm)");
}

std::string MethodSpec::name() const {
    for (const auto& [key, value] : kMethodNames) {
        if (value.first == family_ && value.second == penalty_) return std::string(key);
    }
    return "?";
}

MethodSpec MethodSpec::with_lambdas(double lambda_center, double lambda_range) const {
    if (penalty_ == Penalty::None) return *this;
    return MethodSpec(family_, penalty_, lambda_center, lambda_range, alpha_);
}

std::vector<std::size_t> FittedModel::center_support() const {
    std::vector<std::size_t> support;
    for (Eigen::Index j = 0; j < center.betas.size(); ++j) {
        if (std::abs(center.betas(j)) > kSupportThreshold) support.push_back(static_cast<std::size_t>(j));
    }
    return support;
}

namespace detail {

CoefficientSet fit_component(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const std::vector<std::size_t>& columns, Penalty penalty, double lambda,
                             double alpha, const SolverOptions& options,
                             const Eigen::VectorXd* warm_start) {
    const Eigen::Index p = X.cols();
    CoefficientSet full;
    full.betas = Eigen::VectorXd::Zero(p);
    full.means = X.colwise().mean().transpose();
    full.scales = Eigen::VectorXd::Ones(p);
    if (columns.empty()) {
        full.intercept = y.mean();
        return full;
    }

    Eigen::MatrixXd sub(X.rows(), static_cast<Eigen::Index>(columns.size()));
    Eigen::VectorXd warm_sub(static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
        const auto j = static_cast<Eigen::Index>(columns[k]);
        sub.col(static_cast<Eigen::Index>(k)) = X.col(j);
        if (warm_start != nullptr) warm_sub(static_cast<Eigen::Index>(k)) = (*warm_start)(j);
    }
    const DesignProblem problem(std::move(sub), y);

    CoefficientSet fitted;
    switch (penalty) {
        case Penalty::None: fitted = fit_ols(problem); break;
        case Penalty::Ridge: fitted = fit_ridge(problem, lambda, options.standardize); break;
        case Penalty::Lasso:
        case Penalty::ElasticNet:
            fitted = fit_elastic_net(problem, PenaltySpec(lambda, alpha), options,
                                     warm_start != nullptr ? &warm_sub : nullptr);
            break;
    }
    full.intercept = fitted.intercept;
    full.converged = fitted.converged;
    full.iterations = fitted.iterations;
    for (std::size_t k = 0; k < columns.size(); ++k) {
        const auto j = static_cast<Eigen::Index>(columns[k]);
        const auto kk = static_cast<Eigen::Index>(k);
        full.betas(j) = fitted.betas(kk);
        full.means(j) = fitted.means(kk);
        full.scales(j) = fitted.scales(kk);
    }
    return full;
}

std::vector<std::size_t> range_columns(const Eigen::MatrixXd& halfranges_X,
                                       const CoefficientSet& center, Penalty penalty) {
    const bool selecting = penalty == Penalty::Lasso || penalty == Penalty::ElasticNet;
    std::vector<std::size_t> cols;
    for (Eigen::Index j = 0; j < halfranges_X.cols(); ++j) {
        if (selecting && !(std::abs(center.betas(j)) > kSupportThreshold)) continue;
        // A constant half-range column is aliased with the intercept.
        const auto col = halfranges_X.col(j);
        if (col.maxCoeff() == col.minCoeff()) continue;
        cols.push_back(static_cast<std::size_t>(j));
    }
    return cols;
}

}  // namespace detail

FittedModel fit(const IntervalTable& table, const MethodSpec& spec, const SolverOptions& options) {
    const auto view = to_center_range(table);
    std::vector<std::size_t> all(table.predictor_count());
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;

    FittedModel model{spec, {}, std::nullopt, table.predictor_names(), table.response_name(), false};
    model.center = detail::fit_component(view.centers_X, view.centers_y, all, spec.penalty(),
                                         spec.lambda_center(), spec.alpha(), options, nullptr);
    if (spec.family() == Family::CRM) {
        const auto cols = detail::range_columns(view.halfranges_X, model.center, spec.penalty());
        model.empty_support = spec.is_selecting() && model.center_support().empty();
        model.range = detail::fit_component(view.halfranges_X, view.halfranges_y, cols, spec.penalty(),
                                            spec.lambda_range(), spec.alpha(), options, nullptr);
    }
    return model;
}

Eigen::VectorXd predict_centers(const FittedModel& model, const IntervalFrame& data) {
    return predict_linear(model.center, centers(data, model.predictor_names));
}

Eigen::VectorXd predict_half_ranges(const FittedModel& model, const IntervalFrame& data) {
    if (!model.range) throw ValidationError("model has no range component");
    return predict_linear(*model.range, half_ranges(data, model.predictor_names));
}

IntervalPrediction predict(const FittedModel& model, const IntervalFrame& data,
                           const PredictOptions& options) {
    IntervalPrediction out;
    if (model.spec.family() == Family::CM) {
        out.lower = predict_linear(model.center, lower_endpoints(data, model.predictor_names));
        out.upper = predict_linear(model.center, upper_endpoints(data, model.predictor_names));
    } else {
        const Eigen::VectorXd c = predict_centers(model, data);
        const Eigen::VectorXd r = predict_half_ranges(model, data);
        out.lower = c - r;
        out.upper = c + r;
    }
    for (Eigen::Index i = 0; i < out.lower.size(); ++i) {
        if (out.lower(i) > out.upper(i)) {
            if (options.clamp) {
                std::swap(out.lower(i), out.upper(i));
                ++out.clamped;
            } else {
                ++out.ordering_violations;
            }
        }
    }
    return out;
}

IntervalPrediction predict(const FittedModel& model, const IntervalTable& data,
                           const PredictOptions& options) {
    return predict(model, data.to_frame(), options);
}

// ---------------------------------------------------------------------------
// Model file: one "key value" pair per line, first line "ivreg-model <version>".

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_vector(const Eigen::VectorXd& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += fmt17(v(i));
    }
    return out;
}

std::string family_name(Family f) { return f == Family::CM ? "cm" : "crm"; }

void write_coeffs(std::ostringstream& out, const std::string& prefix, const CoefficientSet& c) {
    out << prefix << ".intercept " << fmt17(c.intercept) << '\n';
    out << prefix << ".betas " << join_vector(c.betas) << '\n';
    out << prefix << ".means " << join_vector(c.means) << '\n';
    out << prefix << ".scales " << join_vector(c.scales) << '\n';
    out << prefix << ".converged " << (c.converged ? 1 : 0) << '\n';
    out << prefix << ".iterations " << c.iterations << '\n';
}

double parse_double(const std::string& s, const std::string& key) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ValidationError("model file: malformed number '" + s + "' for " + key);
    }
    return v;
}

Eigen::VectorXd parse_vector(const std::string& s, const std::string& key, std::size_t expected) {
    std::istringstream in(s);
    std::vector<double> values;
    std::string tok;
    while (in >> tok) values.push_back(parse_double(tok, key));
    if (values.size() != expected) {
        throw ValidationError("model file: " + key + " has " + std::to_string(values.size()) +
                              " entries, expected " + std::to_string(expected));
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

class Fields {
public:
    explicit Fields(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    const std::string& get(const std::string& key) {
        const auto it = kv_.find(key);
        if (it == kv_.end()) throw ValidationError("model file: missing field '" + key + "'");
        used_.push_back(key);
        return it->second;
    }

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    void require_all_used() const {
        for (const auto& [key, _] : kv_) {
            if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
                throw ValidationError("model file: unknown field '" + key + "'");
            }
        }
    }

private:
    std::map<std::string, std::string> kv_;
    std::vector<std::string> used_;
};

bool parse_flag(const std::string& s, const std::string& key) {
    if (s == "1") return true;
    if (s == "0") return false;
    throw ValidationError("model file: malformed flag '" + s + "' for " + key);
}

CoefficientSet read_coeffs(Fields& f, const std::string& prefix, std::size_t p) {
    CoefficientSet c;
    c.intercept = parse_double(f.get(prefix + ".intercept"), prefix + ".intercept");
    c.betas = parse_vector(f.get(prefix + ".betas"), prefix + ".betas", p);
    c.means = parse_vector(f.get(prefix + ".means"), prefix + ".means", p);
    c.scales = parse_vector(f.get(prefix + ".scales"), prefix + ".scales", p);
    c.converged = parse_flag(f.get(prefix + ".converged"), prefix + ".converged");
    const auto& it = f.get(prefix + ".iterations");
    std::size_t iters = 0;
    const auto [ptr, ec] = std::from_chars(it.data(), it.data() + it.size(), iters);
    if (ec != std::errc() || ptr != it.data() + it.size()) {
        throw ValidationError("model file: malformed iteration count '" + it + "'");
    }
    c.iterations = iters;
    return c;
}

std::vector<std::string> split_tabs(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find('\t', start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

std::string serialize(const FittedModel& model) {
    const auto check_name = [](const std::string& name) {
        if (name.find_first_of("\t\n\r") != std::string::npos) {
            throw ValidationError("variable name '" + name + "' cannot be stored in a model file");
        }
    };
    check_name(model.response_name);
    std::ostringstream out;
    out << kModelFormatTag << ' ' << kModelFormatVersion << '\n';
    out << "method " << model.spec.name() << '\n';
    out << "family " << family_name(model.spec.family()) << '\n';
    out << "lambda_center " << fmt17(model.spec.lambda_center()) << '\n';
    out << "lambda_range " << fmt17(model.spec.lambda_range()) << '\n';
    out << "alpha " << fmt17(model.spec.alpha()) << '\n';
    out << "response " << model.response_name << '\n';
    out << "predictors ";
    for (std::size_t j = 0; j < model.predictor_names.size(); ++j) {
        check_name(model.predictor_names[j]);
        out << (j ? "\t" : "") << model.predictor_names[j];
    }
    out << '\n';
    out << "empty_support " << (model.empty_support ? 1 : 0) << '\n';
    write_coeffs(out, "center", model.center);
    if (model.range) write_coeffs(out, "range", *model.range);
    return out.str();
}

FittedModel deserialize(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("model file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string tag(kModelFormatTag);
    if (line.rfind(tag + ' ', 0) != 0) throw ValidationError("not an ivreg model file");
    const auto version = line.substr(tag.size() + 1);
    if (version != std::to_string(kModelFormatVersion)) {
        throw VersionMismatch("model file version '" + version + "' is not supported (expected " +
                              std::to_string(kModelFormatVersion) + ")");
    }

    std::map<std::string, std::string> kv;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto space = line.find(' ');
        const auto key = line.substr(0, space);
        const auto value = space == std::string::npos ? std::string() : line.substr(space + 1);
        if (!kv.emplace(key, value).second) {
            throw ValidationError("model file line " + std::to_string(line_no) + ": duplicate field '" + key + "'");
        }
    }
    Fields f(std::move(kv));

    const auto parsed = MethodSpec::parse(f.get("method"));
    const auto& family = f.get("family");
    if (family != family_name(parsed.family())) {
        throw ValidationError("model file: family '" + family + "' contradicts method '" + parsed.name() + "'");
    }
    const double lc = parse_double(f.get("lambda_center"), "lambda_center");
    const double lr = parse_double(f.get("lambda_range"), "lambda_range");
    const double alpha = parse_double(f.get("alpha"), "alpha");
    MethodSpec spec = MethodSpec::cm();
    switch (parsed.penalty()) {
        case Penalty::None: spec = parsed; break;
        case Penalty::Ridge: spec = MethodSpec::ridge(parsed.family(), lc, lr); break;
        case Penalty::Lasso: spec = MethodSpec::lasso(parsed.family(), lc, lr); break;
        case Penalty::ElasticNet: spec = MethodSpec::elastic_net(parsed.family(), lc, lr, alpha); break;
    }

    FittedModel model{spec, {}, std::nullopt, {}, f.get("response"), false};
    model.predictor_names = split_tabs(f.get("predictors"));
    if (model.predictor_names.empty() || model.predictor_names.front().empty()) {
        throw ValidationError("model file: no predictors");
    }
    model.empty_support = parse_flag(f.get("empty_support"), "empty_support");
    const auto p = model.predictor_names.size();
    model.center = read_coeffs(f, "center", p);
    if (spec.family() == Family::CRM) {
        model.range = read_coeffs(f, "range", p);
    } else if (f.has("range.intercept")) {
        throw ValidationError("model file: center-method model carries range coefficients");
    }
    f.require_all_used();
    return model;
}

}  // namespace ivreg
