#include "ivreg/cli.hpp"

#include "ivreg/error.hpp"
#include "ivreg/interval_models.hpp"
#include "ivreg/interval_table.hpp"
#include "ivreg/metrics.hpp"
#include "ivreg/model_selection.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

namespace ivreg::cli {

namespace {

struct Options {
    std::string method;
    std::string train;
    std::string response;
    std::string lambda;
    std::optional<double> lambda_range;
    std::optional<double> alpha;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> folds;
    std::size_t points = kDefaultGridPoints;
    std::string select = "min";
    bool independent_range_cv = false;
    bool no_standardize = false;
    double tol = 1e-7;
    std::size_t max_iter = 100000;
    std::string model_out;

    std::string model;
    std::string data;
    std::string out;
    bool clamp = false;
    bool csv = false;

    std::vector<double> alpha_grid;

    std::string input;
    std::string concept_column;
    std::string output;
    std::vector<std::string> columns;
};

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << text;
}

SolverOptions solver_options(const Options& o) {
    SolverOptions s;
    s.standardize = !o.no_standardize;
    s.tol = o.tol;
    s.max_iter = o.max_iter;
    return s;
}

std::size_t fold_count(const Options& o, std::size_t n) {
    return o.folds ? *o.folds : std::min(kDefaultFolds, n);
}

double method_alpha(const MethodSpec& spec, const Options& o) {
    switch (spec.penalty()) {
        case Penalty::Ridge: return 0.0;
        case Penalty::ElasticNet: return o.alpha.value_or(1.0);
        default: return 1.0;
    }
}

std::optional<double> parse_number(const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string coefficient_table(const FittedModel& model) {
    std::ostringstream out;
    char line[256];
    out << "method " << model.spec.name();
    if (model.spec.penalty() != Penalty::None) {
        out << "  lambda_center=" << format_double(model.spec.lambda_center());
        if (model.spec.family() == Family::CRM) out << "  lambda_range=" << format_double(model.spec.lambda_range());
        if (model.spec.penalty() == Penalty::ElasticNet) out << "  alpha=" << format_double(model.spec.alpha());
    }
    out << '\n';
    const bool crm = model.range.has_value();
    std::snprintf(line, sizeof line, crm ? "%-16s %16s %16s\n" : "%-16s %16s\n", "term", "center", "range");
    out << line;
    const auto row = [&](const std::string& term, double c, std::optional<double> r) {
        if (r) {
            std::snprintf(line, sizeof line, "%-16s %16.8g %16.8g\n", term.c_str(), c, *r);
        } else {
            std::snprintf(line, sizeof line, "%-16s %16.8g\n", term.c_str(), c);
        }
        out << line;
    };
    row("(intercept)", model.center.intercept,
        crm ? std::optional<double>(model.range->intercept) : std::nullopt);
    for (std::size_t j = 0; j < model.predictor_names.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        row(model.predictor_names[j], model.center.betas(jj),
            crm ? std::optional<double>(model.range->betas(jj)) : std::nullopt);
    }
    if (model.empty_support) out << "note: center model selected no predictor; range model is intercept-only\n";
    return out.str();
}

void warn_convergence(const FittedModel& model, std::ostream& err) {
    if (!model.center.converged || (model.range && !model.range->converged)) {
        err << "warning: coordinate descent hit the iteration limit before converging\n";
    }
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
    const auto base = MethodSpec::parse(o.method);
    const bool penalized = base.penalty() != Penalty::None;
    const bool use_cv = o.lambda == "cv";
    std::optional<double> lambda;
    if (!penalized) {
        if (!o.lambda.empty() || o.lambda_range || o.alpha) {
            throw ValidationError("--lambda/--lambda-range/--alpha apply only to penalized methods");
        }
    } else {
        if (o.lambda.empty()) throw ValidationError("method '" + o.method + "' requires --lambda <value>|cv");
        if (!use_cv) {
            lambda = parse_number(o.lambda);
            if (!lambda) throw ValidationError("--lambda must be a number or 'cv', got '" + o.lambda + "'");
        }
        if (use_cv && !o.seed) throw ValidationError("--lambda cv requires --seed");
        if (base.penalty() == Penalty::ElasticNet && !o.alpha && !use_cv) {
            throw ValidationError("method '" + o.method + "' requires --alpha");
        }
        if (base.penalty() != Penalty::ElasticNet && o.alpha) {
            throw ValidationError("--alpha applies only to net-cm and net-crm");
        }
        if (base.family() == Family::CM && (o.lambda_range || o.independent_range_cv)) {
            throw ValidationError("--lambda-range applies only to center-and-range methods");
        }
    }
    if (o.select != "min" && o.select != "1se") throw ValidationError("--select must be 'min' or '1se'");

    const auto table = read_interval_csv(o.train, o.response);
    const auto solver = solver_options(o);
    MethodSpec spec = base;
    if (penalized) {
        double alpha = method_alpha(base, o);
        double lambda_center = 0.0;
        if (use_cv) {
            CvOptions cv{fold_count(o, table.rows()), *o.seed, solver};
            if (base.penalty() == Penalty::ElasticNet && !o.alpha) {
                const auto sweep = alpha_sweep(table, base.family(), default_alpha_grid(), cv, o.points);
                alpha = sweep.alpha;
                lambda_center = sweep.lambda;
                out << "cv: alpha=" << format_double(alpha) << " lambda_min=" << format_double(lambda_center) << '\n';
            } else {
                const auto grid = auto_grid(table, base.penalty(), alpha, o.points, solver);
                const auto result = cross_validate(table, base.family(), base.penalty(), alpha, grid, cv);
                lambda_center = o.select == "1se" ? result.lambda_1se : result.lambda_min;
                out << "cv: lambda_min=" << format_double(result.lambda_min)
                    << " lambda_1se=" << format_double(result.lambda_1se) << '\n';
            }
        } else {
            lambda_center = *lambda;
        }
        double lambda_range = o.lambda_range.value_or(lambda_center);
        if (use_cv && o.independent_range_cv && base.family() == Family::CRM) {
            CvOptions cv{fold_count(o, table.rows()), *o.seed, solver};
            const auto grid = auto_range_grid(table, base.penalty(), alpha, o.points, solver);
            const auto result = cross_validate_range(table, base.penalty(), alpha, lambda_center, grid, cv);
            lambda_range = o.select == "1se" ? result.lambda_1se : result.lambda_min;
            out << "cv (range): lambda_min=" << format_double(result.lambda_min)
                << " lambda_1se=" << format_double(result.lambda_1se) << '\n';
        }
        switch (base.penalty()) {
            case Penalty::Ridge: spec = MethodSpec::ridge(base.family(), lambda_center, lambda_range); break;
            case Penalty::Lasso: spec = MethodSpec::lasso(base.family(), lambda_center, lambda_range); break;
            default: spec = MethodSpec::elastic_net(base.family(), lambda_center, lambda_range, alpha); break;
        }
    }
    const auto model = fit(table, spec, solver);
    warn_convergence(model, err);
    write_text(o.model_out, serialize(model));
    out << coefficient_table(model);
    return kExitOk;
}

FittedModel load_model(const std::string& path) { return deserialize(read_text(path)); }

int cmd_predict(const Options& o, std::ostream& out, std::ostream&) {
    const auto model = load_model(o.model);
    const auto frame = read_interval_csv(std::filesystem::path(o.data));
    const auto pred = predict(model, frame, PredictOptions{o.clamp});
    std::ostringstream csv;
    csv << "yhat_lo,yhat_hi\n";
    for (Eigen::Index i = 0; i < pred.lower.size(); ++i) {
        csv << format_double(pred.lower(i)) << ',' << format_double(pred.upper(i)) << '\n';
    }
    write_text(o.out, csv.str());
    out << "ordering violations: " << pred.ordering_violations << '\n';
    if (o.clamp) out << "clamped rows: " << pred.clamped << '\n';
    return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream&) {
    const auto model = load_model(o.model);
    const auto frame = read_interval_csv(std::filesystem::path(o.data));
    const auto pred = predict(model, frame, PredictOptions{o.clamp});
    const auto report = evaluate(frame.column(model.response_name), pred);
    if (o.csv) {
        out << report_csv_header() << '\n' << format_report_csv(model.spec.name(), report) << '\n';
    } else {
        out << format_report_text(model.spec.name(), report);
    }
    return kExitOk;
}

int cmd_cv(const Options& o, std::ostream& out, std::ostream&) {
    const auto base = MethodSpec::parse(o.method);
    if (base.penalty() == Penalty::None) throw ValidationError("cv requires a penalized method");
    if (!o.seed) throw ValidationError("cv requires --seed");
    if (!o.alpha_grid.empty() && base.penalty() != Penalty::ElasticNet) {
        throw ValidationError("--alpha-grid applies only to net-cm and net-crm");
    }
    if (base.penalty() == Penalty::ElasticNet && !o.alpha && o.alpha_grid.empty()) {
        throw ValidationError("method '" + o.method + "' requires --alpha or --alpha-grid");
    }
    const auto table = read_interval_csv(o.train, o.response);
    const auto solver = solver_options(o);
    CvOptions cv{fold_count(o, table.rows()), *o.seed, solver};
    if (!o.alpha_grid.empty()) {
        const auto sweep = alpha_sweep(table, base.family(), o.alpha_grid, cv, o.points);
        write_text(o.out, format_alpha_sweep_csv(sweep));
        out << "best alpha=" << format_double(sweep.alpha) << " lambda_min=" << format_double(sweep.lambda)
            << " mean_loss=" << format_double(sweep.loss) << '\n';
        return kExitOk;
    }
    const double alpha = method_alpha(base, o);
    const auto grid = auto_grid(table, base.penalty(), alpha, o.points, solver);
    const auto result = cross_validate(table, base.family(), base.penalty(), alpha, grid, cv);
    write_text(o.out, format_cv_csv(result));
    out << "lambda_min=" << format_double(result.lambda_min) << '\n';
    out << "lambda_1se=" << format_double(result.lambda_1se) << '\n';
    return kExitOk;
}

int cmd_path(const Options& o, std::ostream& out, std::ostream&) {
    const auto base = MethodSpec::parse(o.method);
    if (base.penalty() == Penalty::None) throw ValidationError("path requires a penalized method");
    if (base.penalty() == Penalty::ElasticNet && !o.alpha) {
        throw ValidationError("method '" + o.method + "' requires --alpha");
    }
    const auto table = read_interval_csv(o.train, o.response);
    const auto solver = solver_options(o);
    const double alpha = method_alpha(base, o);
    const auto grid = auto_grid(table, base.penalty(), alpha, o.points, solver);
    const auto path = coefficient_path(table, base.family(), base.penalty(), alpha, grid, solver);
    write_text(o.out, format_path_csv(path, table.predictor_names()));
    out << "wrote " << path.lambdas.size() << " path points to " << o.out << '\n';
    return kExitOk;
}

int cmd_aggregate(const Options& o, std::ostream& out, std::ostream&) {
    const auto classic = read_classic_csv(o.input);
    const auto frame = aggregate_classic(classic, o.concept_column, o.columns);
    write_interval_csv(frame, o.output);
    out << "aggregated " << classic.rows.size() << " rows into " << frame.rows() << " concepts\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Linear regression for interval-valued data"};
    app.name("ivreg");
    app.require_subcommand(1);
    Options o;

    const auto add_solver = [&](CLI::App* cmd) {
        cmd->add_flag("--no-standardize", o.no_standardize, "Fit penalized models on raw (centered) predictors");
        cmd->add_option("--tol", o.tol, "Coordinate descent tolerance")->check(CLI::PositiveNumber);
        cmd->add_option("--max-iter", o.max_iter, "Coordinate descent sweep limit")->check(CLI::PositiveNumber);
    };
    const auto add_training = [&](CLI::App* cmd) {
        cmd->add_option("--method", o.method, "cm, crm, ridge-cm, lasso-cm, net-cm, ridge-crm, lasso-crm, net-crm")
            ->required();
        cmd->add_option("--train", o.train, "Training interval CSV")->required();
        cmd->add_option("--response", o.response, "Response variable name")->required();
    };

    auto* fit_cmd = app.add_subcommand("fit", "Fit a model and write a model file");
    add_training(fit_cmd);
    fit_cmd->add_option("--lambda", o.lambda, "Penalty value, or 'cv' to choose it by cross-validation");
    fit_cmd->add_option("--lambda-range", o.lambda_range, "Separate penalty for the range model")
        ->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--alpha", o.alpha, "Elastic-net mixing in [0,1]")->check(CLI::Range(0.0, 1.0));
    fit_cmd->add_option("--seed", o.seed, "Seed for cross-validation folds");
    fit_cmd->add_option("--folds", o.folds, "Cross-validation folds")->check(CLI::Range(2, 1 << 30));
    fit_cmd->add_option("--points", o.points, "Lambda grid size")->check(CLI::Range(2, 100000));
    fit_cmd->add_option("--select", o.select, "CV selection rule: min or 1se");
    fit_cmd->add_flag("--independent-range-cv", o.independent_range_cv,
                      "Choose the range-model lambda by its own cross-validation");
    fit_cmd->add_option("--model-out", o.model_out, "Model file to write")->required();
    add_solver(fit_cmd);

    auto* predict_cmd = app.add_subcommand("predict", "Predict interval responses");
    predict_cmd->add_option("--model", o.model, "Model file")->required();
    predict_cmd->add_option("--data", o.data, "Interval CSV with the model's predictors")->required();
    predict_cmd->add_option("--out", o.out, "Output CSV (yhat_lo,yhat_hi)")->required();
    predict_cmd->add_flag("--clamp", o.clamp, "Swap endpoints of predictions with lower > upper");

    auto* eval_cmd = app.add_subcommand("evaluate", "Report RMSE and r^2 for both boundaries");
    eval_cmd->add_option("--model", o.model, "Model file")->required();
    eval_cmd->add_option("--test", o.data, "Interval CSV including the response")->required();
    eval_cmd->add_flag("--csv", o.csv, "Print a CSV row instead of a text table");
    eval_cmd->add_flag("--clamp", o.clamp, "Swap endpoints of predictions with lower > upper");

    auto* cv_cmd = app.add_subcommand("cv", "Cross-validation curve over the lambda grid");
    add_training(cv_cmd);
    cv_cmd->add_option("--folds", o.folds, "Number of folds")->check(CLI::Range(2, 1 << 30));
    cv_cmd->add_option("--seed", o.seed, "Seed for fold assignment")->required();
    cv_cmd->add_option("--alpha", o.alpha, "Elastic-net mixing in [0,1]")->check(CLI::Range(0.0, 1.0));
    cv_cmd->add_option("--alpha-grid", o.alpha_grid, "Comma-separated alphas to sweep")
        ->delimiter(',')
        ->check(CLI::Range(0.0, 1.0));
    cv_cmd->add_option("--points", o.points, "Lambda grid size")->check(CLI::Range(2, 100000));
    cv_cmd->add_option("--out", o.out, "Output CSV")->required();
    add_solver(cv_cmd);

    auto* path_cmd = app.add_subcommand("path", "Coefficient path over the lambda grid");
    add_training(path_cmd);
    path_cmd->add_option("--alpha", o.alpha, "Elastic-net mixing in [0,1]")->check(CLI::Range(0.0, 1.0));
    path_cmd->add_option("--points", o.points, "Lambda grid size")->check(CLI::Range(2, 100000));
    path_cmd->add_option("--out", o.out, "Output CSV")->required();
    add_solver(path_cmd);

    auto* agg_cmd = app.add_subcommand("aggregate", "Aggregate a classic table into intervals by concept");
    agg_cmd->add_option("--input", o.input, "Classic CSV")->required();
    agg_cmd->add_option("--concept", o.concept_column, "Grouping column")->required();
    agg_cmd->add_option("--output", o.output, "Interval CSV to write")->required();
    agg_cmd->add_option("--columns", o.columns, "Comma-separated value columns (default: all others)")
        ->delimiter(',');

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*fit_cmd) return cmd_fit(o, out, err);
        if (*predict_cmd) return cmd_predict(o, out, err);
        if (*eval_cmd) return cmd_evaluate(o, out, err);
        if (*cv_cmd) return cmd_cv(o, out, err);
        if (*path_cmd) return cmd_path(o, out, err);
        if (*agg_cmd) return cmd_aggregate(o, out, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitValidation;
}

}  // namespace ivreg::cli
