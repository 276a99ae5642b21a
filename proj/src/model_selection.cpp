#include "ivreg/model_selection.hpp"

#include "ivreg/error.hpp"
#include "ivreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace ivreg {

namespace {

void require_penalized(Penalty penalty) {
    if (penalty == Penalty::None) throw ValidationError("lambda selection needs a penalized method");
}

double grid_alpha(Penalty penalty, double alpha) {
    switch (penalty) {
        case Penalty::Ridge: return 0.0;
        case Penalty::Lasso: return 1.0;
        default: return alpha;
    }
}

// Uniform integer in [0, bound) by rejection, independent of the standard
// library's distribution implementations.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = 0;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

std::size_t count_nonzero(const Eigen::VectorXd& betas) {
    return static_cast<std::size_t>((betas.array().abs() > kSupportThreshold).count());
}

// One FittedModel per grid value, warm-started down the grid.
std::vector<FittedModel> fit_path(const IntervalTable& table, Family family, Penalty penalty,
                                  double alpha, const LambdaGrid& grid, const SolverOptions& options) {
    require_penalized(penalty);
    const auto view = to_center_range(table);
    std::vector<std::size_t> all(table.predictor_count());
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
    const double a = grid_alpha(penalty, alpha);

    std::vector<FittedModel> models;
    models.reserve(grid.size());
    const Eigen::VectorXd* center_warm = nullptr;
    const Eigen::VectorXd* range_warm = nullptr;
    for (const double lambda : grid.values()) {
        const auto spec = MethodSpec::make(family, penalty, lambda, a);
        FittedModel model{spec, {}, std::nullopt, table.predictor_names(), table.response_name(), false};
        model.center = detail::fit_component(view.centers_X, view.centers_y, all, penalty, lambda, a,
                                             options, center_warm);
        if (family == Family::CRM) {
            const auto cols = detail::range_columns(view.halfranges_X, model.center, penalty);
            model.empty_support = spec.is_selecting() && model.center_support().empty();
            model.range = detail::fit_component(view.halfranges_X, view.halfranges_y, cols, penalty,
                                                lambda, a, options, range_warm);
        }
        models.push_back(std::move(model));
        center_warm = &models.back().center.betas;
        range_warm = family == Family::CRM ? &models.back().range->betas : nullptr;
    }
    return models;
}

struct FoldLosses {
    // losses[fold][lambda]
    std::vector<std::vector<double>> losses;
};

CvResult summarize(const std::vector<double>& lambdas, const FoldLosses& folds,
                   std::vector<std::size_t> nonzero, const CvOptions& options) {
    const auto k = folds.losses.size();
    CvResult result;
    result.lambdas = lambdas;
    result.nonzero = std::move(nonzero);
    result.seed = options.seed;
    result.folds = k;
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
        double mean = 0.0;
        for (std::size_t f = 0; f < k; ++f) mean += folds.losses[f][l];
        mean /= static_cast<double>(k);
        double ss = 0.0;
        for (std::size_t f = 0; f < k; ++f) ss += (folds.losses[f][l] - mean) * (folds.losses[f][l] - mean);
        const double sd = std::sqrt(ss / static_cast<double>(k - 1));
        result.mean_loss.push_back(mean);
        result.std_error.push_back(sd / std::sqrt(static_cast<double>(k)));
    }
    std::size_t best = 0;
    for (std::size_t l = 1; l < lambdas.size(); ++l) {
        if (result.mean_loss[l] < result.mean_loss[best]) best = l;
    }
    const double bound = result.mean_loss[best] + result.std_error[best];
    std::size_t one_se = best;
    for (std::size_t l = 0; l <= best; ++l) {
        if (result.mean_loss[l] <= bound) {
            one_se = l;
            break;
        }
    }
    result.index_min = best;
    result.index_1se = one_se;
    result.lambda_min = lambdas[best];
    result.lambda_1se = lambdas[one_se];
    return result;
}

void check_folds(std::size_t n, std::size_t k) {
    if (k < 2) throw ValidationError("cross-validation needs at least 2 folds");
    if (k > n) {
        throw ValidationError("cannot split " + std::to_string(n) + " rows into " + std::to_string(k) + " folds");
    }
}

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t>& fold) {
    std::vector<bool> held(n, false);
    for (const auto i : fold) held[i] = true;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
        if (!held[i]) rest.push_back(i);
    }
    return rest;
}

}  // namespace

LambdaGrid::LambdaGrid(std::vector<double> values, Generation generation)
    : values_(std::move(values)), generation_(generation) {
    if (values_.empty()) throw ValidationError("lambda grid is empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
            throw ValidationError("lambda grid values must be finite and >= 0");
        }
        if (i > 0 && !(values_[i] < values_[i - 1])) {
            throw ValidationError("lambda grid must be strictly descending");
        }
    }
}

LambdaGrid make_lambda_grid(const DesignProblem& design, double alpha, std::size_t n_points,
                            bool standardize) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
    if (n_points < 2) throw ValidationError("lambda grid needs at least 2 points");
    const double top = lambda_max(design, alpha, standardize);
    if (!(top > 0.0)) {
        throw ZeroVariance("response is constant or uncorrelated with every predictor; lambda_max is 0");
    }
    const double eps = design.rows() > design.cols() ? 1e-4 : 1e-2;
    std::vector<double> values(n_points);
    const double log_top = std::log(top);
    const double log_ratio = std::log(eps);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n_points - 1);
        values[i] = std::exp(log_top + t * log_ratio);
    }
    values.front() = top;
    values.back() = eps * top;
    return LambdaGrid(std::move(values), LambdaGrid::Generation::Auto);
}

LambdaGrid auto_grid(const IntervalTable& table, Penalty penalty, double alpha, std::size_t n_points,
                     const SolverOptions& options) {
    require_penalized(penalty);
    const auto view = to_center_range(table);
    return make_lambda_grid(DesignProblem(view.centers_X, view.centers_y), grid_alpha(penalty, alpha),
                            n_points, options.standardize);
}

LambdaGrid auto_range_grid(const IntervalTable& table, Penalty penalty, double alpha,
                           std::size_t n_points, const SolverOptions& options) {
    require_penalized(penalty);
    const auto view = to_center_range(table);
    return make_lambda_grid(DesignProblem(view.halfranges_X, view.halfranges_y),
                            grid_alpha(penalty, alpha), n_points, options.standardize);
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
    check_folds(n, k);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(bounded(rng, i + 1));
        std::swap(perm[i], perm[j]);
    }
    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(perm[i]);
    for (auto& fold : folds) std::sort(fold.begin(), fold.end());
    return folds;
}

double interval_loss(const std::vector<Interval>& observed, const IntervalPrediction& predicted) {
    const auto report = evaluate(observed, predicted);
    return (report.rmse_l * report.rmse_l + report.rmse_u * report.rmse_u) / 2.0;
}

CvResult cross_validate(const IntervalTable& table, Family family, Penalty penalty, double alpha,
                        const LambdaGrid& grid, const CvOptions& options) {
    require_penalized(penalty);
    const auto n = table.rows();
    const auto folds = make_folds(n, options.folds, options.seed);

    FoldLosses losses;
    for (const auto& fold : folds) {
        if (fold.empty()) throw ValidationError("cross-validation fold has no test rows");
        const auto train = table.select_rows(complement(n, fold));
        const auto test = table.select_rows(fold);
        const auto models = fit_path(train, family, penalty, alpha, grid, options.solver);
        std::vector<double> row;
        row.reserve(models.size());
        for (const auto& model : models) row.push_back(interval_loss(test.response(), predict(model, test)));
        losses.losses.push_back(std::move(row));
    }

    std::vector<std::size_t> nonzero;
    for (const auto& model : fit_path(table, family, penalty, alpha, grid, options.solver)) {
        nonzero.push_back(count_nonzero(model.center.betas));
    }
    return summarize(grid.values(), losses, std::move(nonzero), options);
}

CvResult cross_validate_range(const IntervalTable& table, Penalty penalty, double alpha,
                              double lambda_center, const LambdaGrid& range_grid,
                              const CvOptions& options) {
    require_penalized(penalty);
    const double a = grid_alpha(penalty, alpha);
    const auto n = table.rows();
    const auto folds = make_folds(n, options.folds, options.seed);

    const auto range_path = [&](const IntervalTable& t) {
        const auto view = to_center_range(t);
        std::vector<std::size_t> all(t.predictor_count());
        for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
        const auto spec = MethodSpec::make(Family::CRM, penalty, lambda_center, a);
        FittedModel base{spec, {}, std::nullopt, t.predictor_names(), t.response_name(), false};
        base.center = detail::fit_component(view.centers_X, view.centers_y, all, penalty, lambda_center,
                                            a, options.solver, nullptr);
        base.empty_support = spec.is_selecting() && base.center_support().empty();
        const auto cols = detail::range_columns(view.halfranges_X, base.center, penalty);
        std::vector<FittedModel> models;
        models.reserve(range_grid.size());
        for (const double lambda : range_grid.values()) {
            FittedModel m = base;
            m.spec = base.spec.with_lambdas(lambda_center, lambda);
            const Eigen::VectorXd* warm = models.empty() ? nullptr : &models.back().range->betas;
            m.range = detail::fit_component(view.halfranges_X, view.halfranges_y, cols, penalty, lambda, a,
                                            options.solver, warm);
            models.push_back(std::move(m));
        }
        return models;
    };

    FoldLosses losses;
    for (const auto& fold : folds) {
        if (fold.empty()) throw ValidationError("cross-validation fold has no test rows");
        const auto train = table.select_rows(complement(n, fold));
        const auto test = table.select_rows(fold);
        std::vector<double> row;
        for (const auto& model : range_path(train)) {
            row.push_back(interval_loss(test.response(), predict(model, test)));
        }
        losses.losses.push_back(std::move(row));
    }
    std::vector<std::size_t> nonzero;
    for (const auto& model : range_path(table)) nonzero.push_back(count_nonzero(model.range->betas));
    return summarize(range_grid.values(), losses, std::move(nonzero), options);
}

std::vector<double> default_alpha_grid() {
    std::vector<double> alphas;
    for (int i = 0; i <= 10; ++i) alphas.push_back(i / 10.0);
    return alphas;
}

AlphaSweepResult alpha_sweep(const IntervalTable& table, Family family, const std::vector<double>& alphas,
                             const CvOptions& options, std::size_t n_points) {
    if (alphas.empty()) throw ValidationError("alpha grid is empty");
    for (const double a : alphas) {
        if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("alpha values must lie in [0, 1]");
    }
    AlphaSweepResult sweep;
    sweep.alphas = alphas;
    bool have = false;
    for (const double a : alphas) {
        const auto grid = auto_grid(table, Penalty::ElasticNet, a, n_points, options.solver);
        auto run = cross_validate(table, family, Penalty::ElasticNet, a, grid, options);
        const double loss = run.mean_loss[run.index_min];
        const bool better = !have || loss < sweep.loss ||
                            (loss == sweep.loss &&
                             (a > sweep.alpha || (a == sweep.alpha && run.lambda_min > sweep.lambda)));
        if (better) {
            sweep.alpha = a;
            sweep.lambda = run.lambda_min;
            sweep.loss = loss;
            have = true;
        }
        sweep.runs.push_back(std::move(run));
    }
    return sweep;
}

CoefficientPath coefficient_path(const IntervalTable& table, Family family, Penalty penalty,
                                 double alpha, const LambdaGrid& grid, const SolverOptions& options) {
    CoefficientPath path;
    path.lambdas = grid.values();
    for (auto& model : fit_path(table, family, penalty, alpha, grid, options)) {
        path.center.push_back(std::move(model.center));
        if (model.range) path.range.push_back(std::move(*model.range));
    }
    return path;
}

namespace {

std::string num(double v) { return format_double(v); }

}  // namespace

std::string format_cv_csv(const CvResult& result) {
    std::ostringstream out;
    out << "lambda,mean_loss,std_error,nonzero\n";
    for (std::size_t l = 0; l < result.lambdas.size(); ++l) {
        out << num(result.lambdas[l]) << ',' << num(result.mean_loss[l]) << ','
            << num(result.std_error[l]) << ',' << result.nonzero[l] << '\n';
    }
    return out.str();
}

std::string format_alpha_sweep_csv(const AlphaSweepResult& sweep) {
    std::ostringstream out;
    out << "alpha,lambda,mean_loss,std_error,nonzero\n";
    for (std::size_t a = 0; a < sweep.runs.size(); ++a) {
        const auto& run = sweep.runs[a];
        for (std::size_t l = 0; l < run.lambdas.size(); ++l) {
            out << num(sweep.alphas[a]) << ',' << num(run.lambdas[l]) << ',' << num(run.mean_loss[l])
                << ',' << num(run.std_error[l]) << ',' << run.nonzero[l] << '\n';
        }
    }
    return out.str();
}

std::string format_path_csv(const CoefficientPath& path, const std::vector<std::string>& names) {
    std::ostringstream out;
    out << "lambda,center_intercept";
    for (const auto& name : names) out << ",center_" << name;
    if (!path.range.empty()) {
        out << ",range_intercept";
        for (const auto& name : names) out << ",range_" << name;
    }
    out << '\n';
    for (std::size_t l = 0; l < path.lambdas.size(); ++l) {
        out << num(path.lambdas[l]) << ',' << num(path.center[l].intercept);
        for (Eigen::Index j = 0; j < path.center[l].betas.size(); ++j) out << ',' << num(path.center[l].betas(j));
        if (!path.range.empty()) {
            out << ',' << num(path.range[l].intercept);
            for (Eigen::Index j = 0; j < path.range[l].betas.size(); ++j) out << ',' << num(path.range[l].betas(j));
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace ivreg
