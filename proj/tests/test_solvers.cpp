#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ivreg/error.hpp"
#include "ivreg/solvers.hpp"
#include "support/oracles.hpp"

using namespace ivreg;

namespace {

Eigen::VectorXd stack(const CoefficientSet& c) {
    Eigen::VectorXd v(c.betas.size() + 1);
    v(0) = c.intercept;
    v.tail(c.betas.size()) = c.betas;
    return v;
}

double max_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

DesignProblem cardio_centers() {
    const auto v = to_center_range(oracle::cardiological());
    return DesignProblem(v.centers_X, v.centers_y);
}

}  // namespace

TEST_CASE("DesignProblem and PenaltySpec validate") {
    CHECK_THROWS_AS(DesignProblem(Eigen::MatrixXd(3, 2), Eigen::VectorXd(2)), ValidationError);
    CHECK_THROWS_AS(DesignProblem(Eigen::MatrixXd(3, 0), Eigen::VectorXd(3)), ValidationError);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 1);
    bad(0, 0) = NAN;
    CHECK_THROWS_AS(DesignProblem(bad, Eigen::VectorXd::Zero(2)), ValidationError);
    CHECK_THROWS_AS(PenaltySpec(-1.0, 0.5), ValidationError);
    CHECK_THROWS_AS(PenaltySpec(1.0, 1.5), ValidationError);
}

TEST_CASE("fit_ols on cardiological midpoints reproduces the published CM fit") {
    const auto c = fit_ols(cardio_centers());
    const auto t = oracle::cardiological();
    Eigen::MatrixXd lower(11, 2);
    for (int i = 0; i < 11; ++i) {
        lower(i, 0) = t.predictor(0)[static_cast<std::size_t>(i)].lower();
        lower(i, 1) = t.predictor(1)[static_cast<std::size_t>(i)].lower();
    }
    const auto yl = predict_linear(c, lower);
    CHECK(std::abs(yl(0) - 59.3) <= 0.1);
    CHECK(std::abs(yl(1) - 62.7) <= 0.1);
}

TEST_CASE("fit_ols satisfies the normal equations and matches a dense solve") {
    oracle::Rng rng(1);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = rng.integer(6, 40);
        const int p = rng.integer(1, std::min(n - 2, 10));
        const Eigen::MatrixXd X = oracle::random_matrix(rng, n, p);
        const Eigen::VectorXd y = oracle::random_response(rng, X);
        const auto c = fit_ols(DesignProblem(X, y));
        const Eigen::MatrixXd A = oracle::with_ones(X);
        const Eigen::VectorXd b = stack(c);
        const Eigen::VectorXd rhs = A.transpose() * y;
        CHECK((A.transpose() * A * b - rhs).cwiseAbs().maxCoeff() <= 1e-8 * rhs.cwiseAbs().maxCoeff());
        CHECK(max_diff(b, oracle::dense_ols(X, y)) <= 1e-10 * std::max(1.0, b.cwiseAbs().maxCoeff()));
        // Residuals orthogonal to every column of [1 X].
        const Eigen::VectorXd r = y - predict_linear(c, X);
        CHECK((A.transpose() * r).cwiseAbs().maxCoeff() <= 1e-8 * A.cwiseAbs().maxCoeff() * y.cwiseAbs().maxCoeff() * n);
    }
}

TEST_CASE("fit_ols on a random 6x3 problem matches the dense oracle to 1e-10") {
    oracle::Rng rng(63);
    const Eigen::MatrixXd X = oracle::random_matrix(rng, 6, 3);
    const Eigen::VectorXd y = oracle::random_response(rng, X);
    CHECK(max_diff(stack(fit_ols(DesignProblem(X, y))), oracle::dense_ols(X, y)) <= 1e-10);
}

TEST_CASE("constant response gives intercept c and zero slope") {
    Eigen::MatrixXd X(5, 1);
    X << 1, 4, 2, 8, 5;
    const auto c = fit_ols(DesignProblem(X, Eigen::VectorXd::Constant(5, 3.5)));
    CHECK(c.intercept == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(std::abs(c.betas(0)) <= 1e-12);
}

TEST_CASE("rank-deficient design raises SingularDesign with the pivot") {
    Eigen::MatrixXd X(6, 3);
    X << 1, 2, 3, 2, 1, 3, 3, 5, 8, 4, 1, 5, 5, 9, 14, 6, 2, 8;
    const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(6, 0, 5);
    try {
        fit_ols(DesignProblem(X, y));
        FAIL("expected SingularDesign");
    } catch (const SingularDesign& e) {
        CHECK(e.pivot() == 2);
    }
    Eigen::MatrixXd constant = Eigen::MatrixXd::Ones(4, 1);
    CHECK_THROWS_AS(fit_ols(DesignProblem(constant, Eigen::VectorXd::LinSpaced(4, 0, 3))), SingularDesign);
    // Ridge with a positive penalty is fine on the same design.
    CHECK_NOTHROW(fit_ridge(DesignProblem(X, y), 0.5));
}

TEST_CASE("fit_ridge matches direct inversion of the augmented system") {
    oracle::Rng rng(8);
    const Eigen::MatrixXd X = oracle::random_matrix(rng, 8, 4);
    const Eigen::VectorXd y = oracle::random_response(rng, X);
    CHECK(max_diff(stack(fit_ridge(DesignProblem(X, y), 2.5)), oracle::dense_ridge(X, y, 2.5)) <= 1e-9);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = rng.integer(3, 30);
        const int p = rng.integer(1, 12);
        const Eigen::MatrixXd Xr = oracle::random_matrix(rng, n, p);
        const Eigen::VectorXd yr = oracle::random_response(rng, Xr);
        const double lambda = std::pow(10.0, rng.uniform(-2, 3));
        CHECK(max_diff(stack(fit_ridge(DesignProblem(Xr, yr), lambda)), oracle::dense_ridge(Xr, yr, lambda)) <= 1e-9);
    }
}

TEST_CASE("ridge limits") {
    const auto problem = cardio_centers();
    CHECK(max_diff(stack(fit_ridge(problem, 0.0)), stack(fit_ols(problem))) <= 1e-8);
    const auto big = fit_ridge(problem, 1e12);
    CHECK(big.betas.cwiseAbs().maxCoeff() < 1e-6);
    CHECK(big.intercept == doctest::Approx(problem.y.mean()).epsilon(1e-6));
}

TEST_CASE("elastic net at lambda 0 equals OLS; at alpha 0 equals ridge") {
    const auto problem = cardio_centers();
    const auto ols = stack(fit_ols(problem));
    CHECK(max_diff(stack(fit_elastic_net(problem, PenaltySpec(0.0, 1.0))), ols) <= 1e-6);
    oracle::Rng rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = rng.integer(3, 20);
        const int p = rng.integer(1, 20);
        const Eigen::MatrixXd X = oracle::random_matrix(rng, n, p);
        const Eigen::VectorXd y = oracle::random_response(rng, X);
        const double lambda = std::pow(10.0, rng.uniform(-1, 2));
        const DesignProblem pr(X, y);
        CHECK(max_diff(stack(fit_elastic_net(pr, PenaltySpec(lambda, 0.0))), stack(fit_ridge(pr, lambda))) <= 1e-6);
    }
}

TEST_CASE("lambda 0 collapse of OLS, ridge and coordinate descent on full-rank problems") {
    oracle::Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = rng.integer(12, 40);
        const int p = rng.integer(1, 6);
        const Eigen::MatrixXd X = oracle::random_matrix(rng, n, p);
        const Eigen::VectorXd y = oracle::random_response(rng, X);
        const DesignProblem pr(X, y);
        const auto ols = stack(fit_ols(pr));
        CHECK(max_diff(stack(fit_ridge(pr, 0.0)), ols) <= 1e-6);
        CHECK(max_diff(stack(fit_elastic_net(pr, PenaltySpec(0.0, 0.5))), ols) <= 1e-6);
    }
}

TEST_CASE("lasso at lambda_max has all-zero slopes and satisfies the zero KKT condition") {
    oracle::Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = rng.integer(5, 40);
        const int p = rng.integer(1, 10);
        const Eigen::MatrixXd X = oracle::random_matrix(rng, n, p);
        const Eigen::VectorXd y = oracle::random_response(rng, X);
        const DesignProblem pr(X, y);
        const double lmax = lambda_max(pr, 1.0);
        // Independent lambda_max on the oracle's standardization.
        const auto s = oracle::scale_columns(X);
        const Eigen::VectorXd yc = y.array() - y.mean();
        CHECK(lmax == doctest::Approx(2.0 * (s.Z.transpose() * yc).cwiseAbs().maxCoeff()).epsilon(1e-12));
        const auto c = fit_elastic_net(pr, PenaltySpec(lmax, 1.0));
        CHECK(c.betas.cwiseAbs().maxCoeff() == 0.0);
        CHECK(oracle::kkt(X, y, lmax, 1.0, c.intercept, c.betas, 1e-7).ok);
        // Just below lambda_max something enters.
        CHECK(fit_elastic_net(pr, PenaltySpec(0.99 * lmax, 1.0)).betas.cwiseAbs().maxCoeff() > 0.0);
    }
}

TEST_CASE("coordinate descent satisfies KKT on random problems") {
    oracle::Rng rng(51);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = rng.integer(5, 50);
        const int p = rng.integer(1, 10);
        const Eigen::MatrixXd X = oracle::random_matrix(rng, n, p);
        const Eigen::VectorXd y = oracle::random_response(rng, X);
        const DesignProblem pr(X, y);
        const double alpha = trial % 3 == 0 ? 1.0 : rng.uniform(0.05, 1.0);
        const double lambda = lambda_max(pr, alpha) * std::pow(10.0, rng.uniform(-3, 0));
        const auto c = fit_elastic_net(pr, PenaltySpec(lambda, alpha));
        CHECK(c.converged);
        const auto rep = oracle::kkt(X, y, lambda, alpha, c.intercept, c.betas, 1e-7);
        CHECK_MESSAGE(rep.ok, "worst KKT ratio " << rep.worst);
    }
}

TEST_CASE("objective is non-increasing across sweeps") {
    oracle::Rng rng(61);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd X = oracle::random_matrix(rng, 25, 6);
        const Eigen::VectorXd y = oracle::random_response(rng, X);
        const DesignProblem pr(X, y);
        const PenaltySpec pen(0.05 * lambda_max(pr, 0.7), 0.7);
        double previous = INFINITY;
        for (std::size_t sweeps = 1; sweeps <= 30; ++sweeps) {
            SolverOptions o;
            o.max_iter = sweeps;
            const auto c = fit_elastic_net(pr, pen, o);
            const double obj = standardized_objective(pr, pen, c);
            CHECK(obj <= previous + 1e-9 * std::abs(previous));
            previous = obj;
        }
    }
}

TEST_CASE("iteration cap returns the last iterate with converged = false") {
    oracle::Rng rng(71);
    const Eigen::MatrixXd X = oracle::random_matrix(rng, 30, 8);
    const DesignProblem pr(X, oracle::random_response(rng, X));
    SolverOptions o;
    o.max_iter = 1;
    o.tol = 1e-14;
    const auto c = fit_elastic_net(pr, PenaltySpec(0.01, 1.0), o);
    CHECK_FALSE(c.converged);
    CHECK(c.iterations == 1);
    CHECK(c.betas.allFinite());
}

TEST_CASE("L1 norm of the solution is non-increasing in lambda") {
    oracle::Rng rng(81);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd X = oracle::random_matrix(rng, 30, 5);
        const DesignProblem pr(X, oracle::random_response(rng, X));
        const double alpha = trial % 2 == 0 ? 1.0 : 0.5;
        const double lmax = lambda_max(pr, alpha);
        double previous = -1.0;
        // Ascending lambda over a 10-point grid.
        for (int k = 9; k >= 0; --k) {
            const double lambda = lmax * std::pow(10.0, -0.4 * k);
            const auto c = fit_elastic_net(pr, PenaltySpec(lambda, alpha));
            const double l1 = c.betas.cwiseProduct(c.scales).cwiseAbs().sum();
            if (previous >= 0.0) CHECK(l1 <= previous + 1e-7);
            previous = l1;
        }
    }
}

TEST_CASE("rescaling columns leaves predictions unchanged") {
    oracle::Rng rng(91);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd X = oracle::random_matrix(rng, 20, 4);
        const Eigen::VectorXd y = oracle::random_response(rng, X);
        Eigen::VectorXd d(4);
        for (int j = 0; j < 4; ++j) d(j) = std::pow(10.0, rng.uniform(-2, 2));
        const Eigen::MatrixXd XD = X * d.asDiagonal();
        const DesignProblem a(X, y), b(XD, y);
        CHECK(max_diff(predict_linear(fit_ols(a), X), predict_linear(fit_ols(b), XD)) <= 1e-8);
        CHECK(max_diff(predict_linear(fit_ridge(a, 3.0), X), predict_linear(fit_ridge(b, 3.0), XD)) <= 1e-8);
        const PenaltySpec pen(0.1 * lambda_max(a, 0.8), 0.8);
        CHECK(max_diff(predict_linear(fit_elastic_net(a, pen), X), predict_linear(fit_elastic_net(b, pen), XD)) <= 1e-5);
    }
}

TEST_CASE("warm start reaches the same solution") {
    oracle::Rng rng(101);
    const Eigen::MatrixXd X = oracle::random_matrix(rng, 30, 6);
    const DesignProblem pr(X, oracle::random_response(rng, X));
    const PenaltySpec pen(0.02 * lambda_max(pr, 1.0), 1.0);
    const Eigen::VectorXd start = Eigen::VectorXd::Constant(6, 5.0);
    CHECK(max_diff(stack(fit_elastic_net(pr, pen, {}, &start)), stack(fit_elastic_net(pr, pen))) <= 1e-6);
    const Eigen::VectorXd wrong(3);
    CHECK_THROWS_AS(fit_elastic_net(pr, pen, {}, &wrong), ValidationError);
}

TEST_CASE("predict_linear") {
    CoefficientSet c;
    c.intercept = 7.0;
    c.betas = Eigen::VectorXd::Zero(3);
    CHECK(predict_linear(c, Eigen::MatrixXd::Random(4, 3)).isApproxToConstant(7.0));
    CHECK_THROWS_AS(predict_linear(c, Eigen::MatrixXd::Zero(4, 2)), ValidationError);
}

TEST_CASE("objective functions agree across scales") {
    oracle::Rng rng(111);
    const Eigen::MatrixXd X = oracle::random_matrix(rng, 15, 3);
    const DesignProblem pr(X, oracle::random_response(rng, X));
    const PenaltySpec pen(2.0, 0.5);
    const auto c = fit_elastic_net(pr, pen);
    // Penalty on the standardized betas versus the raw betas: identical RSS.
    const double raw = elastic_net_objective(pr, pen, c.intercept, c.betas);
    const double rss = (pr.y - predict_linear(c, X)).squaredNorm();
    CHECK(raw == doctest::Approx(rss + 2.0 * (0.5 * c.betas.cwiseAbs().sum() + 0.5 * c.betas.squaredNorm())));
    const Eigen::VectorXd g = c.betas.cwiseProduct(c.scales);
    CHECK(standardized_objective(pr, pen, c) ==
          doctest::Approx(rss + 2.0 * (0.5 * g.cwiseAbs().sum() + 0.5 * g.squaredNorm())));
}

TEST_CASE("glmnet penalty conversion") {
    const auto p = glmnet_equivalent_penalty(0.5, 1.0, 10, 2.0);
    CHECK(p.alpha == 1.0);
    CHECK(p.lambda == doctest::Approx(2.0 * 10 * 0.5));
    const auto r = glmnet_equivalent_penalty(0.5, 0.0, 10, 2.0);
    CHECK(r.alpha == 0.0);
    CHECK(r.lambda == doctest::Approx(10 * 0.5 / 2.0));
    // Mixed: lambda*alpha' = 2 n lg alpha and lambda*(1-alpha') = n lg (1-alpha) / sd.
    const auto m = glmnet_equivalent_penalty(0.3, 0.4, 12, 1.5);
    CHECK(m.lambda * m.alpha == doctest::Approx(2 * 12 * 0.3 * 0.4));
    CHECK(m.lambda * (1 - m.alpha) == doctest::Approx(12 * 0.3 * 0.6 / 1.5));
}
