#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ivreg/error.hpp"
#include "ivreg/interval_models.hpp"
#include "support/oracles.hpp"

using namespace ivreg;

namespace {

// Fitted values of Pulse rate printed to one decimal.
const double kCm[11][2] = {{59.3, 65.9}, {62.7, 79.2}, {82.5, 97.4},  {70.9, 86.2}, {59.3, 65.9}, {77.5, 92.5},
                           {64.7, 79.5}, {76.8, 89.1}, {69.2, 102.3}, {81.8, 99.1}, {70.6, 87.5}};
const double kCrm[11][2] = {{49.8, 75.5}, {60.3, 81.6}, {81.0, 98.8}, {65.9, 91.2},  {49.7, 75.5}, {71.9, 98.1},
                            {63.2, 81.0}, {72.6, 93.3}, {74.6, 96.9}, {79.9, 100.9}, {68.0, 90.0}};

double max_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

double prediction_gap(const IntervalPrediction& a, const IntervalPrediction& b) {
    return std::max(max_diff(a.lower, b.lower), max_diff(a.upper, b.upper));
}

}  // namespace

TEST_CASE("MethodSpec names and validation") {
    for (const char* name : {"cm", "crm", "ridge-cm", "lasso-cm", "net-cm", "ridge-crm", "lasso-crm", "net-crm"}) {
        CHECK(MethodSpec::parse(name).name() == name);
    }
    CHECK_THROWS_AS(MethodSpec::parse("ols"), ValidationError);
    CHECK_THROWS_AS(MethodSpec::lasso(Family::CM, -1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(MethodSpec::elastic_net(Family::CRM, 1.0, 1.0, 2.0), ValidationError);
    CHECK(MethodSpec::ridge(Family::CM, 2.0, 5.0).lambda_range() == 0.0);
    CHECK(MethodSpec::make(Family::CRM, Penalty::Lasso, 3.0).lambda_range() == 3.0);
}

TEST_CASE("CM reproduces the published fitted values") {
    const auto t = oracle::cardiological();
    const auto model = fit(t, MethodSpec::cm());
    CHECK_FALSE(model.range.has_value());
    const auto pred = predict(model, t);
    for (int i = 0; i < 11; ++i) {
        CHECK(std::abs(pred.lower(i) - kCm[i][0]) <= 0.1);
        CHECK(std::abs(pred.upper(i) - kCm[i][1]) <= 0.1);
    }
    CHECK(std::abs(pred.lower(8) - 69.2) <= 0.1);
    CHECK(std::abs(pred.upper(8) - 102.3) <= 0.1);
}

TEST_CASE("CRM reproduces the published fitted values") {
    const auto t = oracle::cardiological();
    const auto model = fit(t, MethodSpec::crm());
    REQUIRE(model.range.has_value());
    const auto pred = predict(model, t);
    for (int i = 0; i < 11; ++i) {
        CHECK(std::abs(pred.lower(i) - kCrm[i][0]) <= 0.1);
        CHECK(std::abs(pred.upper(i) - kCrm[i][1]) <= 0.1);
    }
    CHECK(pred.ordering_violations == 0);
}

TEST_CASE("CRM prediction midpoint and half-width equal the two component models") {
    oracle::Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto t = oracle::random_table(rng, rng.integer(12, 40), rng.integer(1, 6));
        for (const auto& spec : {MethodSpec::crm(), MethodSpec::lasso(Family::CRM, 0.5, 0.5),
                                 MethodSpec::ridge(Family::CRM, 2.0, 1.0)}) {
            const auto m = fit(t, spec);
            const auto frame = t.to_frame();
            const auto pred = predict(m, frame);
            const auto c = predict_centers(m, frame);
            const auto r = predict_half_ranges(m, frame);
            CHECK(max_diff((pred.lower + pred.upper) / 2.0, c) <= 1e-12 * (1.0 + c.cwiseAbs().maxCoeff()));
            CHECK(max_diff((pred.upper - pred.lower) / 2.0, r) <= 1e-12 * (1.0 + c.cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("all-degenerate table: CRM collapses to CM") {
    oracle::Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const auto t = oracle::degenerate_table(rng, rng.integer(8, 30), rng.integer(1, 5));
        const auto cm = predict(fit(t, MethodSpec::cm()), t);
        const auto crm_model = fit(t, MethodSpec::crm());
        const auto crm = predict(crm_model, t);
        CHECK(crm_model.range->betas.cwiseAbs().maxCoeff() == 0.0);
        CHECK(crm_model.range->intercept == 0.0);
        CHECK(crm.lower == crm.upper);
        CHECK(crm.lower == cm.lower);
        CHECK(cm.lower == cm.upper);
    }
}

TEST_CASE("lambda 0 shrinkage variants equal their parents") {
    oracle::Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto t = oracle::random_table(rng, rng.integer(15, 50), rng.integer(1, 8));
        const auto cm = predict(fit(t, MethodSpec::cm()), t);
        const auto crm = predict(fit(t, MethodSpec::crm()), t);
        for (auto penalty : {Penalty::Ridge, Penalty::Lasso, Penalty::ElasticNet}) {
            CHECK(prediction_gap(predict(fit(t, MethodSpec::make(Family::CM, penalty, 0.0, 0.5)), t), cm) <= 1e-6);
            CHECK(prediction_gap(predict(fit(t, MethodSpec::make(Family::CRM, penalty, 0.0, 0.5)), t), crm) <= 1e-6);
        }
    }
}

TEST_CASE("LassoCRM and NetCRM keep range support inside center support") {
    oracle::Rng rng(6);
    std::size_t restricted = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto t = oracle::random_table(rng, rng.integer(10, 50), rng.integer(2, 10));
        const auto view = to_center_range(t);
        const double lmax = lambda_max(DesignProblem(view.centers_X, view.centers_y), 1.0);
        for (double frac : {0.05, 0.3, 0.7}) {
            for (const auto& spec : {MethodSpec::lasso(Family::CRM, frac * lmax, 1e-3 * lmax),
                                     MethodSpec::elastic_net(Family::CRM, frac * lmax, 1e-3 * lmax, 0.6)}) {
                const auto m = fit(t, spec);
                for (Eigen::Index j = 0; j < m.center.betas.size(); ++j) {
                    if (m.center.betas(j) == 0.0) {
                        CHECK(m.range->betas(j) == 0.0);
                        ++restricted;
                    }
                }
            }
        }
    }
    CHECK(restricted > 0);
}

TEST_CASE("ridge CRM uses all columns in the range fit") {
    const auto t = oracle::cardiological();
    const auto m = fit(t, MethodSpec::ridge(Family::CRM, 1e6, 1.0));
    CHECK(m.range->betas.cwiseAbs().minCoeff() > 0.0);
}

TEST_CASE("empty center support gives an intercept-only range model") {
    const auto t = oracle::cardiological();
    const auto m = fit(t, MethodSpec::lasso(Family::CRM, 1e9, 0.0));
    CHECK(m.empty_support);
    CHECK(m.center.betas.cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.range->betas.cwiseAbs().maxCoeff() == 0.0);
    const auto v = to_center_range(t);
    CHECK(m.range->intercept == doctest::Approx(v.halfranges_y.mean()));
}

TEST_CASE("CM with nonnegative slopes never violates interval ordering") {
    oracle::Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int p = rng.integer(1, 6);
        const auto t = oracle::random_table(rng, rng.integer(1, 30), p);
        FittedModel m{MethodSpec::cm(), {}, std::nullopt, t.predictor_names(), "Y"};
        m.center.intercept = rng.uniform(-10, 10);
        m.center.betas.resize(p);
        for (int j = 0; j < p; ++j) m.center.betas(j) = rng.uniform(0, 5);
        m.center.means = Eigen::VectorXd::Zero(p);
        m.center.scales = Eigen::VectorXd::Ones(p);
        const auto pred = predict(m, t);
        CHECK(pred.ordering_violations == 0);
        CHECK((pred.lower.array() <= pred.upper.array()).all());
    }
}

TEST_CASE("ordering violations are counted and optionally clamped") {
    const auto t = oracle::cardiological();
    FittedModel m = fit(t, MethodSpec::crm());
    m.range->intercept = -100.0;
    const auto raw = predict(m, t);
    CHECK(raw.ordering_violations == 11);
    CHECK(raw.clamped == 0);
    const auto fixed = predict(m, t, PredictOptions{true});
    CHECK(fixed.ordering_violations == 0);
    CHECK(fixed.clamped == 11);
    CHECK(fixed.lower == raw.upper);
}

TEST_CASE("predict checks the schema") {
    const auto t = oracle::cardiological();
    const auto m = fit(t, MethodSpec::cm());
    const auto frame = parse_interval_csv("Pulse_lo,Pulse_hi,Syst_lo,Syst_hi\n1,2,3,4\n");
    CHECK_THROWS_AS(predict(m, frame), SchemaMismatch);
    // Predictor-only frames work, and column order in the file does not matter.
    const auto ok = parse_interval_csv("Diast_lo,Diast_hi,Syst_lo,Syst_hi\n50,70,90,100\n");
    CHECK(std::abs(predict(m, ok).lower(0) - 59.3) <= 0.1);
}

TEST_CASE("serialize/deserialize round trip is exact") {
    oracle::Rng rng(8);
    const auto t = oracle::random_table(rng, 30, 5);
    for (const auto& spec : {MethodSpec::cm(), MethodSpec::crm(), MethodSpec::lasso(Family::CRM, 3.0, 2.0),
                             MethodSpec::elastic_net(Family::CM, 1.5, 0.0, 0.25),
                             MethodSpec::ridge(Family::CRM, 0.1, 7.0)}) {
        const auto m = fit(t, spec);
        const auto back = deserialize(serialize(m));
        CHECK(back.spec == m.spec);
        CHECK(back.center.intercept == m.center.intercept);
        CHECK(back.center.betas == m.center.betas);
        CHECK(back.center.means == m.center.means);
        CHECK(back.center.scales == m.center.scales);
        CHECK(back.predictor_names == m.predictor_names);
        CHECK(back.response_name == m.response_name);
        CHECK(back.range.has_value() == m.range.has_value());
        if (m.range) {
            CHECK(back.range->intercept == m.range->intercept);
            CHECK(back.range->betas == m.range->betas);
        }
        CHECK(serialize(back) == serialize(m));
    }
}

TEST_CASE("deserialize rejects bad input") {
    const auto text = serialize(fit(oracle::cardiological(), MethodSpec::cm()));
    std::string other = text;
    other.replace(other.find("ivreg-model 1"), 13, "ivreg-model 2");
    CHECK_THROWS_AS(deserialize(other), VersionMismatch);
    CHECK_THROWS_AS(deserialize("not a model"), ValidationError);
    CHECK_THROWS_AS(deserialize(text + "bogus 1\n"), ValidationError);
    std::string broken = text;
    broken.replace(broken.find("center.intercept"), 16, "center.interceptX");
    CHECK_THROWS_AS(deserialize(broken), ValidationError);
}

TEST_CASE("hand-written CM model predicts [1+2a, 1+2b]") {
    const std::string text =
        "ivreg-model 1\n"
        "method cm\nfamily cm\nlambda_center 0\nlambda_range 0\nalpha 0\n"
        "response Y\npredictors X\nempty_support 0\n"
        "center.intercept 1\ncenter.betas 2\ncenter.means 0\ncenter.scales 1\n"
        "center.converged 1\ncenter.iterations 0\n";
    const auto m = deserialize(text);
    const auto frame = parse_interval_csv("X_lo,X_hi\n3,5\n-1,0.5\n");
    const auto pred = predict(m, frame);
    CHECK(pred.lower(0) == 7.0);
    CHECK(pred.upper(0) == 11.0);
    CHECK(pred.lower(1) == -1.0);
    CHECK(pred.upper(1) == 2.0);
}

TEST_CASE("fits are deterministic") {
    oracle::Rng rng(9);
    const auto t = oracle::random_table(rng, 40, 6);
    const auto spec = MethodSpec::elastic_net(Family::CRM, 0.7, 0.3, 0.4);
    CHECK(serialize(fit(t, spec)) == serialize(fit(t, spec)));
}

TEST_CASE("unpenalized CM on too few rows is singular") {
    const std::vector<Interval> x = {Interval(0, 1), Interval(2, 3)};
    const std::vector<Interval> z = {Interval(1, 1), Interval(5, 6)};
    const IntervalTable t({"A", "B"}, {x, z}, "Y", {Interval(0, 1), Interval(2, 4)});
    CHECK_THROWS_AS(fit(t, MethodSpec::cm()), SingularDesign);
}
