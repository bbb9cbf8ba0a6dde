#include <cmath>
#include <vector>

#include "doctest.h"
#include "mfg/beliefs.hpp"

using namespace mfg;

namespace {

Eigen::VectorXd vec1(double a) {
    Eigen::VectorXd v(1);
    v << a;
    return v;
}

Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

Eigen::VectorXd vec3(double a, double b, double c) {
    Eigen::VectorXd v(3);
    v << a, b, c;
    return v;
}

Eigen::VectorXd vec4(double a, double b, double c, double d) {
    Eigen::VectorXd v(4);
    v << a, b, c, d;
    return v;
}

}  // namespace

TEST_CASE("price-law drift closed forms") {
    CHECK(plm_drift({0.04, 1.0}, vec2(0.1, -2.0))[0] == doctest::Approx(0.02).epsilon(1e-14));
    CHECK(plm_drift({0.04, 1.0}, vec2(0.1, -2.0))[1] == 0.0);
    const Eigen::Vector2d d4 = plm_drift({0.04, 1.0}, vec4(0.1, -2.0, 0.5, -0.25));
    CHECK(d4[0] == doctest::Approx(0.02).epsilon(1e-14));
    CHECK(d4[1] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK_THROWS_AS(plm_drift({0.04, 1.0}, vec3(0.1, -2.0, 1.0)), ShapeError);

    const Eigen::Vector2d dz = plm_drift_noise({0.04, 1.0}, 0.5, vec3(0.1, -2.0, 0.2));
    CHECK(dz[0] == doctest::Approx(0.12).epsilon(1e-14));
    CHECK(dz[1] == 0.0);
    CHECK_THROWS_AS(plm_drift_noise({0.04, 1.0}, 0.5, vec2(0.1, -2.0)), ShapeError);

    PlmSpec revert;
    revert.family = PlmSpec::Family::level_revert;
    revert.theta = vec2(0.05, 1.2);
    revert.revert_rate = 2.0;
    const Eigen::Vector2d dr = revert.drift({0.04, 1.0}, 0.0);
    CHECK(dr[0] == doctest::Approx(0.02).epsilon(1e-14));
    CHECK(dr[1] == doctest::Approx(0.4).epsilon(1e-14));

    revert.theta = vec1(0.05);
    CHECK(revert.drift({0.04, 1.0}, 0.0)[1] == 0.0);
}

TEST_CASE("every predictor pins the first entry to the realized price") {
    const PriceVector now{0.07, 1.3};
    const BeliefState levels = BeliefState::levels(vec2(0.02, 0.9));
    const BeliefState plm = BeliefState::plm(vec2(0.0, -1.0));

    for (PredictorKind kind : {PredictorKind::constant_current, PredictorKind::adaptive_level,
                               PredictorKind::perfect_foresight, PredictorKind::parametric_plm}) {
        Predictor pred;
        pred.kind = kind;
        pred.external_path.assign(4, PriceVector{0.5, 0.5});
        const BeliefState& b = kind == PredictorKind::parametric_plm ? plm : levels;
        const PricePath path = predict_price_path(pred, b, now, 0, 6, 0.1);
        REQUIRE(path.values.size() == 6);
        CHECK(path.values[0].interest == now.interest);
        CHECK(path.values[0].wage == now.wage);
    }
}

TEST_CASE("constant and level predictors") {
    const PriceVector now{0.07, 1.3};
    Predictor pred;
    pred.kind = PredictorKind::constant_current;
    PricePath path = predict_price_path(pred, {}, now, 3, 5, 0.1);
    for (const auto& p : path.values) {
        CHECK(p.interest == now.interest);
        CHECK(p.wage == now.wage);
    }
    CHECK(!path.clipped);

    pred.kind = PredictorKind::adaptive_level;
    path = predict_price_path(pred, BeliefState::levels(vec2(0.02, 0.9)), now, 0, 4, 0.1);
    for (int k = 1; k < 4; ++k) {
        CHECK(path.values[k].interest == 0.02);
        CHECK(path.values[k].wage == 0.9);
    }

    // a single tracked level leaves the wage frozen at the realized value
    path = predict_price_path(pred, BeliefState::levels(vec1(0.02)), now, 0, 4, 0.1);
    CHECK(path.values[2].interest == 0.02);
    CHECK(path.values[2].wage == now.wage);
}

TEST_CASE("perfect foresight reads the external path with end clamping") {
    Predictor pred;
    pred.kind = PredictorKind::perfect_foresight;
    for (int i = 0; i < 5; ++i) pred.external_path.push_back({0.1 * (i + 1), 1.0});

    const PriceVector now{0.77, 1.0};
    const PricePath path = predict_price_path(pred, {}, now, 2, 5, 0.1);
    CHECK(path.values[0].interest == 0.77);
    CHECK(path.values[1].interest == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(path.values[2].interest == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(path.values[3].interest == doctest::Approx(0.5).epsilon(1e-15));  // clamped
    CHECK(path.values[4].interest == doctest::Approx(0.5).epsilon(1e-15));

    pred.external_path.clear();
    CHECK_THROWS_AS(predict_price_path(pred, {}, now, 0, 3, 0.1), ConfigError);
}

TEST_CASE("parametric path integration matches the linear ODE") {
    const double a = 0.02, b = -0.5, p0 = 0.04, dt = 0.1;
    Predictor pred;
    pred.kind = PredictorKind::parametric_plm;
    const BeliefState belief = BeliefState::plm(vec2(a, b));

    const int n = 50;
    const PricePath path = predict_price_path(pred, belief, {p0, 1.0}, 0, n, dt);
    for (int k = 0; k < n; ++k) {
        const double t = k * dt;
        const double exact = (p0 + a / b) * std::exp(b * t) - a / b;
        CHECK(path.values[k].interest == doctest::Approx(exact).epsilon(1e-8));
        CHECK(path.values[k].wage == 1.0);  // untracked price stays put
    }
    CHECK(!path.clipped);
}

TEST_CASE("predicted prices are clipped to the box") {
    Predictor pred;
    pred.kind = PredictorKind::parametric_plm;

    PricePath path = predict_price_path(pred, BeliefState::plm(vec2(-1.0, 0.0)),
                                        {0.05, 1.0}, 0, 4, 0.1);
    CHECK(path.clipped);
    CHECK(path.values[1].interest == 1e-10);
    CHECK(path.values[3].interest == 1e-10);

    PriceBox box;
    box.hi = Eigen::Vector2d(0.6, 2.0);
    path = predict_price_path(pred, BeliefState::plm(vec2(1.0, 0.0)), {0.55, 1.0}, 0, 3, 0.1,
                              box);
    CHECK(path.clipped);
    CHECK(path.values[1].interest == 0.6);

    CHECK_THROWS_AS(predict_price_path(pred, BeliefState::plm(vec3(0, 0, 0)),
                                       {0.05, 1.0}, 0, 4, 0.1),
                    ShapeError);
    CHECK_THROWS_AS(predict_price_path(pred, BeliefState::plm(vec2(0, 0)),
                                       {0.05, 1.0}, 0, 0, 0.1),
                    ConfigError);
    CHECK_THROWS_AS(predict_price_path(pred, BeliefState::plm(vec2(0, 0)),
                                       {0.05, 1.0}, 0, 4, 0.0),
                    ConfigError);
}

TEST_CASE("decreasing gain with unit steps is the running mean") {
    LearningRule rule;
    rule.kind = LearningKind::decreasing_gain;
    rule.t0 = 1.0;

    BeliefState b = BeliefState::levels(vec1(123.0));  // prior is forgotten at gain 1
    double mean = 0.0;
    for (int k = 1; k <= 20; ++k) {
        b = update_beliefs(rule, b, {static_cast<double>(k), 1.0}, 1.0);
        mean = (mean * (k - 1) + k) / k;
        CHECK(b.theta[0] == doctest::Approx(mean).epsilon(1e-14));
        CHECK(b.clock == doctest::Approx(static_cast<double>(k)).epsilon(1e-15));
    }
    // ramp p_k = k has running mean (n + 1) / 2
    CHECK(b.theta[0] == doctest::Approx(10.5).epsilon(1e-14));
}

TEST_CASE("decreasing gain contracts the error at the doubling rate") {
    LearningRule rule;
    rule.kind = LearningKind::decreasing_gain;
    rule.t0 = 5.0;
    const double target = 0.04, theta0 = 0.2;

    BeliefState b = BeliefState::levels(vec1(theta0));
    std::vector<double> err = {std::abs(theta0 - target)};
    for (int k = 0; k < 64; ++k) {
        b = update_beliefs(rule, b, {target, 1.0}, 1.0);
        err.push_back(std::abs(b.theta[0] - target));
        // closed form: the error shrinks by (t0 - dt + k dt)/(t0 + k dt) each step
        const double expect = (theta0 - target) * 4.0 / (k + 5.0);
        CHECK(b.theta[0] - target == doctest::Approx(expect).epsilon(1e-13));
    }
    for (int t = 4; 2 * t < static_cast<int>(err.size()); ++t)
        CHECK(err[2 * t] <= 0.75 * err[t] + 1e-15);
}

TEST_CASE("constant gain matches exponential smoothing") {
    LearningRule rule;
    rule.kind = LearningKind::constant_gain;
    rule.gain = 2.0;
    const double dt = 1e-3, target = 0.04, theta0 = 0.2;

    BeliefState b = BeliefState::levels(vec1(theta0));
    const int n = 1000;
    for (int k = 0; k < n; ++k) b = update_beliefs(rule, b, {target, 1.0}, dt);

    const double discrete = target + std::pow(1.0 - rule.gain * dt, n) * (theta0 - target);
    CHECK(b.theta[0] == doctest::Approx(discrete).epsilon(1e-12));
    const double continuous = target + std::exp(-rule.gain * n * dt) * (theta0 - target);
    CHECK(std::abs(b.theta[0] - continuous) <= 1e-3);
}

TEST_CASE("per-step gain is capped at one") {
    LearningRule rule;
    rule.kind = LearningKind::constant_gain;
    rule.gain = 5.0;
    BeliefState b = BeliefState::levels(vec2(0.0, 0.0));
    b = update_beliefs(rule, b, {0.33, 1.44}, 1.0);  // raw gain 5 caps to 1
    CHECK(b.theta[0] == 0.33);
    CHECK(b.theta[1] == 1.44);
}

TEST_CASE("recursive least squares recovers a linear price law") {
    const double a = 0.5, b = -0.5, dt = 0.5;
    LearningRule rule;
    rule.kind = LearningKind::recursive_least_squares;

    BeliefState belief = BeliefState::plm(vec2(7.0, 7.0));
    CHECK(!belief.identified);

    double p = 2.0;
    belief = update_beliefs(rule, belief, {p, 1.0}, dt);
    CHECK(!belief.identified);  // only the reference observation so far
    CHECK(belief.theta[0] == 7.0);

    p += dt * (a + b * p);
    belief = update_beliefs(rule, belief, {p, 1.0}, dt);
    CHECK(!belief.identified);  // one difference quotient cannot pin two parameters
    CHECK(belief.theta[0] == 7.0);

    for (int k = 0; k < 10; ++k) {
        p += dt * (a + b * p);
        belief = update_beliefs(rule, belief, {p, 1.0}, dt);
    }
    CHECK(belief.identified);
    CHECK(belief.theta[0] == doctest::Approx(a).epsilon(1e-6));
    CHECK(belief.theta[1] == doctest::Approx(b).epsilon(1e-6));
}

TEST_CASE("recursive least squares fits both prices independently") {
    const double dt = 0.25;
    LearningRule rule;
    rule.kind = LearningKind::recursive_least_squares;

    BeliefState belief = BeliefState::plm(vec4(0.0, 0.0, 0.0, 0.0));
    double r = 0.5, w = 0.4;  // both prices start away from their fixed points
    belief = update_beliefs(rule, belief, {r, w}, dt);
    for (int k = 0; k < 12; ++k) {
        r += dt * (0.3 - 0.2 * r);
        w += dt * (-0.1 + 0.5 * w);
        belief = update_beliefs(rule, belief, {r, w}, dt);
    }
    REQUIRE(belief.identified);
    CHECK(belief.theta[0] == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(belief.theta[1] == doctest::Approx(-0.2).epsilon(1e-6));
    CHECK(belief.theta[2] == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(belief.theta[3] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("recursive least squares with a noise regressor") {
    const double dt = 0.5;
    LearningRule rule;
    rule.kind = LearningKind::recursive_least_squares;

    BeliefState belief = BeliefState::plm(vec3(0.0, 0.0, 0.0));
    const double a = 0.2, b = -0.4, c = 0.3;
    double p = 1.0;
    const double zs[] = {0.0, 1.0, -1.0, 0.5, -0.5, 0.25, 0.8, -0.3};
    double z = zs[0];
    belief = update_beliefs(rule, belief, {p, 1.0}, dt, z);
    for (int k = 1; k < 8; ++k) {
        p += dt * (a + b * p + c * z);
        z = zs[k];
        belief = update_beliefs(rule, belief, {p, 1.0}, dt, z);
    }
    REQUIRE(belief.identified);
    CHECK(belief.theta[0] == doctest::Approx(a).epsilon(1e-6));
    CHECK(belief.theta[1] == doctest::Approx(b).epsilon(1e-6));
    CHECK(belief.theta[2] == doctest::Approx(c).epsilon(1e-6));
}

TEST_CASE("belief constructors reject bad shapes") {
    CHECK_THROWS_AS(BeliefState::levels(vec3(0, 0, 0)), ShapeError);
    CHECK_THROWS_AS(BeliefState::plm(vec1(0)), ShapeError);
    LearningRule rls;
    rls.kind = LearningKind::recursive_least_squares;
    BeliefState levels = BeliefState::levels(vec1(0.0));
    CHECK_THROWS_AS(update_beliefs(rls, levels, {1.0, 1.0}, 0.1), ShapeError);
    CHECK_THROWS_AS(update_beliefs(rls, BeliefState::plm(vec2(0, 0)), {1.0, 1.0}, 0.0),
                    ConfigError);
}
