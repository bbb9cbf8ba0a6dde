#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "mfg/model.hpp"

namespace mfg {

// Forecasting rules for the price vector. Beliefs are low-dimensional: a level
// estimate per tracked price (theta size 1 or 2), a linear drift law
// dp_k = (theta_{2k} + theta_{2k+1} p_k) ds per tracked price (size 2 or 4), or
// a linear law with an aggregate-state term (size 3, interest rate only).

enum class PredictorKind {
    perfect_foresight,  // externally supplied path
    constant_current,   // prices frozen at the current value
    adaptive_level,     // flat at the smoothed level estimate
    parametric_plm,     // integrate the linear drift law from the current price
};

struct Predictor {
    PredictorKind kind = PredictorKind::constant_current;
    std::vector<PriceVector> external_path;  // perfect_foresight, absolute step index
};

enum class LearningKind {
    decreasing_gain,          // gain dt / (t + t0)
    constant_gain,            // gain alpha dt
    recursive_least_squares,  // linear drift law fit, regularized inversion
};

struct LearningRule {
    LearningKind kind = LearningKind::constant_gain;
    double gain = 0.05;   // alpha for constant gain
    double t0 = 1.0;      // decreasing-gain regularizer
    double ridge = 1e-10; // RLS inversion regularizer
};

struct BeliefState {
    Eigen::VectorXd theta;
    Eigen::MatrixXd moment;  // RLS regressor second moments (block diagonal, PSD)
    Eigen::VectorXd cross;   // RLS regressor-target cross moments
    double clock = 0.0;
    bool identified = true;  // false between RLS start and moment-matrix rank-up
    Eigen::Vector2d last_price = Eigen::Vector2d::Zero();
    double last_z = 0.0;
    bool has_last = false;

    static BeliefState levels(const Eigen::VectorXd& theta0);
    static BeliefState plm(const Eigen::VectorXd& theta0);  // sizes 2, 3 or 4
};

// Drift of the believed price law. Untracked components are zero.
Eigen::Vector2d plm_drift(const PriceVector& p, const Eigen::VectorXd& theta);
Eigen::Vector2d plm_drift_noise(const PriceVector& p, double z, const Eigen::VectorXd& theta);

struct PriceBox {
    Eigen::Vector2d lo = Eigen::Vector2d::Constant(1e-10);
    Eigen::Vector2d hi = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
};

struct PricePath {
    std::vector<PriceVector> values;  // values[0] is the realized current price
    bool clipped = false;
};

// Believed price path over n_steps steps of size dt starting at absolute step
// step_index. All predictor kinds pin the first entry to the realized current
// price. The parametric law is integrated by fourth-order Runge-Kutta with
// theta frozen; entries are clipped to the box with a flag.
PricePath predict_price_path(const Predictor& predictor, const BeliefState& belief,
                             const PriceVector& p_now, int step_index, int n_steps, double dt,
                             const PriceBox& box = {});

// One observation (p, z) over a step of size dt. Pure update, clock advances by
// dt. Level rules cap the per-step gain at 1.
BeliefState update_beliefs(const LearningRule& rule, const BeliefState& belief,
                           const PriceVector& p, double dt, double z = 0.0);

// Drift family used by the finite-dimensional solvers over price grids.
struct PlmSpec {
    enum class Family {
        linear,        // theta size 2 or 4
        level_revert,  // drift revert_rate * (theta_k - p_k), theta = level beliefs
        linear_noise,  // theta size 3, interest rate and aggregate state
    };
    Family family = Family::linear;
    Eigen::VectorXd theta;
    double revert_rate = 0.0;
    double sigma_p = 0.0;  // believed price volatility (dp = mu ds + sigma_p dB)

    Eigen::Vector2d drift(const PriceVector& p, double z) const;
};

}  // namespace mfg
