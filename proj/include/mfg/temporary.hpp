#pragma once

#include <vector>

#include "mfg/beliefs.hpp"
#include "mfg/density.hpp"
#include "mfg/hjb.hpp"
#include "mfg/model.hpp"

namespace mfg {

// Forward pass without rational expectations: at each date agents re-solve a
// backward HJB against their believed price path, execute the time-t policy at
// the realized price, and the density moves under the true generator only.

struct TemporaryOptions {
    int inner_dt_multiple = 1;  // coarsen the per-date backward sweeps
    // Require n_steps * dt >= 50 / rho so the terminal condition is immaterial;
    // disable for short diagnostic runs.
    bool enforce_horizon = true;
    double z = 0.0;
    PriceBox box{};
};

// Per-belief-type slice of a trajectory. Densities are conditional (each sums
// to one); the population share sits in weight.
struct TypeTrack {
    double weight = 1.0;
    std::vector<Eigen::VectorXd> beliefs;          // n+1, theta in force at each date
    std::vector<Density> densities;                // n+1
    std::vector<PolicyField> policies;             // n
    std::vector<Eigen::Vector2d> forecast_errors;  // n+1, yesterday's one-step-ahead miss
    std::vector<char> forecast_clipped;            // n, box clamp hit on that date's path
};

struct Trajectory {
    double dt = 0.0;
    std::vector<double> time;               // n+1
    std::vector<PriceVector> prices;        // n+1, realized P*(m_t)
    std::vector<Eigen::Vector2d> clearing;  // n+1, p_t - P*(m_t)
    std::vector<Density> densities;         // n+1, type-aggregated
    std::vector<TypeTrack> types;

    int n_steps() const { return static_cast<int>(time.size()) - 1; }
};

struct StepDiagnostics {
    Eigen::Vector2d clearing_residual = Eigen::Vector2d::Zero();
    bool forecast_clipped = false;
};

struct TemporaryStep {
    PolicyField policy;
    Density m_next;
    BeliefState belief_next;
    PriceVector price;
    PricePath forecast;  // believed path from t at the sweep resolution
    StepDiagnostics diagnostics;
};

// One date: p_t = P*(m_t); backward sweep over [t, T] under the believed path;
// execute the t policy at the realized p_t; density step with the true
// generator; belief update from (p_t, z).
TemporaryStep temporary_equilibrium_step(const Density& m_t, const BeliefState& belief,
                                         int step_index, int n_steps,
                                         const Predictor& predictor, const LearningRule& rule,
                                         const StateGrid& grid, const ModelParams& params,
                                         const ValueField& terminal,
                                         const TemporaryOptions& opts = {});

Trajectory run_temporary_equilibrium(const Density& m0, const BeliefState& belief0,
                                     const Predictor& predictor, const LearningRule& rule,
                                     const StateGrid& grid, const ModelParams& params,
                                     int n_steps, const ValueField& terminal,
                                     const TemporaryOptions& opts = {});

struct BeliefTypeConfig {
    double weight = 1.0;
    Predictor predictor;
    BeliefState belief;
    Density density;
};

// Finitely many belief types sharing one learning rule. Each type forecasts
// with its own theta, all observe the same realized prices, and the price
// comes from the weight-aggregated density.
Trajectory run_heterogeneous_beliefs(const std::vector<BeliefTypeConfig>& types,
                                     const LearningRule& rule, const StateGrid& grid,
                                     const ModelParams& params, int n_steps,
                                     const ValueField& terminal,
                                     const TemporaryOptions& opts = {});

}  // namespace mfg
