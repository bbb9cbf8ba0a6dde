#pragma once

#include "mfg/density.hpp"
#include "mfg/hjb.hpp"
#include "mfg/model.hpp"

namespace mfg {

// Stationary mean of the income process on this grid (analytic for the
// two-state chain, discrete stationary distribution for the OU variant).
double stationary_mean_income(const StateGrid& grid, const ModelParams& params);

struct EquilibriumOptions {
    double z = 0.0;
    double k_rel_tol = 1e-11;  // bracket width stop, relative to K
    int max_iter = 200;
    HjbOptions hjb{};
};

struct BisectionPoint {
    double k = 0.0;
    double excess = 0.0;  // aggregate wealth at prices(k) minus k
};

struct StationaryEquilibrium {
    PriceVector prices;
    double capital = 0.0;
    double labor = 0.0;
    Density density;
    ValueField value;
    PolicyField policy;
    TransitionOperator generator;
    Eigen::Vector2d clearing_residual;
    double hjb_residual = 0.0;
    int evaluations = 0;
    std::vector<BisectionPoint> trace;
};

// Zero of K -> aggregate wealth under prices P*(K, L, z), found by bisection.
// Throws ConfigError on bracket failure, ConvergenceError past max_iter.
StationaryEquilibrium solve_stationary_equilibrium(const StateGrid& grid,
                                                   const ModelParams& params,
                                                   const EquilibriumOptions& opts = {});

struct TransitionOptions {
    double omega = 0.1;  // initial damping; adapted on the fly
    double tol = 1e-8;   // sup_t |P*(m_t) - p_t|
    int max_iter = 3000;
    double z = 0.0;
    std::vector<PriceVector> initial_guess;  // optional warm start, one per step
};

struct TransitionPath {
    double dt = 0.0;
    std::vector<PriceVector> prices;   // realized P*(m_t), one per slice (n_steps + 1)
    std::vector<PriceVector> guess;    // converged forecast path, one per step
    std::vector<Density> densities;    // n_steps + 1
    std::vector<PolicyField> policies; // n_steps
    std::vector<ValueField> values;    // n_steps + 1, from the final backward sweep
    int iterations = 0;
    std::vector<double> residual_history;
};

// Damped fixed point on the price path: backward sweep under the guess,
// forward density propagation, update toward realized marginal products.
// The terminal value is the stationary equilibrium's.
TransitionPath solve_perfect_foresight_transition(const Density& m0, int n_steps,
                                                  const StateGrid& grid,
                                                  const ModelParams& params,
                                                  const StationaryEquilibrium& terminal,
                                                  const TransitionOptions& opts = {});

}  // namespace mfg
