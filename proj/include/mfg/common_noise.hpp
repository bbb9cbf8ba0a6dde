#pragma once

#include <cstdint>
#include <vector>

#include "mfg/beliefs.hpp"
#include "mfg/density.hpp"
#include "mfg/hjb.hpp"
#include "mfg/model.hpp"
#include "mfg/splitting.hpp"

namespace mfg {

// Aggregate shocks. Log productivity follows dZ = sqrt(2 beta) dW (zero drift)
// and moves prices only through the production scale, never through any
// individual state, so the household value stays finite-dimensional: one
// backward solve on (x, p, z) per belief parameter covers every aggregate
// configuration the forward simulation can visit.

struct AggregatePath {
    std::uint64_t seed = 0;
    double dt = 0.0;
    std::vector<double> time;  // n+1 stamps
    std::vector<double> z;     // n+1 values
    int reflections = 0;       // folds applied at the configured bounds
};

// Euler-Maruyama with zero drift, bit-reproducible from the seed. The bounded
// overload reflects overshoot back into [lo, hi] and counts the folds; z0 must
// start inside.
AggregatePath simulate_aggregate_path(std::uint64_t seed, int n_steps, double dt, double beta,
                                      double z0);
AggregatePath simulate_aggregate_path(std::uint64_t seed, int n_steps, double dt, double beta,
                                      double z0, double lo, double hi);

// Backward solve on (x, p, z) for a fixed belief parameter: the price axes
// from grid.p_nodes carry the believed drift plm.drift(p, z) and volatility
// plm.sigma_p; the aggregate axis grid.z_nodes comes last with zero drift and
// diffusion params.beta. Slices are flattened x-fastest, price axes, then z,
// so each z-block has the price-space slice layout. beta > 0 needs at least
// two z nodes.
TensorField solve_extended_hjb(const PlmSpec& plm, const StateGrid& grid,
                               const ModelParams& params, const ValueField& terminal,
                               int n_steps);

struct SimulationOptions {
    // Fresh backward solve when the belief moved more than this fraction of its
    // own sup norm since the cached solve; zero disables the cache (flagged).
    double cache_threshold = 0.01;
    bool enforce_horizon = true;  // require n_steps * dt >= 50 / rho
    std::uint64_t seed = 0;
};

struct SimulationTrack {
    double dt = 0.0;
    std::vector<double> time;               // n+1
    std::vector<double> z;                  // n+1, realized aggregate path
    std::vector<PriceVector> prices;        // n+1, realized P*(m_t, z_t)
    std::vector<Eigen::Vector2d> clearing;  // n+1
    std::vector<Eigen::VectorXd> beliefs;   // n+1, theta in force at each date
    std::vector<Density> densities;         // n+1
    std::vector<PolicyField> policies;      // n
    std::vector<char> resolved;             // n, 1 where a fresh solve ran
    int hjb_solves = 0;
    int z_excursions = 0;  // dates with z outside the gridded range
    int p_excursions = 0;  // dates with a price outside the gridded box
    int reflections = 0;   // aggregate-path folds at the z bounds
    bool cache_disabled = false;

    int n_steps() const { return static_cast<int>(time.size()) - 1; }
};

// Forward learning pass under aggregate noise: simulate z (reflected at the
// z-grid bounds); each date set p_t = P*(m_t, z_t), refresh the cached
// extended solve when theta drifted past the threshold (solving the remaining
// window only; later slices of that solve stay valid while theta holds), read
// the policy at (p_t, z_t) by multilinear interpolation, step the density with
// the true generator, update beliefs last. plm_family fixes the drift family
// and sigma_p with an empty theta; each solve reads theta from the belief.
SimulationTrack run_learning_simulation(const Density& m0, double z0,
                                        const BeliefState& belief0, const PlmSpec& plm_family,
                                        const LearningRule& rule, const StateGrid& grid,
                                        const ModelParams& params, int n_steps,
                                        const ValueField& terminal,
                                        const SimulationOptions& opts = {});

// Uniform axis of n nodes spanning center - half_width to center + half_width.
Eigen::VectorXd spread_axis(double center, double half_width, int n);

}  // namespace mfg
