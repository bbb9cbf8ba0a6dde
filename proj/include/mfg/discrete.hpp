#pragma once

// Discrete-time mean field machinery on finite state spaces. Everything here
// is small enough to enumerate: finite individual states, finite aggregate
// states, prices on a grid, densities as histograms. The module provides the
// perceived-price Bellman solver, Chapman-Kolmogorov density sweeps, adaptive
// learning in one forward pass, and Master-equation oracles on a discretized
// simplex that serve as the exact benchmark for the finite-dimensional
// solvers.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mfg/errors.hpp"

namespace mfg {

// Probability vector over the individual state set.
struct Histogram {
    Eigen::VectorXd w;

    // entries >= 0 and total mass 1 within 1e-12
    void validate() const;
};

// Finite-state model: individual states x, actions a, aggregate states z with
// transition matrix z_kernel, and a scalar price p coupling agents to the
// population. The individual kernel, reward, terminal value and price map are
// callbacks so the price can enter continuously; row-stochasticity of kernel
// rows is checked where they are evaluated.
struct DiscreteModel {
    int n_x = 0;
    int n_act = 0;
    int n_z = 0;
    double discount = 1.0;  // per-period factor in [0, 1]
    int horizon = 0;        // actions at dates 0..horizon-1, terminal at horizon

    Eigen::MatrixXd z_kernel;  // n_z x n_z, rows sum to one

    // row over x' given (x, z, a, p)
    std::function<Eigen::VectorXd(int x, int z, int a, double p)> x_kernel;
    std::function<double(int x, int z, int a, double p)> reward;
    std::function<double(int x, int z, double p)> terminal;
    std::function<double(const Histogram& m, int z)> price_map;

    void validate() const;
};

// Agents' perceived law of motion for the price, discretized on a grid.
// rows[z * n_z + zn] gives the transition matrix over price nodes when the
// aggregate state moves z -> zn; conditioning on the arrival state is what
// lets a deterministic price tree (price pinned down by the next z) be
// represented without error. Families that do not correlate price moves with
// the aggregate replicate one matrix across zn.
struct PerceivedPriceKernel {
    Eigen::VectorXd price_grid;         // strictly increasing
    int n_z = 1;
    std::vector<Eigen::MatrixXd> rows;  // n_z * n_z matrices, each n_p x n_p

    // price frozen at its current node
    static PerceivedPriceKernel degenerate(const Eigen::VectorXd& grid, int n_z);
    // explicit matrices: either one per current z (replicated across arrival
    // states) or the full n_z * n_z family in z-major order
    static PerceivedPriceKernel finite(const Eigen::VectorXd& grid,
                                       std::vector<Eigen::MatrixXd> mats, int n_z);
    // linear-Gaussian law p' = theta[0] + theta[1] p + noise_sd * eps, each row
    // binned on the grid by the Gaussian cdf between node midpoints; zero
    // noise splits the forecast mass linearly between its bracketing nodes
    static PerceivedPriceKernel var1(const Eigen::VectorXd& grid, const Eigen::Vector2d& theta,
                                     double noise_sd, int n_z);

    int n_p() const { return static_cast<int>(price_grid.size()); }
    void validate() const;
};

// Value and policy tables from backward induction over (x, z, price node, t).
struct BellmanTables {
    int n_x = 0, n_z = 0, n_p = 0, horizon = 0;
    Eigen::VectorXd price_grid;
    std::vector<Eigen::VectorXd> value;   // horizon+1 slices
    std::vector<Eigen::VectorXi> action;  // horizon slices, lowest argmax index
    std::vector<Eigen::MatrixXd> policy;  // horizon slices, uniform over the argmax set

    int index(int x, int z, int ip) const { return x + n_x * (z + n_z * ip); }
};

// Exact backward induction against a perceived price kernel. Ties in the
// action values resolve to the lowest index in `action`; `policy` spreads
// them uniformly so symmetric constructions stay symmetric.
BellmanTables bellman_backward(const DiscreteModel& model, const PerceivedPriceKernel& kernel);

// Transition matrix over x induced by a stochastic policy (rows x, cols a).
Eigen::MatrixXd induced_transition(const Eigen::MatrixXd& policy, int z, double p,
                                   const DiscreteModel& model);

// One Chapman-Kolmogorov step: m'(x) = sum over (xt, a) of
// m(xt) policy(a|xt) x_kernel(x|xt, z, a, p). Mass is preserved by
// row-stochasticity, never renormalized.
Histogram chapman_step(const Histogram& m, const Eigen::MatrixXd& policy, int z, double p,
                       const DiscreteModel& model);

// Barycentric lattice on the probability simplex over n_x points (n_x <= 3),
// res nodes per axis. Interpolation is piecewise linear on the Kuhn
// triangulation, exact for functions linear in m.
struct SimplexGrid {
    int n_x = 0;
    int res = 0;

    int node_count() const;
    Eigen::VectorXd node(int k) const;
    // writes up to n_x (node index, weight) pairs for the cell containing m;
    // returns how many
    int locate(const Eigen::VectorXd& m, int* idx, double* wgt) const;
    double interpolate(const Eigen::VectorXd& per_node, const Eigen::VectorXd& m) const;
};

struct MasterOptions {
    // within-date equilibrium loop: best response first, damped averaging
    // once a cycle shows up
    int max_iterations = 500;
    double damping = 0.5;
    double tol = 1e-12;
    // > 0: record a warning when the interpolation error estimate exceeds it
    double target_accuracy = 0.0;
};

// Rational-expectations benchmark: backward induction of the value on
// (x, z, histogram) with the population pushed forward exactly through the
// equilibrium policy at every simplex node.
struct MasterTables {
    int n_x = 0, n_z = 0, n_act = 0, horizon = 0;
    SimplexGrid grid;
    std::vector<Eigen::VectorXd> value;   // horizon+1 slices over (x, z, node)
    std::vector<Eigen::MatrixXd> policy;  // horizon slices, rows (x,z,node), cols actions
    int cycle_flags = 0;                  // nodes whose equilibrium loop never settled
    double interp_error_estimate = 0.0;   // second-difference bound on the lattice
    std::string warning;                  // set when the estimate misses target_accuracy

    int index(int x, int z, int k) const { return x + n_x * (z + n_z * k); }
};

MasterTables master_oracle(const DiscreteModel& model, int resolution,
                           const MasterOptions& options = {});

// interpolated oracle value at an off-lattice histogram
double master_value(const MasterTables& tables, int t, int x, int z, const Eigen::VectorXd& m);

// Markov reward process: no actions, per-z transition matrices, aggregate
// reward and terminal read off the price alone.
struct MrpModel {
    int n_x = 0;
    int n_z = 0;
    double discount = 1.0;
    int horizon = 0;
    Eigen::MatrixXd z_kernel;
    std::vector<Eigen::MatrixXd> x_kernel;  // one n_x x n_x matrix per z
    std::function<double(const Histogram& m, int z)> price_map;
    std::function<double(double p)> reward;
    std::function<double(double p)> terminal;

    void validate() const;
};

struct MrpTables {
    int n_z = 0, horizon = 0;
    SimplexGrid grid;
    std::vector<Eigen::MatrixXd> value;  // horizon+1 slices, n_z x node_count
    double interp_error_estimate = 0.0;
    std::string warning;
};

MrpTables mrp_master_oracle(const MrpModel& model, int resolution, double target_accuracy = 0.0);
double mrp_oracle_value(const MrpTables& tables, const Histogram& m0, int z0);

// Exact present discounted value by enumerating every aggregate path
// (weights multiply along the tree, the histogram moves deterministically
// per path). Throws BudgetError past 1e6 paths and points at the Monte
// Carlo variant.
double mrp_value_bruteforce(const MrpModel& model, const Histogram& m0, int z0);

struct MonteCarloValue {
    double mean = 0.0;
    double std_error = 0.0;
    int paths = 0;
};
MonteCarloValue mrp_value_monte_carlo(const MrpModel& model, const Histogram& m0, int z0,
                                      int paths, std::uint64_t seed);

// Deterministic measure tree grown from (m0, z0) under a fixed policy
// profile, and the price process it induces: every tree node becomes one
// grid price, and the kernel row at that price puts unit mass on the child
// reached by the realized aggregate move. Feeding this kernel back into
// bellman_backward reproduces rational expectations along the tree.
struct PriceTree {
    std::vector<int> offset;         // first node of each date, size horizon+2
    std::vector<int> z_state;        // per node
    std::vector<Histogram> density;  // per node
    std::vector<double> price;       // per node
    std::vector<int> grid_index;     // per node, position in kernel.price_grid
    PerceivedPriceKernel kernel;

    int nodes() const { return static_cast<int>(price.size()); }
    int child(int t, int n, int zn) const;  // node reached from n at date t when z -> zn
};

PriceTree induce_price_tree(const DiscreteModel& model,
                            const std::function<Eigen::MatrixXd(int t, int z, double p)>& policy,
                            const Histogram& m0, int z0);

// Belief updating for the discrete forward sweep. Level rules track a scalar
// price forecast; least squares fits p' = theta[0] + theta[1] p with a ridge
// term so it stays defined before the regressors span.
struct DiscreteRule {
    enum class Kind { constant_gain, decreasing_gain, least_squares };
    Kind kind = Kind::decreasing_gain;
    double gain = 0.1;    // constant_gain step
    double t0 = 1.0;      // decreasing_gain offset: step 1/(observations + t0)
    double ridge = 1e-6;  // least_squares regularization
};

struct DiscreteBelief {
    Eigen::VectorXd theta;  // size 1 for level rules, (intercept, slope) for least squares
    Eigen::Matrix2d moment = Eigen::Matrix2d::Zero();
    Eigen::Vector2d cross = Eigen::Vector2d::Zero();
    double prev_price = 0.0;
    bool has_prev = false;
    long observations = 0;
};

DiscreteBelief update_discrete_belief(const DiscreteRule& rule, DiscreteBelief belief,
                                      double price);

struct DiscreteLearnOptions {
    Eigen::VectorXd price_grid;     // perceived grid for the Bellman tables
    double kernel_sd = 0.0;         // forecast noise when discretizing beliefs
    double cache_threshold = 0.01;  // relative theta move that forces a re-solve; 0 solves every date
    std::uint64_t seed = 0;
};

struct DiscreteTrack {
    std::vector<int> z;                     // n+1
    std::vector<double> prices;             // n+1
    std::vector<Eigen::VectorXd> thetas;    // n+1
    std::vector<Histogram> densities;       // n+1
    std::vector<Eigen::MatrixXd> policies;  // n, rows x, cols a, at the realized price
    std::vector<char> resolved;             // n, 1 where the Bellman tables were rebuilt
    int bellman_solves = 0;
    int p_excursions = 0;  // realized price landed off the perceived grid
    bool cache_disabled = false;

    int n_steps() const { return static_cast<int>(policies.size()); }
};

// Forward learning sweep: draw the aggregate, read the price off the current
// histogram, act on the cached Bellman tables (re-solved over the remaining
// window when beliefs moved enough), push the histogram one step, and update
// beliefs with the realized price last. Off-grid realized prices blend the
// bracketing node policies linearly (clamped at the edges).
DiscreteTrack run_discrete_learning(const DiscreteModel& model, const Histogram& m0, int z0,
                                    const DiscreteBelief& belief0, const DiscreteRule& rule,
                                    int n_steps, const DiscreteLearnOptions& options);

// Quantile-spaced grid from pilot price samples; falls back to an evenly
// spaced padded envelope when ties collapse the quantiles.
Eigen::VectorXd quantile_nodes(std::vector<double> samples, int n);

}  // namespace mfg
