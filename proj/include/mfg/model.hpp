#pragma once

#include <Eigen/Dense>
#include <functional>
#include <variant>
#include <vector>

#include "mfg/errors.hpp"

namespace mfg {

// Households hold wealth x1 >= 0 and earn income x2. Wealth drifts by
// p1*x1 + p2*x2 - c; income follows either a two-state switching process or a
// reflected Ornstein-Uhlenbeck diffusion on a grid.

struct TwoStateIncome {
    double y_lo = 0.5;
    double y_hi = 1.5;
    double rate_up = 0.25;    // lo -> hi intensity
    double rate_down = 0.25;  // hi -> lo intensity
};

struct OuIncome {
    double mean_reversion = 0.5;
    double long_run_mean = 1.0;
    double diffusion = 0.05;  // nu_y: generator has nu_y * d^2/dy^2
    double y_min = 0.2;
    double y_max = 3.0;
    int n_y = 11;
};

using IncomeProcess = std::variant<TwoStateIncome, OuIncome>;

struct ModelParams {
    double rho = 0.05;   // subjective discount rate
    double crra = 2.0;   // relative risk aversion; 1 selects log utility
    double nu = 0.01;    // idiosyncratic diffusion on the wealth axis
    double beta = 0.0;   // aggregate shock intensity, dZ = sqrt(2 beta) dW
    double horizon = 200.0;
    double dt = 0.1;
    double production_scale = 0.15;  // A in F(K,L,z) = A e^z sqrt(K L)
    IncomeProcess income = TwoStateIncome{};

    void validate() const;  // throws ConfigError
};

// Product grid over (wealth, income); optional aggregate-shock, price and
// belief axes used by the finite-dimensional solvers. Node ordering for
// flattened fields is wealth-fastest: idx = ia + n_wealth * iy.
struct StateGrid {
    Eigen::VectorXd wealth;          // strictly increasing, wealth[0] == 0
    Eigen::VectorXd income;          // income levels (2 for the switching process)
    Eigen::VectorXd wealth_weights;  // trapezoid quadrature over the wealth axis
    Eigen::VectorXd z_nodes;                  // aggregate axis (empty if unused)
    std::vector<Eigen::VectorXd> p_nodes;     // price axes (empty if unused)
    std::vector<Eigen::VectorXd> theta_nodes; // belief axes (empty if unused)
    double fixed_wage = 0.0;  // wage used when only the interest axis is gridded

    static StateGrid regular(int n_a, double a_max, const ModelParams& params);

    int n_wealth() const { return static_cast<int>(wealth.size()); }
    int n_income() const { return static_cast<int>(income.size()); }
    int n_x() const { return n_wealth() * n_income(); }
    int x_index(int ia, int iy) const { return ia + n_wealth() * iy; }

    void validate() const;  // throws ConfigError / ShapeError
};

// Probability measure on the grid, stored as per-node cell masses (quadrature
// weights are folded in at construction time), so sum(mass) == 1.
struct Density {
    Eigen::VectorXd mass;

    static Density point_mass(const StateGrid& grid, double a, double y);
    static Density uniform(const StateGrid& grid);
    // Samples f(a, y) at the nodes, applies quadrature weights, normalizes.
    static Density from_values(const StateGrid& grid,
                               const std::function<double(double, double)>& f);

    void validate(const StateGrid& grid) const;
    double total() const { return mass.sum(); }
};

struct Moments {
    double wealth = 0.0;  // X-bar_1
    double income = 0.0;  // X-bar_2
};

Moments aggregate_moments(const Density& m, const StateGrid& grid);

struct Production {
    double output = 0.0;
    double marginal_k = 0.0;
    double marginal_l = 0.0;
};

// F(K, L, z) = scale * e^z * sqrt(K L). Throws DomainError for K <= 0 or L <= 0.
Production production(double k, double l, double z, double scale = 1.0);

struct PriceVector {
    double interest = 0.0;  // p1
    double wage = 0.0;      // p2

    Eigen::Vector2d vec() const { return {interest, wage}; }
    static PriceVector from_vec(const Eigen::Vector2d& v) { return {v[0], v[1]}; }
};

// p = (F_K, F_L) evaluated at the density's aggregate moments.
PriceVector price_functional(const Density& m, double z, const StateGrid& grid,
                             const ModelParams& params);

// Component-wise gap p - P*(m, z); zero at a temporary equilibrium.
Eigen::Vector2d market_clearing_residual(const PriceVector& p, const Density& m, double z,
                                         const StateGrid& grid, const ModelParams& params);

}  // namespace mfg
