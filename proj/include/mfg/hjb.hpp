#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <optional>
#include <vector>

#include "mfg/model.hpp"

namespace mfg {

struct ValueField {
    Eigen::VectorXd v;  // one entry per grid node
};

struct PolicyField {
    Eigen::VectorXd consumption;  // > 0 per node
    Eigen::VectorXd drift;        // implied wealth drift p1 a + p2 y - c
};

// Row-stochastic-generator convention: rows sum to zero, off-diagonals >= 0.
// Acting on values as A u; densities evolve by the transpose.
using TransitionOperator = Eigen::SparseMatrix<double>;

double utility(double c, double crra);
// c* = lambda^{-1/gamma} (1/lambda for log utility); empty when lambda <= 0 and
// the caller must fall back to the state-constraint bound.
std::optional<double> optimal_consumption(double lambda, double crra);
// H = max_c U(c) + lambda (resources - c) at resources = p1 a + p2 y.
std::optional<double> hamiltonian(double a, double y, double lambda, const PriceVector& p,
                                  double crra);

// Diagnostics for generator invariants.
double generator_row_sum_error(const TransitionOperator& op);
double generator_min_off_diagonal(const TransitionOperator& op);

// Value-shape diagnostics along the wealth axis (max violation, 0 when clean).
double monotonicity_violation(const ValueField& u, const StateGrid& grid);
double concavity_violation(const ValueField& u, const StateGrid& grid);

// One-node upwind branch selection: finite differences dF, dB of the next value
// slice, branch validity flags, resources at the node. Picks the branch with the
// largest Hamiltonian; ties and inactive branches fall back to zero drift.
struct UpwindChoice {
    double consumption = 0.0;
    double drift = 0.0;
};
UpwindChoice upwind_policy_node(bool has_f, double d_f, bool has_b, double d_b,
                                double resources, double crra);

// Policy, drift and flow reward extracted from a value block over (wealth, income)
// at the given prices. The block is a contiguous slice of a larger field for the
// extended solvers; for the plain solver it is the whole field.
struct BlockPolicy {
    Eigen::VectorXd consumption;
    Eigen::VectorXd drift;
    Eigen::VectorXd reward;
};
BlockPolicy upwind_block(const Eigen::Ref<const Eigen::VectorXd>& u, const StateGrid& grid,
                         const ModelParams& params, const PriceVector& p);

// Appends generator triplets for one (wealth, income) block at row/col offset
// `base`: upwind wealth drift, central wealth diffusion (reflecting ends, zero
// inflow through the constraint), and the exact income-process coupling.
void append_block_generator(std::vector<Eigen::Triplet<double>>& out, int base,
                            const Eigen::VectorXd& drift, const Eigen::VectorXd& diffusion,
                            const StateGrid& grid, const ModelParams& params);

TransitionOperator build_generator(const PolicyField& policy, const StateGrid& grid,
                                   const ModelParams& params, const PriceVector& p);

// Perceived own-state dynamics (wealth axis only); the income coupling is kept
// exact. Evaluated per node at the policy's consumption.
struct PerceivedDynamics {
    std::function<double(double a, double y, double c)> drift;
    std::function<double(double a, double y, double c)> diffusion;
};
TransitionOperator build_perceived_generator(const PerceivedDynamics& perceived,
                                             const PolicyField& policy, const StateGrid& grid,
                                             const ModelParams& params);

// Implicit backward Euler step; the policy is read off the gradient of u_next
// (no inner fixed point). A perceived-dynamics override replaces the generator
// in the value update only.
struct HjbStepResult {
    ValueField value;
    PolicyField policy;
};
HjbStepResult hjb_backward_step(const ValueField& u_next, const PriceVector& p, double dt,
                                const StateGrid& grid, const ModelParams& params,
                                const PerceivedDynamics* perceived = nullptr);

struct HjbOptions {
    double pseudo_dt = 1e5;
    int max_iter = 600;
    double tol = 1e-13;          // sup-norm change, relative to max(1, |u|)
    double residual_tol = 1e-9;  // sup-norm of rho u - R - A u at the fixed point
};

struct StationaryHjb {
    ValueField value;
    PolicyField policy;
    TransitionOperator generator;
    int iterations = 0;
    double residual = 0.0;
};
StationaryHjb solve_stationary_hjb(const PriceVector& p, const StateGrid& grid,
                                   const ModelParams& params, const HjbOptions& opts = {},
                                   const ValueField* warm_start = nullptr);

// Backward sweep under a known price path; prices[k] applies on step k, the
// terminal condition sits at slice prices.size(). values has one more slice
// than policies.
struct HjbPath {
    std::vector<ValueField> values;
    std::vector<PolicyField> policies;
};
HjbPath solve_hjb_path(const std::vector<PriceVector>& prices, const ValueField& terminal,
                       double dt, const StateGrid& grid, const ModelParams& params);

}  // namespace mfg
