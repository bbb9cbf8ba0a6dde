#pragma once

#include <vector>

#include "mfg/beliefs.hpp"
#include "mfg/hjb.hpp"
#include "mfg/model.hpp"
#include "mfg/splitting.hpp"

namespace mfg {

// Finite-dimensional lifts of the household HJB: prices (and optionally the
// belief levels driving them) become gridded state axes carrying their believed
// drift laws, so a single backward solve covers every (price, belief)
// configuration at once. Slices are flattened x-fastest, then the price axes in
// grid.p_nodes order, then the belief axes.
//
// Price axis 0 is the interest rate; axis 1, when present, is the wage
// (otherwise grid.fixed_wage applies). Transport along these axes is upwind and
// implicit; drift pointing out of the covered box is reflected at the edge
// nodes. The scheme is unconditionally stable, but large Courant numbers mean
// the believed motion outruns the grid, so they are reported.

// Backward solve of the value on (x, p) for a fixed belief parameter: the
// price drift is plm.drift at each price node, with believed volatility
// plm.sigma_p diffusing along the price axes. The terminal condition is either
// one x-block (replicated across price nodes) or a full slice.
TensorField solve_price_space_hjb(const PlmSpec& plm, const StateGrid& grid,
                                  const ModelParams& params, const ValueField& terminal,
                                  int n_steps, double z = 0.0);

// Backward solve on (x, p, theta) for agents who internalize their own
// learning: prices revert toward the gridded belief levels at plm.revert_rate
// (level_revert family only; plm.theta stays empty because the levels live on
// grid.theta_nodes), and the levels chase realized prices with the level rule's
// gain. Decreasing-gain clocks start at zero on slice zero.
TensorField solve_internalized_hjb(const PlmSpec& plm, const LearningRule& rule,
                                   const StateGrid& grid, const ModelParams& params,
                                   const ValueField& terminal, int n_steps, double z = 0.0);

// Multilinear interpolation of one stored slice over the gridded price/belief
// axes; coords lists those coordinates in axis order and is clamped to the
// covered box. Returns the interpolated x-block.
Eigen::VectorXd interpolate_slice(const Eigen::VectorXd& slice, const StateGrid& grid,
                                  const Eigen::VectorXd& coords);

// Uniform axis of n nodes spanning center * (1 -/+ half_width_frac).
Eigen::VectorXd centered_axis(double center, double half_width_frac, int n);

}  // namespace mfg
