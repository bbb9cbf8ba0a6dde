#pragma once

#include <functional>
#include <vector>

#include "mfg/hjb.hpp"
#include "mfg/model.hpp"

namespace mfg {

// Directional-splitting engine shared by the finite-dimensional solvers: an
// implicit household step per extra-axis node, then one implicit upwind
// transport step along each extra axis. Slices are flattened x-fastest, then
// the extra axes in declaration order.

enum class AxisRole { interest, wage, aggregate, belief };

struct TensorAxes {
    std::vector<Eigen::VectorXd> axes;
    std::vector<AxisRole> roles;
    double fixed_wage = 0.0;  // wage when no wage axis is present
    int combos = 1;

    void push(AxisRole role, const Eigen::VectorXd& axis, const char* what);
    void finish();  // computes combos after all axes are pushed

    int n_axes() const { return static_cast<int>(axes.size()); }
    int size(int k) const { return static_cast<int>(axes[k].size()); }
    int stride(int k) const;
    int index_along(int combo, int k) const { return (combo / stride(k)) % size(k); }
    double coord(int combo, int k) const { return axes[k][index_along(combo, k)]; }
    // price seen by the household at this node (roles interest/wage, else fixed_wage)
    PriceVector price_at(int combo) const;
};

struct TensorField {
    std::vector<Eigen::VectorXd> values;       // n_steps + 1 slices, terminal last
    std::vector<Eigen::VectorXd> consumption;  // n_steps slices
    double dt = 0.0;
    std::vector<double> courant;  // max |drift| dt / spacing per transported axis
};

// drift(axis, combo, s) is the transported motion along that axis at slice
// time s; sigma(axis) the believed volatility (diffusion sigma^2 / 2). Drift
// out of the edge nodes reflects. terminal is one x-block (replicated) or a
// full slice.
TensorField solve_split_hjb(const TensorAxes& ax, const StateGrid& grid,
                            const ModelParams& params, const ValueField& terminal, int n_steps,
                            const std::function<double(int, int, double)>& drift,
                            const std::function<double(int)>& sigma);

// Multilinear interpolation over the extra axes, coords clamped to the covered
// box; returns the interpolated x-block.
Eigen::VectorXd interpolate_axes(const TensorAxes& ax, const Eigen::VectorXd& slice, int n_x,
                                 const Eigen::VectorXd& coords);

// Pushes the price axes from grid.p_nodes with their validation: axis 0 is the
// interest rate (nonnegative), optional axis 1 the wage (positive); a lone
// interest axis needs grid.fixed_wage > 0, copied into ax.fixed_wage.
void push_price_axes(TensorAxes& ax, const StateGrid& grid);

}  // namespace mfg
