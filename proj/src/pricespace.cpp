#include "mfg/pricespace.hpp"

#include "mfg/errors.hpp"

namespace mfg {

namespace {

// Price axes first (interest, optional wage), belief axes after.
TensorAxes collect_axes(const StateGrid& grid, bool with_beliefs) {
    TensorAxes ax;
    push_price_axes(ax, grid);
    if (with_beliefs) {
        if (grid.theta_nodes.size() != grid.p_nodes.size())
            throw ConfigError("internalized solve needs one belief axis per price axis");
        for (const auto& a : grid.theta_nodes) ax.push(AxisRole::belief, a, "belief");
    } else if (!grid.theta_nodes.empty()) {
        throw ConfigError(
            "price-space solve treats beliefs as a parameter; belief axes belong to the "
            "internalized solve");
    }
    ax.finish();
    return ax;
}

}  // namespace

TensorField solve_price_space_hjb(const PlmSpec& plm, const StateGrid& grid,
                                  const ModelParams& params, const ValueField& terminal,
                                  int n_steps, double z) {
    const TensorAxes ax = collect_axes(grid, false);
    if (plm.sigma_p < 0.0) throw ConfigError("believed price volatility must be nonnegative");

    return solve_split_hjb(
        ax, grid, params, terminal, n_steps,
        [&](int axis, int combo, double) {
            const Eigen::Vector2d mu = plm.drift(ax.price_at(combo), z);
            return mu[axis];
        },
        [&](int) { return plm.sigma_p; });
}

TensorField solve_internalized_hjb(const PlmSpec& plm, const LearningRule& rule,
                                   const StateGrid& grid, const ModelParams& params,
                                   const ValueField& terminal, int n_steps, double z) {
    (void)z;
    const TensorAxes ax = collect_axes(grid, true);
    if (plm.family != PlmSpec::Family::level_revert)
        throw ConfigError("internalized solve needs the level_revert belief family");
    if (plm.theta.size() != 0)
        throw ConfigError("internalized solve reads belief levels from the grid axes");
    if (plm.sigma_p < 0.0) throw ConfigError("believed price volatility must be nonnegative");
    if (rule.kind == LearningKind::recursive_least_squares)
        throw ConfigError("internalized transport needs a level learning rule");
    if (rule.kind == LearningKind::constant_gain && rule.gain < 0.0)
        throw ConfigError("learning gain must be nonnegative");
    if (rule.kind == LearningKind::decreasing_gain && rule.t0 <= 0.0)
        throw ConfigError("decreasing gain needs t0 > 0");

    const int n_p = static_cast<int>(grid.p_nodes.size());
    return solve_split_hjb(
        ax, grid, params, terminal, n_steps,
        [&](int axis, int combo, double s) {
            if (axis < n_p) {
                // believed price motion: reversion toward the gridded level
                return plm.revert_rate * (ax.coord(combo, axis + n_p) - ax.coord(combo, axis));
            }
            const double gain = rule.kind == LearningKind::constant_gain
                                    ? rule.gain
                                    : 1.0 / (s + rule.t0);
            return gain * (ax.coord(combo, axis - n_p) - ax.coord(combo, axis));
        },
        [&](int axis) { return axis < n_p ? plm.sigma_p : 0.0; });
}

Eigen::VectorXd interpolate_slice(const Eigen::VectorXd& slice, const StateGrid& grid,
                                  const Eigen::VectorXd& coords) {
    if (grid.p_nodes.empty() && grid.theta_nodes.empty())
        throw ConfigError("no price or belief axes to interpolate over");
    TensorAxes ax;
    for (const auto& a : grid.p_nodes) ax.push(AxisRole::interest, a, "price");
    for (const auto& a : grid.theta_nodes) ax.push(AxisRole::belief, a, "belief");
    ax.finish();
    return interpolate_axes(ax, slice, grid.n_x(), coords);
}

Eigen::VectorXd centered_axis(double center, double half_width_frac, int n) {
    if (n < 1) throw ConfigError("axis needs at least one node");
    if (half_width_frac < 0.0) throw ConfigError("axis half-width must be nonnegative");
    if (n == 1) return Eigen::VectorXd::Constant(1, center);
    return Eigen::VectorXd::LinSpaced(n, center * (1.0 - half_width_frac),
                                      center * (1.0 + half_width_frac));
}

}  // namespace mfg
