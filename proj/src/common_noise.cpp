#include "mfg/common_noise.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "mfg/errors.hpp"

namespace mfg {

namespace {

AggregatePath euler_maruyama(std::uint64_t seed, int n_steps, double dt, double beta,
                             double z0, const double* lo, const double* hi) {
    if (n_steps < 0) throw ConfigError("n_steps must be nonnegative");
    if (dt <= 0.0) throw ConfigError("dt must be positive");
    if (beta < 0.0) throw ConfigError("beta must be nonnegative");
    if (lo) {
        if (*lo >= *hi) throw ConfigError("reflection bounds need lo < hi");
        if (z0 < *lo || z0 > *hi)
            throw ConfigError("z0 must start inside the reflection bounds");
    }

    AggregatePath out;
    out.seed = seed;
    out.dt = dt;
    out.time.resize(n_steps + 1);
    for (int t = 0; t <= n_steps; ++t) out.time[t] = t * dt;
    out.z.assign(n_steps + 1, z0);
    if (beta == 0.0) return out;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double step_sd = std::sqrt(2.0 * beta * dt);
    double z = z0;
    for (int t = 1; t <= n_steps; ++t) {
        z += step_sd * normal(rng);
        while (lo && (z < *lo || z > *hi)) {
            z = z < *lo ? 2.0 * *lo - z : 2.0 * *hi - z;
            ++out.reflections;
        }
        out.z[t] = z;
    }
    return out;
}

TensorAxes extended_axes(const StateGrid& grid) {
    if (grid.z_nodes.size() < 1) throw ConfigError("extended solve needs an aggregate axis");
    if (!grid.theta_nodes.empty())
        throw ConfigError(
            "extended solve treats beliefs as a parameter; belief axes belong to the "
            "internalized solve");
    TensorAxes ax;
    push_price_axes(ax, grid);
    ax.push(AxisRole::aggregate, grid.z_nodes, "aggregate");
    ax.finish();
    return ax;
}

template <typename F>
auto annotate_date(int t, F&& f) {
    try {
        return f();
    } catch (const ConvergenceError& e) {
        throw ConvergenceError("date " + std::to_string(t) + ": " + e.what(), e.residual,
                               e.iterations);
    } catch (const ConfigError&) {
        throw;
    } catch (const ShapeError&) {
        throw;
    } catch (const DomainError&) {
        throw;
    } catch (const ConstraintError&) {
        throw;
    } catch (const NonUniquenessError&) {
        throw;
    } catch (const NumericalError& e) {
        throw NumericalError("date " + std::to_string(t) + ": " + e.what());
    }
}

void check_horizon(int n_steps, const ModelParams& params, bool enforce) {
    if (!enforce || n_steps == 0) return;
    const double span = n_steps * params.dt;
    if (span * params.rho < 50.0 - 1e-9)
        throw ConfigError(
            "horizon too short for the terminal condition to wash out: need "
            "n_steps * dt >= 50 / rho (got " +
            std::to_string(span) + ", need " + std::to_string(50.0 / params.rho) +
            "); set enforce_horizon = false to override");
}

}  // namespace

AggregatePath simulate_aggregate_path(std::uint64_t seed, int n_steps, double dt, double beta,
                                      double z0) {
    return euler_maruyama(seed, n_steps, dt, beta, z0, nullptr, nullptr);
}

AggregatePath simulate_aggregate_path(std::uint64_t seed, int n_steps, double dt, double beta,
                                      double z0, double lo, double hi) {
    return euler_maruyama(seed, n_steps, dt, beta, z0, &lo, &hi);
}

TensorField solve_extended_hjb(const PlmSpec& plm, const StateGrid& grid,
                               const ModelParams& params, const ValueField& terminal,
                               int n_steps) {
    const TensorAxes ax = extended_axes(grid);
    if (params.beta > 0.0 && grid.z_nodes.size() < 2)
        throw ConfigError("aggregate diffusion needs at least two z nodes");
    if (plm.sigma_p < 0.0) throw ConfigError("believed price volatility must be nonnegative");

    const int z_axis = ax.n_axes() - 1;
    const double sigma_z = std::sqrt(2.0 * params.beta);
    return solve_split_hjb(
        ax, grid, params, terminal, n_steps,
        [&](int axis, int combo, double) {
            if (axis == z_axis) return 0.0;
            const Eigen::Vector2d mu = plm.drift(ax.price_at(combo), ax.coord(combo, z_axis));
            return mu[axis];
        },
        [&](int axis) { return axis == z_axis ? sigma_z : plm.sigma_p; });
}

SimulationTrack run_learning_simulation(const Density& m0, double z0,
                                        const BeliefState& belief0, const PlmSpec& plm_family,
                                        const LearningRule& rule, const StateGrid& grid,
                                        const ModelParams& params, int n_steps,
                                        const ValueField& terminal,
                                        const SimulationOptions& opts) {
    params.validate();
    grid.validate();
    if (n_steps < 0) throw ConfigError("n_steps must be nonnegative");
    if (terminal.v.size() != grid.n_x())
        throw ShapeError("terminal value size does not match grid");
    if (opts.cache_threshold < 0.0) throw ConfigError("cache threshold must be nonnegative");
    if (plm_family.theta.size() != 0)
        throw ConfigError("the drift family reads its parameters from the belief state");
    if (belief0.theta.size() == 0) throw ShapeError("belief needs parameters");
    if (params.beta > 0.0 && grid.z_nodes.size() < 2)
        throw ConfigError("aggregate diffusion needs at least two z nodes");
    m0.validate(grid);
    const TensorAxes ax = extended_axes(grid);
    check_horizon(n_steps, params, opts.enforce_horizon);

    // realized z reflects at the gridded range, matching the believed dynamics
    const Eigen::VectorXd& zq = grid.z_nodes;
    const int n_z = static_cast<int>(zq.size());
    const AggregatePath path =
        n_z >= 2 ? simulate_aggregate_path(opts.seed, n_steps, params.dt, params.beta, z0,
                                           zq[0], zq[n_z - 1])
                 : simulate_aggregate_path(opts.seed, n_steps, params.dt, params.beta, z0);

    const bool disabled = opts.cache_threshold == 0.0;
    const int n_p_axes = ax.n_axes() - 1;
    const int z_axis = n_p_axes;
    const int n_x = grid.n_x();

    SimulationTrack track;
    track.dt = params.dt;
    track.cache_disabled = disabled;
    track.reflections = path.reflections;
    track.time.reserve(n_steps + 1);
    track.z.reserve(n_steps + 1);
    track.prices.reserve(n_steps + 1);
    track.clearing.reserve(n_steps + 1);
    track.beliefs.reserve(n_steps + 1);
    track.densities.reserve(n_steps + 1);
    track.policies.reserve(n_steps);
    track.resolved.reserve(n_steps);

    struct Cache {
        Eigen::VectorXd theta;
        int t_ref = -1;
        TensorField tail;
    } cache;

    Density m = m0;
    BeliefState belief = belief0;
    for (int t = 0; t <= n_steps; ++t) {
        const double z_t = path.z[t];
        const PriceVector p_t = price_functional(m, z_t, grid, params);
        track.time.push_back(t * params.dt);
        track.z.push_back(z_t);
        track.prices.push_back(p_t);
        track.clearing.push_back(market_clearing_residual(p_t, m, z_t, grid, params));
        track.beliefs.push_back(belief.theta);
        track.densities.push_back(m);
        if (t == n_steps) break;

        const bool refresh =
            cache.t_ref < 0 || disabled ||
            (belief.theta - cache.theta).lpNorm<Eigen::Infinity>() >
                opts.cache_threshold * cache.theta.lpNorm<Eigen::Infinity>();
        if (refresh) {
            PlmSpec plm = plm_family;
            plm.theta = belief.theta;
            cache.tail = annotate_date(
                t, [&] { return solve_extended_hjb(plm, grid, params, terminal, n_steps - t); });
            cache.t_ref = t;
            cache.theta = belief.theta;
            ++track.hjb_solves;
        }
        track.resolved.push_back(refresh ? 1 : 0);

        // grid lookups clamp, so off-grid excursions reuse edge policies; count them
        if (z_t < zq[0] || z_t > zq[n_z - 1]) ++track.z_excursions;
        bool p_out = p_t.interest < ax.axes[0][0] || p_t.interest > ax.axes[0][ax.size(0) - 1];
        if (n_p_axes == 2)
            p_out = p_out || p_t.wage < ax.axes[1][0] || p_t.wage > ax.axes[1][ax.size(1) - 1];
        if (p_out) ++track.p_excursions;

        Eigen::VectorXd coords(ax.n_axes());
        coords[0] = p_t.interest;
        if (n_p_axes == 2) coords[1] = p_t.wage;
        coords[z_axis] = z_t;
        PolicyField policy;
        policy.consumption =
            interpolate_axes(ax, cache.tail.consumption[t - cache.t_ref], n_x, coords);
        // node policies cap consumption at their own node prices; the realized
        // price sits off-node, so re-cap at the wealth constraint (drift >= 0)
        for (int iy = 0; iy < grid.n_income(); ++iy) {
            const int i0 = grid.x_index(0, iy);
            const double res =
                p_t.interest * grid.wealth[0] + p_t.wage * grid.income[iy];
            if (policy.consumption[i0] > res) policy.consumption[i0] = res;
        }
        policy.drift.resize(n_x);
        for (int iy = 0; iy < grid.n_income(); ++iy)
            for (int ia = 0; ia < grid.n_wealth(); ++ia) {
                const int i = grid.x_index(ia, iy);
                policy.drift[i] = p_t.interest * grid.wealth[ia] +
                                  p_t.wage * grid.income[iy] - policy.consumption[i];
            }

        const TransitionOperator gen = build_generator(policy, grid, params, p_t);
        m = annotate_date(t, [&] { return fp_forward_step(m, gen, params.dt); });
        track.policies.push_back(std::move(policy));
        belief = update_beliefs(rule, belief, p_t, params.dt, z_t);
    }
    return track;
}

Eigen::VectorXd spread_axis(double center, double half_width, int n) {
    if (n < 1) throw ConfigError("axis needs at least one node");
    if (half_width < 0.0) throw ConfigError("axis half-width must be nonnegative");
    if (n == 1) return Eigen::VectorXd::Constant(1, center);
    return Eigen::VectorXd::LinSpaced(n, center - half_width, center + half_width);
}

}  // namespace mfg
