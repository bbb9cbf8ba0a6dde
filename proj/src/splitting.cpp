#include "mfg/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfg/errors.hpp"

namespace mfg {

void TensorAxes::push(AxisRole role, const Eigen::VectorXd& axis, const char* what) {
    if (axis.size() < 1) throw ShapeError(std::string(what) + " axis is empty");
    for (int i = 0; i + 1 < axis.size(); ++i)
        if (axis[i + 1] <= axis[i])
            throw ShapeError(std::string(what) + " axis must be strictly increasing");
    axes.push_back(axis);
    roles.push_back(role);
}

void TensorAxes::finish() {
    combos = 1;
    for (int k = 0; k < n_axes(); ++k) combos *= size(k);
}

int TensorAxes::stride(int k) const {
    int s = 1;
    for (int j = 0; j < k; ++j) s *= size(j);
    return s;
}

PriceVector TensorAxes::price_at(int combo) const {
    PriceVector p;
    p.wage = fixed_wage;
    for (int k = 0; k < n_axes(); ++k) {
        if (roles[k] == AxisRole::interest) p.interest = coord(combo, k);
        if (roles[k] == AxisRole::wage) p.wage = coord(combo, k);
    }
    return p;
}

namespace {

Eigen::VectorXd replicate_terminal(const ValueField& terminal, int n_x, int combos) {
    const auto n = terminal.v.size();
    if (n == static_cast<Eigen::Index>(n_x) * combos) return terminal.v;
    if (n != n_x) throw ShapeError("terminal must be one x-block or a full slice");
    Eigen::VectorXd out(static_cast<Eigen::Index>(n_x) * combos);
    for (int c = 0; c < combos; ++c)
        out.segment(static_cast<Eigen::Index>(c) * n_x, n_x) = terminal.v;
    return out;
}

// One implicit upwind transport step along axis k for every line of the slice:
// (I - dt T) u_new = u, with T built from the per-node drift and diffusion.
// Drift out of the edge nodes is reflected. Tridiagonal Thomas solve, factored
// once per line and reused across the n_x right-hand sides.
void transport_axis(Eigen::VectorXd& slice, int n_x, const TensorAxes& ax, int k,
                    const std::function<double(int combo)>& drift_at, double sigma, double dt,
                    double& courant) {
    const int n = ax.size(k);
    if (n < 2) return;
    const Eigen::VectorXd& q = ax.axes[k];
    const int cs = ax.stride(k);
    const double diff = 0.5 * sigma * sigma;

    std::vector<double> sub(n), diag(n), sup(n), w(n), dprime(n), rhs(n);
    for (int c0 = 0; c0 < ax.combos; ++c0) {
        if (ax.index_along(c0, k) != 0) continue;

        for (int i = 0; i < n; ++i) {
            const int combo = c0 + i * cs;
            double t_sub = 0.0, t_sup = 0.0;
            const double mu = drift_at(combo);
            if (mu > 0.0 && i + 1 < n) {
                const double h = q[i + 1] - q[i];
                t_sup += mu / h;
                courant = std::max(courant, mu * dt / h);
            } else if (mu < 0.0 && i > 0) {
                const double h = q[i] - q[i - 1];
                t_sub += -mu / h;
                courant = std::max(courant, -mu * dt / h);
            }
            if (diff > 0.0) {
                if (i > 0 && i + 1 < n) {
                    const double dl = q[i] - q[i - 1];
                    const double dr = q[i + 1] - q[i];
                    t_sub += 2.0 * diff / (dl * (dl + dr));
                    t_sup += 2.0 * diff / (dr * (dl + dr));
                } else if (i == 0) {
                    const double dr = q[1] - q[0];
                    t_sup += diff / (dr * dr);
                } else {
                    const double dl = q[n - 1] - q[n - 2];
                    t_sub += diff / (dl * dl);
                }
            }
            sub[i] = -dt * t_sub;
            sup[i] = -dt * t_sup;
            diag[i] = 1.0 + dt * (t_sub + t_sup);
        }

        dprime[0] = diag[0];
        for (int i = 1; i < n; ++i) {
            w[i] = sub[i] / dprime[i - 1];
            dprime[i] = diag[i] - w[i] * sup[i - 1];
        }

        for (int x = 0; x < n_x; ++x) {
            rhs[0] = slice[x + static_cast<Eigen::Index>(n_x) * c0];
            for (int i = 1; i < n; ++i)
                rhs[i] = slice[x + static_cast<Eigen::Index>(n_x) * (c0 + i * cs)] -
                         w[i] * rhs[i - 1];
            double prev = rhs[n - 1] / dprime[n - 1];
            slice[x + static_cast<Eigen::Index>(n_x) * (c0 + (n - 1) * cs)] = prev;
            for (int i = n - 2; i >= 0; --i) {
                prev = (rhs[i] - sup[i] * prev) / dprime[i];
                slice[x + static_cast<Eigen::Index>(n_x) * (c0 + i * cs)] = prev;
            }
        }
    }
}

}  // namespace

TensorField solve_split_hjb(const TensorAxes& ax, const StateGrid& grid,
                            const ModelParams& params, const ValueField& terminal, int n_steps,
                            const std::function<double(int, int, double)>& drift,
                            const std::function<double(int)>& sigma) {
    if (n_steps < 0) throw ConfigError("n_steps must be nonnegative");
    params.validate();
    grid.validate();
    const int n_x = grid.n_x();

    TensorField out;
    out.dt = params.dt;
    out.courant.assign(ax.n_axes(), 0.0);
    out.values.resize(n_steps + 1);
    out.consumption.resize(n_steps);
    out.values[n_steps] = replicate_terminal(terminal, n_x, ax.combos);

    ValueField block;
    for (int m = n_steps - 1; m >= 0; --m) {
        const Eigen::VectorXd& next = out.values[m + 1];
        Eigen::VectorXd cur(next.size());
        Eigen::VectorXd cons(next.size());
        for (int c = 0; c < ax.combos; ++c) {
            block.v = next.segment(static_cast<Eigen::Index>(c) * n_x, n_x);
            const HjbStepResult step =
                hjb_backward_step(block, ax.price_at(c), params.dt, grid, params);
            cur.segment(static_cast<Eigen::Index>(c) * n_x, n_x) = step.value.v;
            cons.segment(static_cast<Eigen::Index>(c) * n_x, n_x) = step.policy.consumption;
        }
        const double s = m * params.dt;
        for (int k = 0; k < ax.n_axes(); ++k)
            transport_axis(
                cur, n_x, ax, k, [&](int combo) { return drift(k, combo, s); }, sigma(k),
                params.dt, out.courant[k]);
        out.values[m] = std::move(cur);
        out.consumption[m] = std::move(cons);
    }
    return out;
}

void push_price_axes(TensorAxes& ax, const StateGrid& grid) {
    const int n_p = static_cast<int>(grid.p_nodes.size());
    if (n_p < 1) throw ConfigError("need at least one price axis");
    if (n_p > 2) throw ConfigError("at most two price axes (interest, wage)");
    if (n_p == 1 && grid.fixed_wage <= 0.0)
        throw ConfigError("a single price axis needs a positive fixed_wage");

    ax.fixed_wage = grid.fixed_wage;
    ax.push(AxisRole::interest, grid.p_nodes[0], "price");
    if (n_p == 2) ax.push(AxisRole::wage, grid.p_nodes[1], "price");
    if (grid.p_nodes[0][0] < 0.0) throw ConfigError("interest axis must be nonnegative");
    if (n_p == 2 && grid.p_nodes[1][0] <= 0.0)
        throw ConfigError("wage axis must be positive");
}

Eigen::VectorXd interpolate_axes(const TensorAxes& ax, const Eigen::VectorXd& slice, int n_x,
                                 const Eigen::VectorXd& coords) {
    if (ax.n_axes() == 0) throw ConfigError("no extra axes to interpolate over");
    if (coords.size() != ax.n_axes())
        throw ShapeError("need one coordinate per interpolation axis");
    if (slice.size() != static_cast<Eigen::Index>(n_x) * ax.combos)
        throw ShapeError("slice length does not match the grid");

    std::vector<int> lo(ax.n_axes());
    std::vector<double> frac(ax.n_axes());
    for (int k = 0; k < ax.n_axes(); ++k) {
        const Eigen::VectorXd& q = ax.axes[k];
        const int n = ax.size(k);
        const double clamped = std::clamp(coords[k], q[0], q[n - 1]);
        int i = 0;
        while (i + 2 < n && q[i + 1] <= clamped) ++i;
        lo[k] = i;
        frac[k] = n == 1 ? 0.0 : (clamped - q[i]) / (q[i + 1] - q[i]);
    }

    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_x);
    const int corners = 1 << ax.n_axes();
    for (int corner = 0; corner < corners; ++corner) {
        double weight = 1.0;
        int combo = 0;
        for (int k = 0; k < ax.n_axes(); ++k) {
            const bool hi = (corner >> k) & 1;
            if (hi && ax.size(k) == 1) {
                weight = 0.0;
                break;
            }
            weight *= hi ? frac[k] : 1.0 - frac[k];
            combo += (lo[k] + (hi ? 1 : 0)) * ax.stride(k);
        }
        if (weight == 0.0) continue;
        out += weight * slice.segment(static_cast<Eigen::Index>(combo) * n_x, n_x);
    }
    return out;
}

}  // namespace mfg
