#include "mfg/equilibrium.hpp"

#include <algorithm>
#include <cmath>

namespace mfg {

namespace {

PriceVector prices_at_capital(double k, double labor, double z, const ModelParams& params) {
    const Production f = production(k, labor, z, params.production_scale);
    return {f.marginal_k, f.marginal_l};
}

// Capital demand at interest rate r: r = A e^z / 2 * sqrt(L/K).
double capital_at_interest(double r, double labor, double z, const ModelParams& params) {
    const double a = params.production_scale * std::exp(z);
    return labor * std::pow(a / (2.0 * r), 2.0);
}

struct SupplyEval {
    double excess = 0.0;
    StationaryHjb hjb;
    Density density;
    Moments moments;
};

SupplyEval evaluate_supply(double k, double labor, const StateGrid& grid,
                           const ModelParams& params, const EquilibriumOptions& opts,
                           const ValueField* warm) {
    SupplyEval out;
    const PriceVector p = prices_at_capital(k, labor, opts.z, params);
    out.hjb = solve_stationary_hjb(p, grid, params, opts.hjb, warm);
    out.density = stationary_density(out.hjb.generator);
    out.moments = aggregate_moments(out.density, grid);
    out.excess = out.moments.wealth - k;
    return out;
}

}  // namespace

double stationary_mean_income(const StateGrid& grid, const ModelParams& params) {
    if (const auto* ts = std::get_if<TwoStateIncome>(&params.income)) {
        return (ts->rate_down * ts->y_lo + ts->rate_up * ts->y_hi) /
               (ts->rate_up + ts->rate_down);
    }
    // reflected OU on the income axis: stationary distribution of the 1-d chain
    const auto& ou = std::get<OuIncome>(params.income);
    const int ny = grid.n_income();
    std::vector<Eigen::Triplet<double>> trip;
    for (int iy = 0; iy < ny; ++iy) {
        const double y = grid.income[iy];
        double diag = 0.0;
        const double mu = ou.mean_reversion * (ou.long_run_mean - y);
        if (mu > 0.0 && iy + 1 < ny) {
            const double c = mu / (grid.income[iy + 1] - y);
            trip.emplace_back(iy, iy + 1, c);
            diag -= c;
        } else if (mu < 0.0 && iy > 0) {
            const double c = -mu / (y - grid.income[iy - 1]);
            trip.emplace_back(iy, iy - 1, c);
            diag -= c;
        }
        if (iy > 0 && iy + 1 < ny) {
            const double dl = y - grid.income[iy - 1];
            const double dr = grid.income[iy + 1] - y;
            const double cl = 2.0 * ou.diffusion / (dl * (dl + dr));
            const double cr = 2.0 * ou.diffusion / (dr * (dl + dr));
            trip.emplace_back(iy, iy - 1, cl);
            trip.emplace_back(iy, iy + 1, cr);
            diag -= cl + cr;
        } else if (iy == 0 && ny > 1) {
            const double dr = grid.income[1] - grid.income[0];
            const double c = ou.diffusion / (dr * dr);
            trip.emplace_back(0, 1, c);
            diag -= c;
        } else if (iy == ny - 1 && ny > 1) {
            const double dl = grid.income[ny - 1] - grid.income[ny - 2];
            const double c = ou.diffusion / (dl * dl);
            trip.emplace_back(iy, iy - 1, c);
            diag -= c;
        }
        trip.emplace_back(iy, iy, diag);
    }
    TransitionOperator chain(ny, ny);
    chain.setFromTriplets(trip.begin(), trip.end());
    const Density pi = stationary_density(chain);
    return pi.mass.dot(grid.income);
}

StationaryEquilibrium solve_stationary_equilibrium(const StateGrid& grid,
                                                   const ModelParams& params,
                                                   const EquilibriumOptions& opts) {
    params.validate();
    grid.validate();
    const double labor = stationary_mean_income(grid, params);

    // Bracket: supply outruns demand just below r = rho, demand outruns supply
    // at low rates. Expand outward if either end has the wrong sign.
    double k_lo = capital_at_interest(0.99 * params.rho, labor, opts.z, params);
    double k_hi = capital_at_interest(0.25 * params.rho, labor, opts.z, params);

    StationaryEquilibrium out;
    out.labor = labor;
    int evals = 0;
    ValueField warm;
    const ValueField* warm_ptr = nullptr;

    auto eval = [&](double k) {
        SupplyEval e = evaluate_supply(k, labor, grid, params, opts, warm_ptr);
        warm = e.hjb.value;
        warm_ptr = &warm;
        ++evals;
        out.trace.push_back({k, e.excess});
        return e;
    };

    SupplyEval lo = eval(k_lo);
    for (int tries = 0; lo.excess < 0.0 && tries < 8; ++tries) {
        k_lo = capital_at_interest((0.99 + 0.0012 * (tries + 1)) * params.rho, labor, opts.z,
                                   params);
        lo = eval(k_lo);
    }
    SupplyEval hi = eval(k_hi);
    for (int tries = 0; hi.excess > 0.0 && tries < 8; ++tries) {
        k_hi *= 4.0;
        hi = eval(k_hi);
    }
    if (lo.excess < 0.0 || hi.excess > 0.0)
        throw ConfigError("stationary equilibrium bracket failure: excess supply has no sign change");

    SupplyEval mid_eval;
    double k_mid = 0.5 * (k_lo + k_hi);
    for (int it = 0; it < opts.max_iter; ++it) {
        k_mid = 0.5 * (k_lo + k_hi);
        mid_eval = eval(k_mid);
        if (mid_eval.excess > 0.0)
            k_lo = k_mid;
        else
            k_hi = k_mid;
        if ((k_hi - k_lo) < opts.k_rel_tol * std::max(1.0, k_mid)) break;
    }
    if ((k_hi - k_lo) >= opts.k_rel_tol * std::max(1.0, k_mid))
        throw ConvergenceError("stationary equilibrium bisection did not converge",
                               k_hi - k_lo, evals);

    out.capital = k_mid;
    out.prices = prices_at_capital(k_mid, labor, opts.z, params);
    out.value = mid_eval.hjb.value;
    out.policy = mid_eval.hjb.policy;
    out.generator = mid_eval.hjb.generator;
    out.density = mid_eval.density;
    out.hjb_residual = mid_eval.hjb.residual;
    out.evaluations = evals;
    out.clearing_residual =
        market_clearing_residual(out.prices, out.density, opts.z, grid, params);
    return out;
}

TransitionPath solve_perfect_foresight_transition(const Density& m0, int n_steps,
                                                  const StateGrid& grid,
                                                  const ModelParams& params,
                                                  const StationaryEquilibrium& terminal,
                                                  const TransitionOptions& opts) {
    if (n_steps < 1) throw ConfigError("transition needs at least one step");
    m0.validate(grid);
    const double dt = params.dt;

    TransitionPath out;
    out.dt = dt;
    if (opts.initial_guess.empty()) {
        out.guess.assign(n_steps, terminal.prices);
    } else {
        if (static_cast<int>(opts.initial_guess.size()) != n_steps)
            throw ShapeError("initial price guess length does not match the step count");
        out.guess = opts.initial_guess;
    }
    out.residual_history.reserve(64);

    double omega = opts.omega;
    double best = std::numeric_limits<double>::infinity();
    std::vector<PriceVector> realized(n_steps + 1);
    HjbPath sweep;
    std::vector<Density> densities(n_steps + 1);

    int it = 0;
    for (; it < opts.max_iter; ++it) {
        sweep = solve_hjb_path(out.guess, terminal.value, dt, grid, params);
        densities[0] = m0;
        double residual = 0.0;
        for (int k = 0; k < n_steps; ++k) {
            realized[k] = price_functional(densities[k], opts.z, grid, params);
            residual = std::max(residual,
                                (realized[k].vec() - out.guess[k].vec()).cwiseAbs().maxCoeff());
            const TransitionOperator gen =
                build_generator(sweep.policies[k], grid, params, out.guess[k]);
            densities[k + 1] = fp_forward_step(densities[k], gen, dt);
        }
        realized[n_steps] = price_functional(densities[n_steps], opts.z, grid, params);
        out.residual_history.push_back(residual);

        if (residual < opts.tol) break;
        for (int k = 0; k < n_steps; ++k)
            out.guess[k] =
                PriceVector::from_vec(out.guess[k].vec() +
                                      omega * (realized[k].vec() - out.guess[k].vec()));
        if (residual < best) {
            best = residual;
            omega = std::min(0.5, omega * 1.08);
        } else {
            omega = std::max(0.02, omega * 0.5);
        }
    }
    if (it == opts.max_iter)
        throw ConvergenceError("perfect-foresight transition did not converge",
                               out.residual_history.back(), it);

    out.prices = realized;
    out.densities = std::move(densities);
    out.policies = std::move(sweep.policies);
    out.values = std::move(sweep.values);
    out.iterations = it + 1;
    return out;
}

}  // namespace mfg
