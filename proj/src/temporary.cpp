#include "mfg/temporary.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace mfg {

namespace {

struct SweepPlan {
    std::vector<PriceVector> prices;  // per-sweep-step price, entry 0 = p_t
    PriceVector one_ahead;            // forecast of the next outer step, for diagnostics
    double dt = 0.0;
    bool clipped = false;
};

// Forecast at the outer resolution (keeps external-path indexing and the RK4
// step size independent of the sweep coarsening), then sample every k-th entry.
SweepPlan plan_sweep(const Predictor& predictor, const BeliefState& belief,
                     const PriceVector& p_now, int step_index, int n_steps,
                     const ModelParams& params, const TemporaryOptions& opts) {
    const int remaining = n_steps - step_index;
    const int k = opts.inner_dt_multiple;
    const PricePath fine = predict_price_path(predictor, belief, p_now, step_index,
                                              remaining + 1, params.dt, opts.box);
    SweepPlan plan;
    plan.clipped = fine.clipped;
    plan.one_ahead = fine.values[1];
    plan.dt = params.dt * k;
    const int n_eff = (remaining + k - 1) / k;
    plan.prices.reserve(n_eff);
    for (int j = 0; j < n_eff; ++j) plan.prices.push_back(fine.values[j * k]);
    return plan;
}

template <typename F>
auto annotate_date(int t, F&& f) {
    try {
        return f();
    } catch (const ConvergenceError& e) {
        throw ConvergenceError("date " + std::to_string(t) + ": " + e.what(), e.residual,
                               e.iterations);
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

void check_step_inputs(int step_index, int n_steps, const TemporaryOptions& opts,
                       const ModelParams& params, const StateGrid& grid,
                       const ValueField& terminal) {
    if (step_index < 0 || step_index >= n_steps)
        throw ConfigError("step index must lie in [0, n_steps)");
    if (opts.inner_dt_multiple < 1) throw ConfigError("inner_dt_multiple must be at least 1");
    if (terminal.v.size() != grid.n_x()) throw ShapeError("terminal value size does not match grid");
    if (params.dt <= 0.0) throw ConfigError("dt must be positive");
}

void check_horizon(int n_steps, const ModelParams& params, const TemporaryOptions& opts) {
    if (!opts.enforce_horizon || n_steps == 0) return;
    const double span = n_steps * params.dt;
    if (span * params.rho < 50.0 - 1e-9)
        throw ConfigError(
            "horizon too short for the terminal condition to wash out: need "
            "n_steps * dt >= 50 / rho (got " +
            std::to_string(span) + ", need " + std::to_string(50.0 / params.rho) +
            "); set enforce_horizon = false to override");
}

struct TypeStepOut {
    PolicyField policy;
    Density m_next;
    PricePath forecast;
    PriceVector one_ahead;
    bool clipped = false;
};

TypeStepOut step_one_type(const Density& m_t, const BeliefState& belief,
                          const Predictor& predictor, const PriceVector& p_t, int step_index,
                          int n_steps, const StateGrid& grid, const ModelParams& params,
                          const ValueField& terminal, const TemporaryOptions& opts) {
    return annotate_date(step_index, [&] {
        SweepPlan plan = plan_sweep(predictor, belief, p_t, step_index, n_steps, params, opts);
        const HjbPath sweep = solve_hjb_path(plan.prices, terminal, plan.dt, grid, params);
        TypeStepOut out;
        out.policy = sweep.policies[0];  // extracted at the realized p_t = plan.prices[0]
        const TransitionOperator gen = build_generator(out.policy, grid, params, p_t);
        out.m_next = fp_forward_step(m_t, gen, params.dt);
        out.one_ahead = plan.one_ahead;
        out.forecast.values = std::move(plan.prices);
        out.forecast.clipped = plan.clipped;
        out.clipped = plan.clipped;
        return out;
    });
}

}  // namespace

TemporaryStep temporary_equilibrium_step(const Density& m_t, const BeliefState& belief,
                                         int step_index, int n_steps,
                                         const Predictor& predictor, const LearningRule& rule,
                                         const StateGrid& grid, const ModelParams& params,
                                         const ValueField& terminal,
                                         const TemporaryOptions& opts) {
    check_step_inputs(step_index, n_steps, opts, params, grid, terminal);
    m_t.validate(grid);

    TemporaryStep out;
    out.price = price_functional(m_t, opts.z, grid, params);
    out.diagnostics.clearing_residual =
        market_clearing_residual(out.price, m_t, opts.z, grid, params);

    TypeStepOut stepped = step_one_type(m_t, belief, predictor, out.price, step_index, n_steps,
                                        grid, params, terminal, opts);
    out.policy = std::move(stepped.policy);
    out.m_next = std::move(stepped.m_next);
    out.forecast = std::move(stepped.forecast);
    out.diagnostics.forecast_clipped = stepped.clipped;
    out.belief_next = update_beliefs(rule, belief, out.price, params.dt, opts.z);
    return out;
}

Trajectory run_heterogeneous_beliefs(const std::vector<BeliefTypeConfig>& types,
                                     const LearningRule& rule, const StateGrid& grid,
                                     const ModelParams& params, int n_steps,
                                     const ValueField& terminal,
                                     const TemporaryOptions& opts) {
    if (types.empty()) throw ConfigError("need at least one belief type");
    if (n_steps < 0) throw ConfigError("n_steps must be nonnegative");
    if (opts.inner_dt_multiple < 1) throw ConfigError("inner_dt_multiple must be at least 1");
    if (terminal.v.size() != grid.n_x() && n_steps > 0)
        throw ShapeError("terminal value size does not match grid");
    check_horizon(n_steps, params, opts);

    const int j_types = static_cast<int>(types.size());
    double weight_sum = 0.0;
    for (const auto& t : types) {
        if (t.weight <= 0.0) throw ConfigError("belief type weights must be positive");
        t.density.validate(grid);
        weight_sum += t.weight;
    }
    if (std::abs(weight_sum - 1.0) > 1e-10)
        throw ConfigError("belief type weights must sum to 1");

    Trajectory out;
    out.dt = params.dt;
    out.time.reserve(n_steps + 1);
    out.prices.reserve(n_steps + 1);
    out.clearing.reserve(n_steps + 1);
    out.densities.reserve(n_steps + 1);
    out.types.resize(j_types);

    struct Work {
        BeliefState belief;
        Density density;
        PriceVector last_one_ahead;
        bool has_forecast = false;
    };
    std::vector<Work> work(j_types);
    for (int j = 0; j < j_types; ++j) {
        work[j].belief = types[j].belief;
        work[j].density = types[j].density;
        out.types[j].weight = types[j].weight;
        auto& track = out.types[j];
        track.beliefs.reserve(n_steps + 1);
        track.densities.reserve(n_steps + 1);
        track.policies.reserve(n_steps);
        track.forecast_errors.reserve(n_steps + 1);
        track.forecast_clipped.reserve(n_steps);
    }

    auto aggregate = [&] {
        Density m;
        m.mass = Eigen::VectorXd::Zero(grid.n_x());
        for (int j = 0; j < j_types; ++j) m.mass += types[j].weight * work[j].density.mass;
        return m;
    };

    for (int t = 0; t <= n_steps; ++t) {
        const Density m_t = aggregate();
        const PriceVector p_t = price_functional(m_t, opts.z, grid, params);
        out.time.push_back(t * params.dt);
        out.prices.push_back(p_t);
        out.clearing.push_back(market_clearing_residual(p_t, m_t, opts.z, grid, params));
        out.densities.push_back(m_t);

        for (int j = 0; j < j_types; ++j) {
            auto& w = work[j];
            auto& track = out.types[j];
            track.beliefs.push_back(w.belief.theta);
            track.densities.push_back(w.density);
            if (t > 0 && w.has_forecast)
                track.forecast_errors.push_back(w.last_one_ahead.vec() - p_t.vec());
            else
                track.forecast_errors.push_back(Eigen::Vector2d::Zero());

            if (t == n_steps) continue;

            TypeStepOut stepped = step_one_type(w.density, w.belief, types[j].predictor, p_t,
                                                t, n_steps, grid, params, terminal, opts);
            track.policies.push_back(std::move(stepped.policy));
            track.forecast_clipped.push_back(stepped.clipped ? 1 : 0);
            w.density = std::move(stepped.m_next);
            w.last_one_ahead = stepped.one_ahead;
            w.has_forecast = true;
            w.belief = update_beliefs(rule, w.belief, p_t, params.dt, opts.z);
        }
    }
    return out;
}

Trajectory run_temporary_equilibrium(const Density& m0, const BeliefState& belief0,
                                     const Predictor& predictor, const LearningRule& rule,
                                     const StateGrid& grid, const ModelParams& params,
                                     int n_steps, const ValueField& terminal,
                                     const TemporaryOptions& opts) {
    BeliefTypeConfig only;
    only.weight = 1.0;
    only.predictor = predictor;
    only.belief = belief0;
    only.density = m0;
    return run_heterogeneous_beliefs({only}, rule, grid, params, n_steps, terminal, opts);
}

}  // namespace mfg
