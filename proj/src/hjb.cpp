#include "mfg/hjb.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <limits>

namespace mfg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double resources_at(const PriceVector& p, double a, double y) {
    return p.interest * a + p.wage * y;
}

}  // namespace

double utility(double c, double crra) {
    if (c <= 0.0) return kNegInf;
    if (crra == 1.0) return std::log(c);
    return std::pow(c, 1.0 - crra) / (1.0 - crra);
}

std::optional<double> optimal_consumption(double lambda, double crra) {
    if (lambda <= 0.0) return std::nullopt;
    if (crra == 1.0) return 1.0 / lambda;
    return std::pow(lambda, -1.0 / crra);
}

std::optional<double> hamiltonian(double a, double y, double lambda, const PriceVector& p,
                                  double crra) {
    const auto c = optimal_consumption(lambda, crra);
    if (!c) return std::nullopt;
    return utility(*c, crra) + lambda * (resources_at(p, a, y) - *c);
}

double generator_row_sum_error(const TransitionOperator& op) {
    Eigen::VectorXd row_sums = op * Eigen::VectorXd::Ones(op.cols());
    return row_sums.cwiseAbs().maxCoeff();
}

double generator_min_off_diagonal(const TransitionOperator& op) {
    double lo = 0.0;
    for (int k = 0; k < op.outerSize(); ++k)
        for (TransitionOperator::InnerIterator it(op, k); it; ++it)
            if (it.row() != it.col()) lo = std::min(lo, it.value());
    return lo;
}

double monotonicity_violation(const ValueField& u, const StateGrid& grid) {
    const int na = grid.n_wealth();
    double worst = 0.0;
    for (int iy = 0; iy < grid.n_income(); ++iy)
        for (int ia = 0; ia + 1 < na; ++ia) {
            const double d = u.v[grid.x_index(ia + 1, iy)] - u.v[grid.x_index(ia, iy)];
            worst = std::max(worst, -d);
        }
    return worst;
}

double concavity_violation(const ValueField& u, const StateGrid& grid) {
    const int na = grid.n_wealth();
    double worst = 0.0;
    for (int iy = 0; iy < grid.n_income(); ++iy)
        for (int ia = 1; ia + 1 < na; ++ia) {
            const double dl = grid.wealth[ia] - grid.wealth[ia - 1];
            const double dr = grid.wealth[ia + 1] - grid.wealth[ia];
            const double second = (u.v[grid.x_index(ia + 1, iy)] - u.v[grid.x_index(ia, iy)]) / dr -
                                  (u.v[grid.x_index(ia, iy)] - u.v[grid.x_index(ia - 1, iy)]) / dl;
            worst = std::max(worst, second);
        }
    return worst;
}

UpwindChoice upwind_policy_node(bool has_f, double d_f, bool has_b, double d_b,
                                double resources, double crra) {
    UpwindChoice best{resources, 0.0};
    double best_h = utility(resources, crra);
    if (has_f && d_f > 0.0) {
        const double c = *optimal_consumption(d_f, crra);
        const double s = resources - c;
        if (s > 0.0) {
            const double h = utility(c, crra) + d_f * s;
            if (h > best_h) {
                best_h = h;
                best = {c, s};
            }
        }
    }
    if (has_b && d_b > 0.0) {
        const double c = *optimal_consumption(d_b, crra);
        const double s = resources - c;
        if (s < 0.0) {
            const double h = utility(c, crra) + d_b * s;
            if (h > best_h) {
                best_h = h;
                best = {c, s};
            }
        }
    }
    return best;
}

BlockPolicy upwind_block(const Eigen::Ref<const Eigen::VectorXd>& u, const StateGrid& grid,
                         const ModelParams& params, const PriceVector& p) {
    const int na = grid.n_wealth();
    const int n = grid.n_x();
    if (u.size() != n) throw ShapeError("value block size does not match grid");
    BlockPolicy out;
    out.consumption.resize(n);
    out.drift.resize(n);
    out.reward.resize(n);
    for (int iy = 0; iy < grid.n_income(); ++iy) {
        const double y = grid.income[iy];
        for (int ia = 0; ia < na; ++ia) {
            const int idx = grid.x_index(ia, iy);
            const bool has_f = ia + 1 < na;
            const bool has_b = ia > 0;
            const double d_f =
                has_f ? (u[idx + 1] - u[idx]) / (grid.wealth[ia + 1] - grid.wealth[ia]) : 0.0;
            const double d_b =
                has_b ? (u[idx] - u[idx - 1]) / (grid.wealth[ia] - grid.wealth[ia - 1]) : 0.0;
            const UpwindChoice pick = upwind_policy_node(
                has_f, d_f, has_b, d_b, resources_at(p, grid.wealth[ia], y), params.crra);
            out.consumption[idx] = pick.consumption;
            out.drift[idx] = pick.drift;
            out.reward[idx] = utility(pick.consumption, params.crra);
        }
    }
    return out;
}

void append_block_generator(std::vector<Eigen::Triplet<double>>& out, int base,
                            const Eigen::VectorXd& drift, const Eigen::VectorXd& diffusion,
                            const StateGrid& grid, const ModelParams& params) {
    const int na = grid.n_wealth();
    const int ny = grid.n_income();
    if (drift.size() != grid.n_x() || diffusion.size() != grid.n_x())
        throw ShapeError("drift/diffusion size does not match grid");

    for (int iy = 0; iy < ny; ++iy) {
        for (int ia = 0; ia < na; ++ia) {
            const int idx = grid.x_index(ia, iy);
            const int row = base + idx;
            double diag = 0.0;

            const double s = drift[idx];
            if (s > 0.0) {
                if (ia + 1 < na) {
                    const double coef = s / (grid.wealth[ia + 1] - grid.wealth[ia]);
                    out.emplace_back(row, row + 1, coef);
                    diag -= coef;
                }
                // at the top node positive drift reflects (no outflow past a_max)
            } else if (s < 0.0) {
                if (ia == 0) {
                    if (s < -1e-12)
                        throw ConstraintError("policy drift pushes through the wealth constraint");
                } else {
                    const double coef = -s / (grid.wealth[ia] - grid.wealth[ia - 1]);
                    out.emplace_back(row, row - 1, coef);
                    diag -= coef;
                }
            }

            const double nu = diffusion[idx];
            if (nu > 0.0) {
                if (ia > 0 && ia + 1 < na) {
                    const double dl = grid.wealth[ia] - grid.wealth[ia - 1];
                    const double dr = grid.wealth[ia + 1] - grid.wealth[ia];
                    const double cl = 2.0 * nu / (dl * (dl + dr));
                    const double cr = 2.0 * nu / (dr * (dl + dr));
                    out.emplace_back(row, row - 1, cl);
                    out.emplace_back(row, row + 1, cr);
                    diag -= cl + cr;
                } else if (ia == 0) {
                    const double dr = grid.wealth[1] - grid.wealth[0];
                    const double c = nu / (dr * dr);
                    out.emplace_back(row, row + 1, c);
                    diag -= c;
                } else {
                    const double dl = grid.wealth[na - 1] - grid.wealth[na - 2];
                    const double c = nu / (dl * dl);
                    out.emplace_back(row, row - 1, c);
                    diag -= c;
                }
            }

            if (const auto* ts = std::get_if<TwoStateIncome>(&params.income)) {
                if (ny != 2) throw ShapeError("two-state income needs a 2-node income axis");
                const double rate = (iy == 0) ? ts->rate_up : ts->rate_down;
                const int other = base + grid.x_index(ia, 1 - iy);
                out.emplace_back(row, other, rate);
                diag -= rate;
            } else {
                const auto& ou = std::get<OuIncome>(params.income);
                const double y = grid.income[iy];
                const double mu_y = ou.mean_reversion * (ou.long_run_mean - y);
                if (mu_y > 0.0 && iy + 1 < ny) {
                    const double coef = mu_y / (grid.income[iy + 1] - y);
                    out.emplace_back(row, base + grid.x_index(ia, iy + 1), coef);
                    diag -= coef;
                } else if (mu_y < 0.0 && iy > 0) {
                    const double coef = -mu_y / (y - grid.income[iy - 1]);
                    out.emplace_back(row, base + grid.x_index(ia, iy - 1), coef);
                    diag -= coef;
                }
                if (ou.diffusion > 0.0 && ny > 1) {
                    if (iy > 0 && iy + 1 < ny) {
                        const double dl = y - grid.income[iy - 1];
                        const double dr = grid.income[iy + 1] - y;
                        const double cl = 2.0 * ou.diffusion / (dl * (dl + dr));
                        const double cr = 2.0 * ou.diffusion / (dr * (dl + dr));
                        out.emplace_back(row, base + grid.x_index(ia, iy - 1), cl);
                        out.emplace_back(row, base + grid.x_index(ia, iy + 1), cr);
                        diag -= cl + cr;
                    } else if (iy == 0) {
                        const double dr = grid.income[1] - grid.income[0];
                        const double c = ou.diffusion / (dr * dr);
                        out.emplace_back(row, base + grid.x_index(ia, 1), c);
                        diag -= c;
                    } else {
                        const double dl = grid.income[ny - 1] - grid.income[ny - 2];
                        const double c = ou.diffusion / (dl * dl);
                        out.emplace_back(row, base + grid.x_index(ia, ny - 2), c);
                        diag -= c;
                    }
                }
            }

            out.emplace_back(row, row, diag);
        }
    }
}

TransitionOperator build_generator(const PolicyField& policy, const StateGrid& grid,
                                   const ModelParams& params, const PriceVector& p) {
    const int n = grid.n_x();
    if (policy.consumption.size() != n) throw ShapeError("policy size does not match grid");
    Eigen::VectorXd drift(n);
    for (int iy = 0; iy < grid.n_income(); ++iy)
        for (int ia = 0; ia < grid.n_wealth(); ++ia) {
            const int idx = grid.x_index(ia, iy);
            if (policy.consumption[idx] <= 0.0)
                throw DomainError("policy consumption must be positive");
            drift[idx] =
                resources_at(p, grid.wealth[ia], grid.income[iy]) - policy.consumption[idx];
        }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(n) * 6);
    append_block_generator(trip, 0, drift, Eigen::VectorXd::Constant(n, params.nu), grid, params);
    TransitionOperator op(n, n);
    op.setFromTriplets(trip.begin(), trip.end());
    return op;
}

TransitionOperator build_perceived_generator(const PerceivedDynamics& perceived,
                                             const PolicyField& policy, const StateGrid& grid,
                                             const ModelParams& params) {
    const int n = grid.n_x();
    if (policy.consumption.size() != n) throw ShapeError("policy size does not match grid");
    Eigen::VectorXd drift(n), diff(n);
    for (int iy = 0; iy < grid.n_income(); ++iy)
        for (int ia = 0; ia < grid.n_wealth(); ++ia) {
            const int idx = grid.x_index(ia, iy);
            const double a = grid.wealth[ia];
            const double y = grid.income[iy];
            const double c = policy.consumption[idx];
            drift[idx] = perceived.drift ? perceived.drift(a, y, c) : policy.drift[idx];
            diff[idx] = perceived.diffusion ? perceived.diffusion(a, y, c) : params.nu;
            if (diff[idx] < 0.0) throw DomainError("perceived diffusion must be nonnegative");
        }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(n) * 6);
    append_block_generator(trip, 0, drift, diff, grid, params);
    TransitionOperator op(n, n);
    op.setFromTriplets(trip.begin(), trip.end());
    return op;
}

HjbStepResult hjb_backward_step(const ValueField& u_next, const PriceVector& p, double dt,
                                const StateGrid& grid, const ModelParams& params,
                                const PerceivedDynamics* perceived) {
    const int n = grid.n_x();
    if (u_next.v.size() != n) throw ShapeError("value size does not match grid");
    if (dt <= 0.0) throw ConfigError("dt must be positive");

    const BlockPolicy block = upwind_block(u_next.v, grid, params, p);
    HjbStepResult out;
    out.policy.consumption = block.consumption;
    out.policy.drift = block.drift;

    TransitionOperator gen =
        perceived ? build_perceived_generator(*perceived, out.policy, grid, params)
                  : build_generator(out.policy, grid, params, p);

    // (rho + 1/dt) I - A, an irreducibly diagonally dominant M-matrix
    TransitionOperator lhs = -gen;
    const double shift = params.rho + 1.0 / dt;
    for (int i = 0; i < n; ++i) lhs.coeffRef(i, i) += shift;
    lhs.makeCompressed();

    Eigen::SparseLU<TransitionOperator> solver;
    solver.compute(lhs);
    if (solver.info() != Eigen::Success)
        throw NumericalError("backward step factorization failed");
    out.value.v = solver.solve(block.reward + u_next.v / dt);
    if (solver.info() != Eigen::Success) throw NumericalError("backward step solve failed");
    return out;
}

StationaryHjb solve_stationary_hjb(const PriceVector& p, const StateGrid& grid,
                                   const ModelParams& params, const HjbOptions& opts,
                                   const ValueField* warm_start) {
    const int n = grid.n_x();
    ValueField u;
    if (warm_start) {
        if (warm_start->v.size() != n) throw ShapeError("warm start size does not match grid");
        u = *warm_start;
    } else {
        u.v.resize(n);
        for (int iy = 0; iy < grid.n_income(); ++iy)
            for (int ia = 0; ia < grid.n_wealth(); ++ia) {
                const double res = resources_at(p, grid.wealth[ia], grid.income[iy]);
                u.v[grid.x_index(ia, iy)] = utility(res, params.crra) / params.rho;
            }
    }

    int it = 0;
    for (; it < opts.max_iter; ++it) {
        HjbStepResult step = hjb_backward_step(u, p, opts.pseudo_dt, grid, params);
        const double change = (step.value.v - u.v).cwiseAbs().maxCoeff();
        u = step.value;
        if (change < opts.tol * std::max(1.0, u.v.cwiseAbs().maxCoeff())) break;
    }
    if (it == opts.max_iter)
        throw ConvergenceError("stationary HJB did not converge", 0.0, it);

    StationaryHjb out;
    const BlockPolicy block = upwind_block(u.v, grid, params, p);
    out.policy.consumption = block.consumption;
    out.policy.drift = block.drift;
    out.generator = build_generator(out.policy, grid, params, p);
    out.value = u;
    out.iterations = it + 1;
    out.residual =
        (params.rho * u.v - block.reward - out.generator * u.v).cwiseAbs().maxCoeff();
    if (out.residual > opts.residual_tol)
        throw ConvergenceError("stationary HJB residual above tolerance", out.residual, it + 1);
    return out;
}

HjbPath solve_hjb_path(const std::vector<PriceVector>& prices, const ValueField& terminal,
                       double dt, const StateGrid& grid, const ModelParams& params) {
    const int m = static_cast<int>(prices.size());
    HjbPath out;
    out.values.resize(m + 1);
    out.policies.resize(m);
    out.values[m] = terminal;
    for (int k = m - 1; k >= 0; --k) {
        HjbStepResult step = hjb_backward_step(out.values[k + 1], prices[k], dt, grid, params);
        out.values[k] = std::move(step.value);
        out.policies[k] = std::move(step.policy);
    }
    return out;
}

}  // namespace mfg
