#include "mfg/model.hpp"

#include <cmath>
#include <sstream>

namespace mfg {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace

void ModelParams::validate() const {
    require(rho > 0.0, "rho must be positive");
    require(crra > 0.0, "crra must be positive");
    require(nu >= 0.0, "nu must be nonnegative");
    require(beta >= 0.0, "beta must be nonnegative");
    require(dt > 0.0, "dt must be positive");
    require(horizon > 0.0, "horizon must be positive");
    require(production_scale > 0.0, "production_scale must be positive");
    if (const auto* ts = std::get_if<TwoStateIncome>(&income)) {
        require(ts->y_lo > 0.0 && ts->y_hi > ts->y_lo, "two-state income levels must satisfy 0 < y_lo < y_hi");
        require(ts->rate_up > 0.0 && ts->rate_down > 0.0, "income switching rates must be positive");
    } else {
        const auto& ou = std::get<OuIncome>(income);
        require(ou.mean_reversion > 0.0, "income mean reversion must be positive");
        require(ou.diffusion > 0.0, "income diffusion must be positive");
        require(ou.y_min > 0.0 && ou.y_max > ou.y_min, "income bounds must satisfy 0 < y_min < y_max");
        require(ou.n_y >= 3, "income grid needs at least 3 nodes");
        require(ou.long_run_mean > ou.y_min && ou.long_run_mean < ou.y_max,
                "income long-run mean must lie inside [y_min, y_max]");
    }
}

StateGrid StateGrid::regular(int n_a, double a_max, const ModelParams& params) {
    if (n_a < 3) throw ConfigError("wealth grid needs at least 3 nodes");
    if (a_max <= 0.0) throw ConfigError("a_max must be positive");
    StateGrid g;
    g.wealth = Eigen::VectorXd::LinSpaced(n_a, 0.0, a_max);
    if (const auto* ts = std::get_if<TwoStateIncome>(&params.income)) {
        g.income = Eigen::Vector2d(ts->y_lo, ts->y_hi);
    } else {
        const auto& ou = std::get<OuIncome>(params.income);
        g.income = Eigen::VectorXd::LinSpaced(ou.n_y, ou.y_min, ou.y_max);
    }
    g.wealth_weights = Eigen::VectorXd::Zero(n_a);
    for (int i = 0; i + 1 < n_a; ++i) {
        const double h = g.wealth[i + 1] - g.wealth[i];
        g.wealth_weights[i] += 0.5 * h;
        g.wealth_weights[i + 1] += 0.5 * h;
    }
    g.validate();
    return g;
}

void StateGrid::validate() const {
    if (wealth.size() < 3) throw ConfigError("wealth grid needs at least 3 nodes");
    if (income.size() < 1) throw ConfigError("income grid needs at least 1 node");
    if (std::abs(wealth[0]) > 1e-14) throw ConfigError("wealth grid must start at the constraint a = 0");
    for (int i = 0; i + 1 < wealth.size(); ++i)
        if (wealth[i + 1] <= wealth[i]) throw ConfigError("wealth nodes must be strictly increasing");
    for (int i = 0; i + 1 < income.size(); ++i)
        if (income[i + 1] <= income[i]) throw ConfigError("income nodes must be strictly increasing");
    if (income.minCoeff() <= 0.0) throw ConfigError("income nodes must be positive");
    if (wealth_weights.size() != wealth.size())
        throw ShapeError("wealth_weights size mismatch");
    for (const auto& axis : p_nodes)
        for (int i = 0; i + 1 < axis.size(); ++i)
            if (axis[i + 1] <= axis[i]) throw ConfigError("price nodes must be strictly increasing");
    for (const auto& axis : theta_nodes)
        for (int i = 0; i + 1 < axis.size(); ++i)
            if (axis[i + 1] <= axis[i]) throw ConfigError("belief nodes must be strictly increasing");
    if (z_nodes.size() > 0)
        for (int i = 0; i + 1 < z_nodes.size(); ++i)
            if (z_nodes[i + 1] <= z_nodes[i]) throw ConfigError("z nodes must be strictly increasing");
}

Density Density::point_mass(const StateGrid& grid, double a, double y) {
    int best_a = 0, best_y = 0;
    (grid.wealth.array() - a).abs().minCoeff(&best_a);
    (grid.income.array() - y).abs().minCoeff(&best_y);
    Density m;
    m.mass = Eigen::VectorXd::Zero(grid.n_x());
    m.mass[grid.x_index(best_a, best_y)] = 1.0;
    return m;
}

Density Density::uniform(const StateGrid& grid) {
    Density m;
    m.mass = Eigen::VectorXd::Constant(grid.n_x(), 1.0 / grid.n_x());
    return m;
}

Density Density::from_values(const StateGrid& grid,
                             const std::function<double(double, double)>& f) {
    Density m;
    m.mass = Eigen::VectorXd::Zero(grid.n_x());
    for (int iy = 0; iy < grid.n_income(); ++iy)
        for (int ia = 0; ia < grid.n_wealth(); ++ia) {
            const double v = f(grid.wealth[ia], grid.income[iy]);
            if (v < 0.0) throw DomainError("density values must be nonnegative");
            m.mass[grid.x_index(ia, iy)] = grid.wealth_weights[ia] * v;
        }
    const double total = m.mass.sum();
    if (total <= 0.0) throw DomainError("density must have positive total mass");
    m.mass /= total;
    return m;
}

void Density::validate(const StateGrid& grid) const {
    if (mass.size() != grid.n_x()) throw ShapeError("density size does not match grid");
    if (mass.minCoeff() < -1e-12) throw DomainError("density has negative entries");
    if (std::abs(mass.sum() - 1.0) > 1e-10) throw DomainError("density mass is not 1");
}

Moments aggregate_moments(const Density& m, const StateGrid& grid) {
    if (m.mass.size() != grid.n_x()) throw ShapeError("density size does not match grid");
    Moments out;
    for (int iy = 0; iy < grid.n_income(); ++iy)
        for (int ia = 0; ia < grid.n_wealth(); ++ia) {
            const double w = m.mass[grid.x_index(ia, iy)];
            out.wealth += w * grid.wealth[ia];
            out.income += w * grid.income[iy];
        }
    return out;
}

Production production(double k, double l, double z, double scale) {
    if (!(k > 0.0) || !(l > 0.0)) throw DomainError("production needs positive aggregates");
    Production p;
    const double root = std::sqrt(k * l);
    const double level = scale * std::exp(z);
    p.output = level * root;
    p.marginal_k = 0.5 * level * std::sqrt(l / k);
    p.marginal_l = 0.5 * level * std::sqrt(k / l);
    return p;
}

PriceVector price_functional(const Density& m, double z, const StateGrid& grid,
                             const ModelParams& params) {
    const Moments mom = aggregate_moments(m, grid);
    if (mom.wealth <= 0.0)
        throw DomainError("aggregate wealth must be positive for marginal products");
    const Production f = production(mom.wealth, mom.income, z, params.production_scale);
    return {f.marginal_k, f.marginal_l};
}

Eigen::Vector2d market_clearing_residual(const PriceVector& p, const Density& m, double z,
                                         const StateGrid& grid, const ModelParams& params) {
    const PriceVector star = price_functional(m, z, grid, params);
    return p.vec() - star.vec();
}

}  // namespace mfg
