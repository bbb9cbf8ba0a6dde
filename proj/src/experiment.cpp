#include "mfg/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mfg/acceptance.hpp"
#include "mfg/common_noise.hpp"
#include "mfg/density.hpp"
#include "mfg/discrete.hpp"
#include "mfg/equilibrium.hpp"
#include "mfg/temporary.hpp"

namespace mfg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kLibraryVersion = "0.1.0";

std::string eigen_version() {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%d.%d.%d", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                  EIGEN_MINOR_VERSION);
    return buf;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// true at the cadence plus both endpoints; cadence 0 keeps endpoints only
bool snapshot_due(int t, int n, int every) {
    if (t == 0 || t == n) return true;
    return every > 0 && t % every == 0;
}

std::string snapshot_name(int t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "density_%04d.csv", t);
    return buf;
}

// Collects artifacts for one run directory. The manifest goes down twice:
// incomplete before any work, finalized (wall time, file list) at the end, so
// an interrupted run leaves the marker in place.
class RunWriter {
  public:
    RunWriter(const std::string& subcommand, const RunConfig& cfg, const std::string& out_dir)
        : dir_(out_dir), start_(std::chrono::steady_clock::now()) {
        fs::create_directories(dir_);
        art_.out_dir = fs::path(out_dir).string();
        manifest_["subcommand"] = subcommand;
        manifest_["label"] = cfg.label;
        manifest_["config_hash"] = cfg.hash;
        manifest_["seed"] = cfg.seed;
        manifest_["versions"] = {{"mfglearn", kLibraryVersion}, {"eigen", eigen_version()}};
        manifest_["completed"] = false;
        dump_json("manifest.json", manifest_);
    }

    void csv(const std::string& name, const std::vector<std::string>& header,
             const std::vector<std::vector<double>>& rows) {
        std::ofstream out = open(name);
        for (std::size_t k = 0; k < header.size(); ++k)
            out << (k ? "," : "") << header[k];
        out << "\n";
        for (const auto& row : rows) {
            for (std::size_t k = 0; k < row.size(); ++k)
                out << (k ? "," : "") << fmt17(row[k]);
            out << "\n";
        }
        art_.files.push_back(name);
    }

    void grid_csv(const std::string& name, const StateGrid& grid,
                  const std::vector<std::string>& value_names,
                  const std::vector<const Eigen::VectorXd*>& values) {
        std::vector<std::string> header = {"wealth", "income"};
        header.insert(header.end(), value_names.begin(), value_names.end());
        std::vector<std::vector<double>> rows;
        rows.reserve(grid.n_x());
        for (int idx = 0; idx < grid.n_x(); ++idx) {
            const int ia = idx % grid.n_wealth();
            const int iy = idx / grid.n_wealth();
            std::vector<double> row = {grid.wealth[ia], grid.income[iy]};
            for (const auto* v : values) row.push_back((*v)[idx]);
            rows.push_back(std::move(row));
        }
        csv(name, header, rows);
    }

    void density_snapshot(int t, const StateGrid& grid, const Density& m) {
        grid_csv(snapshot_name(t), grid, {"mass"}, {&m.mass});
    }

    void histogram_snapshot(int t, const Histogram& m) {
        std::vector<std::vector<double>> rows;
        for (int x = 0; x < m.w.size(); ++x)
            rows.push_back({static_cast<double>(x), m.w[x]});
        csv(snapshot_name(t), {"x", "mass"}, rows);
    }

    void text_file(const std::string& name, const std::string& body) {
        open(name) << body;
        art_.files.push_back(name);
    }

    void scalar(const std::string& key, double v) { art_.summary[key] = v; }
    void note(const std::string& key, const std::string& text) { notes_[key] = text; }
    void manifest_extra(const std::string& key, json value) { manifest_[key] = std::move(value); }

    RunArtifacts finish() {
        json summary;
        for (const auto& [k, v] : art_.summary) summary[k] = v;
        for (const auto& [k, v] : notes_) summary[k] = v;
        dump_json("summary.json", summary);
        art_.files.push_back("summary.json");

        const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start_;
        manifest_["completed"] = true;
        manifest_["wall_time_seconds"] = wall.count();
        manifest_["files"] = art_.files;
        dump_json("manifest.json", manifest_);
        art_.files.push_back("manifest.json");
        return art_;
    }

  private:
    std::ofstream open(const std::string& name) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + (dir_ / name).string());
        return out;
    }

    void dump_json(const std::string& name, const json& j) { open(name) << j.dump(2) << "\n"; }

    fs::path dir_;
    std::chrono::steady_clock::time_point start_;
    RunArtifacts art_;
    std::map<std::string, std::string> notes_;
    json manifest_;
};

StateGrid make_grid(const RunConfig& cfg) {
    return StateGrid::regular(cfg.grid.n_a, cfg.grid.a_max, cfg.model);
}

StationaryEquilibrium solve_base(const RunConfig& cfg, const StateGrid& grid, double z) {
    EquilibriumOptions opts = cfg.stationary.options;
    opts.z = z;
    return solve_stationary_equilibrium(grid, cfg.model, opts);
}

// Starting distribution for the forward runs, shaped by the [transition] keys:
// the stationary density reweighted toward low wealth, a uniform spread, or a
// point mass.
Density initial_density(const RunConfig& cfg, const StateGrid& grid, const Density& stat) {
    const TransitionConfig& tr = cfg.transition;
    if (tr.m0 == "uniform") return Density::uniform(grid);
    if (tr.m0 == "point") return Density::point_mass(grid, tr.m0_wealth, tr.m0_income);
    Density m = stat;
    const double top = grid.wealth[grid.n_wealth() - 1];
    for (int iy = 0; iy < grid.n_income(); ++iy)
        for (int ia = 0; ia < grid.n_wealth(); ++ia)
            m.mass[grid.x_index(ia, iy)] *= std::pow(tr.distortion, grid.wealth[ia] / top);
    m.mass /= m.mass.sum();
    return m;
}

std::vector<std::string> theta_header(Eigen::Index width) {
    std::vector<std::string> h = {"t"};
    for (Eigen::Index k = 0; k < width; ++k) h.push_back("theta_" + std::to_string(k));
    return h;
}

double max_mass_drift(const std::vector<Density>& path) {
    double worst = 0.0;
    for (const auto& m : path) worst = std::max(worst, std::abs(m.total() - 1.0));
    return worst;
}

void write_price_path(RunWriter& w, double dt, const std::vector<PriceVector>& prices) {
    std::vector<std::vector<double>> rows;
    for (std::size_t t = 0; t < prices.size(); ++t)
        rows.push_back({dt * static_cast<double>(t), prices[t].interest, prices[t].wage});
    w.csv("prices.csv", {"t", "interest", "wage"}, rows);
}

void write_clearing(RunWriter& w, double dt, const std::vector<Eigen::Vector2d>& gaps) {
    std::vector<std::vector<double>> rows;
    for (std::size_t t = 0; t < gaps.size(); ++t)
        rows.push_back({dt * static_cast<double>(t), gaps[t][0], gaps[t][1]});
    w.csv("clearing_residuals.csv", {"t", "interest_gap", "wage_gap"}, rows);
}

void write_theta_path(RunWriter& w, double dt, const std::vector<Eigen::VectorXd>& thetas) {
    const Eigen::Index width = thetas.empty() ? 0 : thetas.front().size();
    std::vector<std::vector<double>> rows;
    for (std::size_t t = 0; t < thetas.size(); ++t) {
        std::vector<double> row = {dt * static_cast<double>(t)};
        for (Eigen::Index k = 0; k < thetas[t].size(); ++k) row.push_back(thetas[t][k]);
        rows.push_back(std::move(row));
    }
    w.csv("theta.csv", theta_header(width), rows);
}

void write_forecast_errors(RunWriter& w, double dt, const std::vector<Eigen::Vector2d>& errs) {
    std::vector<std::vector<double>> rows;
    for (std::size_t t = 0; t < errs.size(); ++t)
        rows.push_back({dt * static_cast<double>(t), errs[t][0], errs[t][1]});
    w.csv("forecast_errors.csv", {"t", "interest_error", "wage_error"}, rows);
}

void write_resolved(RunWriter& w, double dt, const std::vector<char>& resolved) {
    std::vector<std::vector<double>> rows;
    for (std::size_t t = 0; t < resolved.size(); ++t)
        rows.push_back({dt * static_cast<double>(t), resolved[t] ? 1.0 : 0.0});
    w.csv("resolved.csv", {"t", "resolved"}, rows);
}

void run_stationary(RunWriter& w, const RunConfig& cfg) {
    const StateGrid grid = make_grid(cfg);
    const StationaryEquilibrium eq = solve_base(cfg, grid, cfg.stationary.options.z);

    write_price_path(w, cfg.model.dt, {eq.prices});
    write_clearing(w, cfg.model.dt, {eq.clearing_residual});
    w.grid_csv("value.csv", grid, {"value"}, {&eq.value.v});
    w.grid_csv("policy.csv", grid, {"consumption", "drift"},
               {&eq.policy.consumption, &eq.policy.drift});
    w.density_snapshot(0, grid, eq.density);

    std::vector<std::vector<double>> trace;
    for (const auto& pt : eq.trace) trace.push_back({pt.k, pt.excess});
    w.csv("bisection.csv", {"capital", "excess_supply"}, trace);

    w.scalar("interest", eq.prices.interest);
    w.scalar("wage", eq.prices.wage);
    w.scalar("capital", eq.capital);
    w.scalar("labor", eq.labor);
    w.scalar("clearing_max", eq.clearing_residual.lpNorm<Eigen::Infinity>());
    w.scalar("hjb_residual", eq.hjb_residual);
    w.scalar("evaluations", eq.evaluations);
    w.scalar("mass_drift", std::abs(eq.density.total() - 1.0));
    w.scalar("monotonicity_violation", monotonicity_violation(eq.value, grid));
    w.scalar("concavity_violation", concavity_violation(eq.value, grid));
}

void run_transition(RunWriter& w, const RunConfig& cfg) {
    const StateGrid grid = make_grid(cfg);
    const StationaryEquilibrium terminal = solve_base(cfg, grid, cfg.transition.options.z);
    const Density m0 = initial_density(cfg, grid, terminal.density);
    const TransitionPath path = solve_perfect_foresight_transition(
        m0, cfg.transition.n_steps, grid, cfg.model, terminal, cfg.transition.options);

    write_price_path(w, path.dt, path.prices);
    std::vector<Eigen::Vector2d> gaps;  // realized marginal products minus the converged guess
    for (std::size_t t = 0; t < path.guess.size(); ++t)
        gaps.push_back(path.prices[t].vec() - path.guess[t].vec());
    write_clearing(w, path.dt, gaps);

    std::vector<std::vector<double>> conv;
    for (std::size_t k = 0; k < path.residual_history.size(); ++k)
        conv.push_back({static_cast<double>(k), path.residual_history[k]});
    w.csv("convergence.csv", {"iteration", "residual"}, conv);

    const int n = cfg.transition.n_steps;
    for (int t = 0; t <= n; ++t)
        if (snapshot_due(t, n, cfg.density_every)) w.density_snapshot(t, grid, path.densities[t]);

    double clearing_max = 0.0;
    for (const auto& g : gaps) clearing_max = std::max(clearing_max, g.lpNorm<Eigen::Infinity>());
    w.scalar("iterations", path.iterations);
    w.scalar("final_residual", path.residual_history.empty() ? 0.0 : path.residual_history.back());
    w.scalar("clearing_max", clearing_max);
    w.scalar("mass_drift", max_mass_drift(path.densities));
    w.scalar("n_steps", n);
    w.scalar("dt", path.dt);
}

void run_temporary(RunWriter& w, const RunConfig& cfg) {
    const StateGrid grid = make_grid(cfg);
    const StationaryEquilibrium eq = solve_base(cfg, grid, cfg.temporary.options.z);
    const Density m0 = initial_density(cfg, grid, eq.density);

    int n = cfg.temporary.n_steps;
    Predictor predictor;
    predictor.kind = cfg.beliefs.predictor;

    // The foresight predictor walks the rational-expectations transition from
    // the same start; its price path doubles as the recovery reference.
    TransitionPath reference;
    bool have_reference = false;
    if (predictor.kind == PredictorKind::perfect_foresight) {
        const int n_re = n > 0 ? n : cfg.transition.n_steps;
        TransitionOptions topts = cfg.transition.options;
        topts.z = cfg.temporary.options.z;
        reference = solve_perfect_foresight_transition(m0, n_re, grid, cfg.model, eq, topts);
        predictor.external_path = reference.prices;
        have_reference = true;
        n = n_re;
    }
    if (n == 0) {
        n = cfg.temporary.options.enforce_horizon
                ? static_cast<int>(std::ceil(50.0 / (cfg.model.rho * cfg.model.dt)))
                : 100;
    }

    BeliefState belief0;
    if (predictor.kind == PredictorKind::parametric_plm) {
        belief0 = BeliefState::plm(cfg.beliefs.theta0.size() ? cfg.beliefs.theta0
                                                             : Eigen::VectorXd::Zero(4));
    } else {
        belief0 = BeliefState::levels(cfg.beliefs.theta0.size()
                                          ? cfg.beliefs.theta0
                                          : Eigen::VectorXd(eq.prices.vec()));
    }

    const Trajectory traj =
        run_temporary_equilibrium(m0, belief0, predictor, cfg.beliefs.rule, grid, cfg.model, n,
                                  eq.value, cfg.temporary.options);
    const TypeTrack& track = traj.types.front();

    write_price_path(w, traj.dt, traj.prices);
    write_clearing(w, traj.dt, traj.clearing);
    write_theta_path(w, traj.dt, track.beliefs);
    write_forecast_errors(w, traj.dt, track.forecast_errors);
    for (int t = 0; t <= n; ++t)
        if (snapshot_due(t, n, cfg.density_every)) w.density_snapshot(t, grid, traj.densities[t]);

    double clearing_max = 0.0;
    for (const auto& g : traj.clearing)
        clearing_max = std::max(clearing_max, g.lpNorm<Eigen::Infinity>());
    int clipped = 0;
    for (char c : track.forecast_clipped) clipped += c ? 1 : 0;
    w.scalar("clearing_max", clearing_max);
    w.scalar("mass_drift", max_mass_drift(traj.densities));
    w.scalar("clipped_dates", clipped);
    w.scalar("n_steps", n);
    w.scalar("dt", traj.dt);
    if (have_reference) {
        double sup = 0.0;
        for (int t = 0; t <= n; ++t) {
            const Eigen::Vector2d gap = traj.prices[t].vec() - reference.prices[t].vec();
            sup = std::max(sup, gap.lpNorm<Eigen::Infinity>());
        }
        w.scalar("recovery_supnorm", sup);
    }
}

void run_common_noise(RunWriter& w, const RunConfig& cfg) {
    const CommonNoiseConfig& cn = cfg.common_noise;
    StateGrid grid = make_grid(cfg);
    const StationaryEquilibrium eq = solve_base(cfg, grid, cn.z0);

    grid.z_nodes = spread_axis(cn.z0, cn.z_half_width, cn.n_z);
    grid.p_nodes = {spread_axis(eq.prices.interest, cn.p_half_width, cn.n_p)};
    grid.fixed_wage = eq.prices.wage;

    PlmSpec family;
    family.family = cn.family;
    family.revert_rate = cn.revert_rate;
    family.sigma_p = cn.sigma_p;

    Eigen::VectorXd theta0 = cn.theta0;
    if (!theta0.size()) {
        if (cn.family == PlmSpec::Family::level_revert) {
            theta0 = Eigen::VectorXd::Constant(1, eq.prices.interest + cn.theta_distortion);
        } else {
            theta0 = Eigen::VectorXd::Zero(cn.family == PlmSpec::Family::linear_noise ? 3 : 2);
        }
    }
    const BeliefState belief0 = cn.family == PlmSpec::Family::level_revert
                                    ? BeliefState::levels(theta0)
                                    : BeliefState::plm(theta0);

    SimulationOptions opts = cn.options;
    opts.seed = substream_seed(cfg.seed, "aggregate-path");
    const SimulationTrack track =
        run_learning_simulation(eq.density, cn.z0, belief0, family, cfg.beliefs.rule, grid,
                                cfg.model, cn.n_steps, eq.value, opts);

    std::vector<std::vector<double>> zrows;
    for (std::size_t t = 0; t < track.z.size(); ++t) zrows.push_back({track.time[t], track.z[t]});
    w.csv("z_path.csv", {"t", "z"}, zrows);

    write_price_path(w, track.dt, track.prices);
    write_clearing(w, track.dt, track.clearing);
    write_theta_path(w, track.dt, track.beliefs);

    // One-step miss of the believed drift law; the wage is pinned off-grid so
    // its column stays at zero.
    std::vector<Eigen::Vector2d> errs(track.prices.size(), Eigen::Vector2d::Zero());
    for (std::size_t t = 1; t < track.prices.size(); ++t) {
        PlmSpec held = family;
        held.theta = track.beliefs[t - 1];
        const Eigen::Vector2d forecast =
            track.prices[t - 1].vec() +
            held.drift(track.prices[t - 1], track.z[t - 1]) * track.dt;
        errs[t] = track.prices[t].vec() - forecast;
    }
    write_forecast_errors(w, track.dt, errs);
    write_resolved(w, track.dt, track.resolved);

    const int n = cn.n_steps;
    for (int t = 0; t <= n; ++t)
        if (snapshot_due(t, n, cfg.density_every)) w.density_snapshot(t, grid, track.densities[t]);

    double clearing_max = 0.0;
    for (const auto& g : track.clearing)
        clearing_max = std::max(clearing_max, g.lpNorm<Eigen::Infinity>());
    w.scalar("clearing_max", clearing_max);
    w.scalar("mass_drift", max_mass_drift(track.densities));
    w.scalar("hjb_solves", track.hjb_solves);
    w.scalar("z_excursions", track.z_excursions);
    w.scalar("p_excursions", track.p_excursions);
    w.scalar("reflections", track.reflections);
    w.scalar("cache_disabled", track.cache_disabled ? 1.0 : 0.0);
    for (Eigen::Index k = 0; k < track.beliefs.back().size(); ++k)
        w.scalar("theta_final_" + std::to_string(k), track.beliefs.back()[k]);
    w.manifest_extra("hjb_cache", {{"solves", track.hjb_solves},
                                   {"threshold", cn.options.cache_threshold},
                                   {"disabled", track.cache_disabled}});
}

void require_discrete(const RunConfig& cfg, const char* sub) {
    if (!cfg.discrete.present)
        throw ConfigError(std::string(sub) + " needs a [discrete] config section");
}

void run_discrete_learn(RunWriter& w, const RunConfig& cfg) {
    require_discrete(cfg, "discrete-learn");
    const DiscreteConfig& dc = cfg.discrete;
    const double p0 = dc.model.price_map(dc.m0, dc.z0);

    DiscreteLearnOptions opts;
    opts.kernel_sd = dc.kernel_sd;
    opts.cache_threshold = dc.cache_threshold;
    opts.seed = substream_seed(cfg.seed, "discrete-learn");
    if (dc.price_grid.size()) {
        opts.price_grid = dc.price_grid;
    } else {
        const double w_half = std::max(0.2 * std::abs(p0), 0.1);
        opts.price_grid = Eigen::VectorXd::LinSpaced(9, p0 - w_half, p0 + w_half);
    }

    DiscreteBelief belief0;
    if (dc.theta0.size()) {
        belief0.theta = dc.theta0;
    } else if (dc.rule.kind == DiscreteRule::Kind::least_squares) {
        belief0.theta = Eigen::Vector2d(p0, 0.0);
    } else {
        belief0.theta = Eigen::VectorXd::Constant(1, p0);
    }

    const DiscreteTrack track =
        run_discrete_learning(dc.model, dc.m0, dc.z0, belief0, dc.rule, dc.n_steps, opts);

    std::vector<std::vector<double>> prices;
    for (std::size_t t = 0; t < track.prices.size(); ++t)
        prices.push_back({static_cast<double>(t), static_cast<double>(track.z[t]),
                          track.prices[t]});
    w.csv("prices.csv", {"t", "z", "price"}, prices);
    write_theta_path(w, 1.0, track.thetas);
    write_resolved(w, 1.0, track.resolved);

    // miss of yesterday's forecast: the level estimate itself, or the fitted
    // line pushed through yesterday's price
    std::vector<std::vector<double>> errs = {{0.0, 0.0}};
    for (std::size_t t = 1; t < track.prices.size(); ++t) {
        const Eigen::VectorXd& th = track.thetas[t - 1];
        const double forecast = dc.rule.kind == DiscreteRule::Kind::least_squares
                                    ? th[0] + th[1] * track.prices[t - 1]
                                    : th[0];
        errs.push_back({static_cast<double>(t), track.prices[t] - forecast});
    }
    w.csv("forecast_errors.csv", {"t", "price_error"}, errs);

    for (int t = 0; t <= dc.n_steps; ++t)
        if (snapshot_due(t, dc.n_steps, cfg.density_every))
            w.histogram_snapshot(t, track.densities[t]);

    w.scalar("bellman_solves", track.bellman_solves);
    w.scalar("p_excursions", track.p_excursions);
    w.scalar("cache_disabled", track.cache_disabled ? 1.0 : 0.0);
    w.scalar("final_price", track.prices.back());
    w.scalar("n_steps", dc.n_steps);
    for (Eigen::Index k = 0; k < track.thetas.back().size(); ++k)
        w.scalar("theta_final_" + std::to_string(k), track.thetas.back()[k]);
}

void run_discrete_master(RunWriter& w, const RunConfig& cfg) {
    require_discrete(cfg, "discrete-master");
    const DiscreteConfig& dc = cfg.discrete;
    MasterOptions opts;
    opts.target_accuracy = dc.target_accuracy;
    const MasterTables tables = master_oracle(dc.model, dc.resolution, opts);

    const int n_x = dc.model.n_x;
    std::vector<std::string> header = {"x", "z", "node"};
    for (int k = 0; k < n_x; ++k) header.push_back("m_" + std::to_string(k));
    std::vector<std::string> value_header = header;
    value_header.push_back("value");
    std::vector<std::string> policy_header = header;
    for (int a = 0; a < dc.model.n_act; ++a) policy_header.push_back("p_a" + std::to_string(a));

    std::vector<std::vector<double>> values, policies;
    for (int x = 0; x < n_x; ++x)
        for (int z = 0; z < dc.model.n_z; ++z)
            for (int k = 0; k < tables.grid.node_count(); ++k) {
                const Eigen::VectorXd m = tables.grid.node(k);
                std::vector<double> row = {static_cast<double>(x), static_cast<double>(z),
                                           static_cast<double>(k)};
                for (int i = 0; i < n_x; ++i) row.push_back(m[i]);
                const int idx = tables.index(x, z, k);
                std::vector<double> vrow = row;
                vrow.push_back(tables.value[0][idx]);
                values.push_back(std::move(vrow));
                for (int a = 0; a < dc.model.n_act; ++a) row.push_back(tables.policy[0](idx, a));
                policies.push_back(std::move(row));
            }
    w.csv("values.csv", value_header, values);
    w.csv("policies.csv", policy_header, policies);

    w.scalar("resolution", dc.resolution);
    w.scalar("interp_error_estimate", tables.interp_error_estimate);
    w.scalar("cycle_flags", tables.cycle_flags);
    for (int x = 0; x < n_x; ++x)
        w.scalar("value_x" + std::to_string(x),
                 master_value(tables, 0, x, dc.z0, dc.m0.w));
    if (!tables.warning.empty()) w.note("warning", tables.warning);
}

void run_mrp(RunWriter& w, const RunConfig& cfg) {
    if (!cfg.mrp.present) throw ConfigError("mrp needs an [mrp] config section");
    const MrpConfig& mc = cfg.mrp;

    const MrpTables tables = mrp_master_oracle(mc.model, mc.resolution);
    const double oracle = mrp_oracle_value(tables, mc.m0, mc.z0);
    const MonteCarloValue sim = mrp_value_monte_carlo(mc.model, mc.m0, mc.z0, mc.paths,
                                                      substream_seed(cfg.seed, "mrp-monte-carlo"));

    const int n_x = mc.model.n_x;
    std::vector<std::string> header = {"z", "node"};
    for (int k = 0; k < n_x; ++k) header.push_back("m_" + std::to_string(k));
    header.push_back("value");
    std::vector<std::vector<double>> rows;
    for (int z = 0; z < mc.model.n_z; ++z)
        for (int k = 0; k < tables.grid.node_count(); ++k) {
            const Eigen::VectorXd m = tables.grid.node(k);
            std::vector<double> row = {static_cast<double>(z), static_cast<double>(k)};
            for (int i = 0; i < n_x; ++i) row.push_back(m[i]);
            row.push_back(tables.value[0](z, k));
            rows.push_back(std::move(row));
        }
    w.csv("values.csv", header, rows);

    w.scalar("value_oracle", oracle);
    w.scalar("value_mc", sim.mean);
    w.scalar("mc_std_error", sim.std_error);
    w.scalar("mc_paths", sim.paths);
    w.scalar("interp_error_estimate", tables.interp_error_estimate);
    try {
        const double exact = mrp_value_bruteforce(mc.model, mc.m0, mc.z0);
        w.scalar("value_bruteforce", exact);
        w.scalar("oracle_gap", std::abs(exact - oracle));
        w.scalar("mc_gap", std::abs(sim.mean - exact));
    } catch (const BudgetError&) {
        w.note("bruteforce", "skipped, path count past the enumeration budget");
    }
    if (!tables.warning.empty()) w.note("warning", tables.warning);
}

void run_suite(RunWriter& w) {
    std::ostringstream log;
    const std::vector<CriterionResult> results = run_acceptance_battery(log);
    w.text_file("acceptance.txt", log.str());

    int passed = 0;
    for (std::size_t k = 0; k < results.size(); ++k) {
        passed += results[k].passed ? 1 : 0;
        const std::string tag = "c" + std::to_string(k + 1);
        w.scalar(tag + "_pass", results[k].passed ? 1.0 : 0.0);
        w.scalar(tag + "_measured", results[k].measured);
    }
    w.scalar("criteria_passed", passed);
    w.scalar("criteria_failed", static_cast<double>(results.size()) - passed);
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::string_view label) {
    std::uint64_t x = seed ^ fnv1a64(label);
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

RunArtifacts run_experiment(const std::string& subcommand, const RunConfig& cfg,
                            const std::string& out_dir) {
    static const std::vector<std::string> known = {
        "stationary",    "transition",      "temporary-eq", "common-noise",
        "discrete-learn", "discrete-master", "mrp",          "suite"};
    if (std::find(known.begin(), known.end(), subcommand) == known.end())
        throw ConfigError("unknown subcommand " + subcommand);

    RunWriter writer(subcommand, cfg, out_dir);
    if (subcommand == "stationary") run_stationary(writer, cfg);
    else if (subcommand == "transition") run_transition(writer, cfg);
    else if (subcommand == "temporary-eq") run_temporary(writer, cfg);
    else if (subcommand == "common-noise") run_common_noise(writer, cfg);
    else if (subcommand == "discrete-learn") run_discrete_learn(writer, cfg);
    else if (subcommand == "discrete-master") run_discrete_master(writer, cfg);
    else if (subcommand == "mrp") run_mrp(writer, cfg);
    else run_suite(writer);
    return writer.finish();
}

}  // namespace mfg
