#include "mfg/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

#include "mfg/common_noise.hpp"
#include "mfg/config.hpp"
#include "mfg/density.hpp"
#include "mfg/discrete.hpp"
#include "mfg/equilibrium.hpp"
#include "mfg/experiment.hpp"
#include "mfg/pricespace.hpp"
#include "mfg/temporary.hpp"

namespace mfg {
namespace {

namespace fs = std::filesystem;

std::string g3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

Histogram histo(std::initializer_list<double> w) {
    Histogram m;
    m.w.resize(static_cast<int>(w.size()));
    int i = 0;
    for (double v : w) m.w[i++] = v;
    return m;
}

// ---------------------------------------------------------------------------
// shared fixtures

// 200 x 2 benchmark economy at default parameters, solved once
const StationaryEquilibrium& base_equilibrium() {
    static const StationaryEquilibrium eq = [] {
        ModelParams params;
        const StateGrid grid = StateGrid::regular(200, 50.0, params);
        return solve_stationary_equilibrium(grid, params);
    }();
    return eq;
}

StateGrid base_grid() {
    ModelParams params;
    return StateGrid::regular(200, 50.0, params);
}

Density distorted_start(const StateGrid& grid, const Density& stat, double factor) {
    Density m = stat;
    const double top = grid.wealth[grid.n_wealth() - 1];
    for (int iy = 0; iy < grid.n_income(); ++iy)
        for (int ia = 0; ia < grid.n_wealth(); ++ia)
            m.mass[grid.x_index(ia, iy)] *= std::pow(factor, grid.wealth[ia] / top);
    m.mass /= m.mass.sum();
    return m;
}

// two states, two actions, two aggregate states; the action a == x carries a
// bonus that dominates every continuation gap, so the equilibrium profile is
// known and the induced measure tree is exact
DiscreteModel tiny_discrete(bool linear) {
    DiscreteModel md;
    md.n_x = 2;
    md.n_act = 2;
    md.n_z = 2;
    md.discount = 0.9;
    md.horizon = 3;
    md.z_kernel.resize(2, 2);
    md.z_kernel << 0.7, 0.3, 0.4, 0.6;
    md.x_kernel = [](int x, int z, int a, double) {
        static const double K[2][2][2][2] = {
            {{{0.85, 0.15}, {0.25, 0.75}}, {{0.80, 0.20}, {0.30, 0.70}}},
            {{{0.50, 0.50}, {0.60, 0.40}}, {{0.45, 0.55}, {0.55, 0.45}}}};
        Eigen::VectorXd row(2);
        row << K[a][z][x][0], K[a][z][x][1];
        return row;
    };
    md.price_map = [](const Histogram& m, int z) {
        return (0.8 + 0.4 * m.w[1]) * (z == 0 ? 1.0 : 1.1);
    };
    if (linear) {
        md.reward = [](int x, int, int a, double p) {
            return (a == x ? 2.0 : 0.0) + 0.3 * x + 0.5 * p;
        };
        md.terminal = [](int x, int, double p) { return 0.4 * x + 0.7 * p; };
    } else {
        md.reward = [](int x, int, int a, double p) {
            return (a == x ? 2.0 : 0.0) + 0.3 * x + 0.5 * p + 0.6 * p * p;
        };
        md.terminal = [](int x, int, double p) { return 0.4 * x + 0.7 * p * p; };
    }
    return md;
}

// ---------------------------------------------------------------------------
// 1. adjoint consistency of the generator

double criterion_adjoint(std::string& detail) {
    ModelParams params;
    const StateGrid grid = base_grid();
    const PriceVector p{0.03, 1.0};
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> uc(0.1, 2.0), uv(-1.0, 1.0);

    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        PolicyField pol;
        pol.consumption.resize(grid.n_x());
        pol.drift.resize(grid.n_x());
        for (int idx = 0; idx < grid.n_x(); ++idx) {
            const int ia = idx % grid.n_wealth();
            const double a = grid.wealth[ia];
            const double y = grid.income[idx / grid.n_wealth()];
            const double resources = p.interest * a + p.wage * y;
            // the constrained bottom node cannot drift inward
            double c = uc(rng);
            if (ia == 0) c = resources * (0.05 + 0.9 * (uc(rng) - 0.1) / 1.9);
            pol.consumption[idx] = c;
            pol.drift[idx] = resources - c;
        }
        const TransitionOperator op = build_generator(pol, grid, params, p);
        Eigen::VectorXd u(grid.n_x()), m(grid.n_x());
        for (int i = 0; i < grid.n_x(); ++i) {
            u[i] = uv(rng);
            m[i] = uv(rng);
        }
        const double lhs = (op * u).dot(m);
        const double rhs = u.dot(TransitionOperator(op.transpose()) * m);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
    detail = "policies=100 grid=200x2";
    return worst;
}

// ---------------------------------------------------------------------------
// 2. forward mass conservation and nonnegativity

double criterion_mass(std::string& detail) {
    ModelParams params;
    const StateGrid grid = base_grid();
    const StationaryHjb fixed = solve_stationary_hjb({0.03, 1.0}, grid, params);

    Density m = Density::point_mass(grid, 1.0, 0.5);
    double drift = 0.0, min_entry = 0.0;
    for (int k = 0; k < 1000; ++k) {
        m = fp_forward_step(m, fixed.generator, params.dt);
        drift = std::max(drift, std::abs(m.total() - 1.0));
        min_entry = std::min(min_entry, m.mass.minCoeff());
    }
    detail = "steps=1000 min_entry=" + g3(min_entry);
    return min_entry < 0.0 ? 1.0 : drift;
}

// ---------------------------------------------------------------------------
// 3. stationary equilibrium quality (margin of each bound, worst reported)

// The wealth step stays above nu / |drift| here. Below that the solution
// resolves the diffusive layer at the constraint, where the reflected
// idiosyncratic noise makes the true value function locally convex and the
// second-difference check stops being meaningful (see the fine-grid
// equilibrium test).
double criterion_stationary(std::string& detail) {
    ModelParams params;
    const StateGrid grid = StateGrid::regular(150, 50.0, params);
    const StationaryEquilibrium eq = solve_stationary_equilibrium(grid, params);
    const double clearing = eq.clearing_residual.lpNorm<Eigen::Infinity>();
    const double mono = monotonicity_violation(eq.value, grid);
    const double conc = concavity_violation(eq.value, grid);
    detail = "grid=150x50 clearing=" + g3(clearing) + " hjb_residual=" + g3(eq.hjb_residual) +
             " monotonicity=" + g3(mono) + " concavity=" + g3(conc);
    double margin = clearing / 1e-6;
    margin = std::max(margin, eq.hjb_residual / 1e-8);
    margin = std::max(margin, mono / 1e-8);
    margin = std::max(margin, conc / 1e-8);
    return margin;
}

// ---------------------------------------------------------------------------
// 4. rational-expectations recovery through the temporary-equilibrium engine

double criterion_recovery(std::string& detail) {
    ModelParams params;
    const StateGrid grid = StateGrid::regular(100, 50.0, params);
    const StationaryEquilibrium eq = solve_stationary_equilibrium(grid, params);
    const Density m0 = distorted_start(grid, eq.density, 0.8);

    const int n = 100;
    TransitionOptions topts;
    topts.tol = 1e-9;
    const TransitionPath re = solve_perfect_foresight_transition(m0, n, grid, params, eq, topts);

    Predictor pf;
    pf.kind = PredictorKind::perfect_foresight;
    pf.external_path = re.prices;
    LearningRule rule;
    TemporaryOptions opts;
    opts.enforce_horizon = false;
    const Trajectory traj = run_temporary_equilibrium(
        m0, BeliefState::levels(eq.prices.vec()), pf, rule, grid, params, n, eq.value, opts);

    double sup = 0.0;
    for (int t = 0; t <= n; ++t) {
        const Eigen::Vector2d gap = traj.prices[t].vec() - re.prices[t].vec();
        sup = std::max(sup, gap.lpNorm<Eigen::Infinity>());
    }
    detail = "steps=100 grid=100x2 transition_iters=" + std::to_string(re.iterations);
    return sup;
}

// ---------------------------------------------------------------------------
// 5. learning convergence rates

double criterion_learning(std::string& detail) {
    const PriceVector pbar{0.04, 1.0};

    // decreasing gain halves its error per horizon doubling (harmonic decay)
    LearningRule dec;
    dec.kind = LearningKind::decreasing_gain;
    dec.t0 = 1.0;
    const double dt_a = 0.05;
    Eigen::VectorXd th0(2);
    th0 << pbar.interest + 1.0, pbar.wage - 0.5;
    BeliefState b = BeliefState::levels(th0);
    std::vector<double> err(513, 0.0);
    err[0] = (th0 - pbar.vec()).cwiseAbs().maxCoeff();
    for (int k = 1; k <= 512; ++k) {
        b = update_beliefs(dec, b, pbar, dt_a);
        err[k] = (b.theta - pbar.vec()).cwiseAbs().maxCoeff();
    }
    double ratio = 0.0;
    for (int t : {64, 128, 256}) ratio = std::max(ratio, err[2 * t] / err[t]);

    // constant gain tracks the exponential-smoothing closed form to O(dt)
    LearningRule con;
    con.kind = LearningKind::constant_gain;
    con.gain = 1.0;
    const double dt_b = 1e-3;
    BeliefState c = BeliefState::levels(th0);
    double smooth_err = 0.0;
    for (int k = 1; k <= 5000; ++k) {
        c = update_beliefs(con, c, pbar, dt_b);
        const Eigen::Vector2d exact =
            pbar.vec() + std::exp(-con.gain * k * dt_b) * (th0 - pbar.vec());
        smooth_err = std::max(smooth_err, (c.theta - exact).cwiseAbs().maxCoeff());
    }
    detail = "doubling_ratio=" + g3(ratio) + " smoothing_err=" + g3(smooth_err);
    return std::max(ratio / 0.75, smooth_err / 1e-3);
}

// ---------------------------------------------------------------------------
// 6. cross-solver consistency of the finite-dimensional lifts

double criterion_cross(std::string& detail) {
    ModelParams params;
    const StateGrid grid0 = StateGrid::regular(60, 30.0, params);
    const PriceVector p{0.03, 1.0};
    const ValueField terminal = solve_stationary_hjb(p, grid0, params).value;
    const int n = 40;
    const int n_x = grid0.n_x();

    StateGrid lifted = grid0;
    lifted.p_nodes = {spread_axis(p.interest, 0.005, 5)};
    lifted.fixed_wage = p.wage;
    const int n_p = 5;

    // frozen price drift against per-node constant-price sweeps
    PlmSpec still;
    still.family = PlmSpec::Family::linear;
    still.theta = Eigen::Vector2d(0.0, 0.0);
    const TensorField ps = solve_price_space_hjb(still, lifted, params, terminal, n);
    double gap_frozen = 0.0;
    for (int ip = 0; ip < n_p; ++ip) {
        const PriceVector node{lifted.p_nodes[0][ip], p.wage};
        const HjbPath ref = solve_hjb_path(std::vector<PriceVector>(n, node), terminal,
                                           params.dt, grid0, params);
        for (int s = 0; s <= n; ++s) {
            const double d = (ps.values[s].segment(ip * n_x, n_x) - ref.values[s].v)
                                 .cwiseAbs()
                                 .maxCoeff();
            gap_frozen = std::max(gap_frozen, d);
        }
    }

    // aggregate axis with zero intensity collapses onto the price-space solve
    PlmSpec drifting;
    drifting.family = PlmSpec::Family::linear;
    drifting.theta = Eigen::Vector2d(0.002, -0.05);
    StateGrid lifted_z = lifted;
    lifted_z.z_nodes = Eigen::VectorXd::Zero(1);
    const TensorField ext = solve_extended_hjb(drifting, lifted_z, params, terminal, n);
    const TensorField ps2 = solve_price_space_hjb(drifting, lifted, params, terminal, n);
    double gap_extended = 0.0;
    for (int s = 0; s <= n; ++s)
        gap_extended = std::max(gap_extended,
                                (ext.values[s] - ps2.values[s]).cwiseAbs().maxCoeff());

    // internalized learning with zero gain pins each belief slice
    PlmSpec revert;
    revert.family = PlmSpec::Family::level_revert;
    revert.revert_rate = 0.4;
    LearningRule inert;
    inert.kind = LearningKind::constant_gain;
    inert.gain = 0.0;
    StateGrid lifted_t = lifted;
    lifted_t.theta_nodes = {spread_axis(p.interest, 0.004, 3)};
    const TensorField internal =
        solve_internalized_hjb(revert, inert, lifted_t, params, terminal, n);
    double gap_internal = 0.0;
    for (int jt = 0; jt < 3; ++jt) {
        PlmSpec pinned = revert;
        pinned.theta = Eigen::VectorXd::Constant(1, lifted_t.theta_nodes[0][jt]);
        const TensorField ref = solve_price_space_hjb(pinned, lifted, params, terminal, n);
        for (int s = 0; s <= n; ++s)
            for (int ip = 0; ip < n_p; ++ip) {
                const double d = (internal.values[s].segment((ip + n_p * jt) * n_x, n_x) -
                                  ref.values[s].segment(ip * n_x, n_x))
                                     .cwiseAbs()
                                     .maxCoeff();
                gap_internal = std::max(gap_internal, d);
            }
    }

    detail = "frozen=" + g3(gap_frozen) + " extended=" + g3(gap_extended) +
             " internalized=" + g3(gap_internal);
    double margin = gap_frozen / 1e-8;
    margin = std::max(margin, gap_extended / 1e-8);
    margin = std::max(margin, gap_internal / 1e-10);
    return margin;
}

// ---------------------------------------------------------------------------
// 7. master oracle against the induced-kernel reduction along realized paths

double master_tree_gap(const DiscreteModel& md, int resolution) {
    const Histogram m0 = histo({0.63, 0.37});
    Eigen::MatrixXd preferred = Eigen::MatrixXd::Zero(2, 2);
    preferred(0, 0) = 1.0;
    preferred(1, 1) = 1.0;
    auto profile = [&](int, int, double) { return preferred; };

    const PriceTree tree = induce_price_tree(md, profile, m0, 0);
    const BellmanTables bt = bellman_backward(md, tree.kernel);
    const MasterTables mt = master_oracle(md, resolution);

    double worst = 0.0;
    for (int t = 0; t <= md.horizon; ++t)
        for (int node = tree.offset[t]; node < tree.offset[t + 1]; ++node)
            for (int x = 0; x < md.n_x; ++x) {
                const double vb =
                    bt.value[t][bt.index(x, tree.z_state[node], tree.grid_index[node])];
                const double vm =
                    master_value(mt, t, x, tree.z_state[node], tree.density[node].w);
                worst = std::max(worst, std::abs(vb - vm));
            }
    return worst;
}

double criterion_master(std::string& detail) {
    const double nonlinear = master_tree_gap(tiny_discrete(false), 101);
    const double linear = master_tree_gap(tiny_discrete(true), 101);
    detail = "nonlinear=" + g3(nonlinear) + " linear=" + g3(linear) + " resolution=101";
    return std::max(nonlinear / 1e-3, linear / 1e-12);
}

// ---------------------------------------------------------------------------
// 8. markov-reward-process cross-oracle agreement

double criterion_mrp(std::string& detail) {
    MrpModel lin;
    lin.n_x = 3;
    lin.n_z = 2;
    lin.discount = 0.92;
    lin.horizon = 4;
    lin.z_kernel.resize(2, 2);
    lin.z_kernel << 0.8, 0.2, 0.3, 0.7;
    Eigen::MatrixXd A0(3, 3), A1(3, 3);
    A0 << 0.7, 0.2, 0.1, 0.15, 0.7, 0.15, 0.1, 0.25, 0.65;
    A1 << 0.6, 0.3, 0.1, 0.2, 0.6, 0.2, 0.05, 0.3, 0.65;
    lin.x_kernel = {A0, A1};
    lin.price_map = [](const Histogram& m, int z) {
        return (1.0 + 0.3 * m.w[1] + 0.6 * m.w[2]) * (z == 0 ? 1.0 : 1.15);
    };
    lin.reward = [](double p) { return 0.4 + 0.5 * p; };
    lin.terminal = [](double p) { return 1.1 * p; };
    const Histogram m0_lin = histo({0.47, 0.31, 0.22});
    const double bf_lin = mrp_value_bruteforce(lin, m0_lin, 0);
    const double lin_gap =
        std::abs(mrp_oracle_value(mrp_master_oracle(lin, 11), m0_lin, 0) - bf_lin);

    MrpModel curved;
    curved.n_x = 2;
    curved.n_z = 2;
    curved.discount = 0.9;
    curved.horizon = 4;
    curved.z_kernel.resize(2, 2);
    curved.z_kernel << 0.75, 0.25, 0.35, 0.65;
    Eigen::MatrixXd B0(2, 2), B1(2, 2);
    B0 << 0.8, 0.2, 0.3, 0.7;
    B1 << 0.65, 0.35, 0.25, 0.75;
    curved.x_kernel = {B0, B1};
    curved.price_map = [](const Histogram& m, int z) {
        return (0.9 + 0.5 * m.w[1]) * (z == 0 ? 1.0 : 1.1);
    };
    curved.reward = [](double p) { return std::exp(0.8 * p); };
    curved.terminal = [](double p) { return std::log(1.0 + p); };
    const Histogram m0_cur = histo({0.585, 0.415});
    const double bf_cur = mrp_value_bruteforce(curved, m0_cur, 0);
    const double e_coarse =
        std::abs(mrp_oracle_value(mrp_master_oracle(curved, 101), m0_cur, 0) - bf_cur);
    const double e_fine =
        std::abs(mrp_oracle_value(mrp_master_oracle(curved, 201), m0_cur, 0) - bf_cur);
    const double ratio = e_coarse / e_fine;

    detail = "linear_gap=" + g3(lin_gap) + " e101=" + g3(e_coarse) + " ratio=" + g3(ratio);
    double margin = std::max(lin_gap / 1e-12, e_coarse / 1e-4);
    if (!(ratio >= 2.5 && ratio <= 8.0)) margin = std::max(margin, 2.0);
    return margin;
}

// ---------------------------------------------------------------------------
// 9. common-noise learning run at scale plus cache exactness

double criterion_noise(std::string& detail) {
    ModelParams params;
    params.dt = 0.25;
    params.beta = 4e-5;
    const StationaryEquilibrium& eq = base_equilibrium();
    const StateGrid grid0 = base_grid();

    StateGrid lifted = grid0;
    lifted.z_nodes = spread_axis(0.0, 0.1, 11);
    lifted.p_nodes = {spread_axis(eq.prices.interest, 0.006, 21)};
    lifted.fixed_wage = eq.prices.wage;

    PlmSpec family;
    family.family = PlmSpec::Family::level_revert;
    family.revert_rate = 0.5;
    LearningRule rule;
    rule.kind = LearningKind::constant_gain;
    rule.gain = 0.02;
    const BeliefState belief0 =
        BeliefState::levels(Eigen::VectorXd::Constant(1, eq.prices.interest + 0.003));
    SimulationOptions opts;
    opts.enforce_horizon = false;
    opts.seed = substream_seed(2026, "acceptance-common-noise");

    const int n = 500;
    const SimulationTrack track = run_learning_simulation(eq.density, 0.0, belief0, family,
                                                          rule, lifted, params, n, eq.value,
                                                          opts);

    double mass = 0.0, price_gap = 0.0;
    for (int t = 0; t <= n; ++t) {
        mass = std::max(mass, std::abs(track.densities[t].total() - 1.0));
        const PriceVector direct =
            price_functional(track.densities[t], track.z[t], grid0, params);
        price_gap = std::max(price_gap, (track.prices[t].vec() - direct.vec())
                                            .cwiseAbs()
                                            .maxCoeff());
    }

    // cache exactness: an inert belief must make the cached run and the
    // solve-every-date run indistinguishable
    ModelParams small_params;
    small_params.dt = 0.25;
    small_params.beta = 4e-4;
    const StateGrid small0 = StateGrid::regular(40, 20.0, small_params);
    const StationaryEquilibrium small_eq = solve_stationary_equilibrium(small0, small_params);
    StateGrid small = small0;
    small.z_nodes = spread_axis(0.0, 0.1, 5);
    small.p_nodes = {spread_axis(small_eq.prices.interest, 0.005, 7)};
    small.fixed_wage = small_eq.prices.wage;
    LearningRule inert;
    inert.kind = LearningKind::constant_gain;
    inert.gain = 0.0;
    const BeliefState frozen =
        BeliefState::levels(Eigen::VectorXd::Constant(1, small_eq.prices.interest + 0.002));
    SimulationOptions cached = opts;
    SimulationOptions fresh = opts;
    fresh.cache_threshold = 0.0;
    const int n_small = 30;
    const SimulationTrack a = run_learning_simulation(small_eq.density, 0.0, frozen, family,
                                                      inert, small, small_params, n_small,
                                                      small_eq.value, cached);
    const SimulationTrack b = run_learning_simulation(small_eq.density, 0.0, frozen, family,
                                                      inert, small, small_params, n_small,
                                                      small_eq.value, fresh);
    double cache_gap = 0.0;
    for (int t = 0; t <= n_small; ++t)
        cache_gap = std::max(cache_gap, (a.prices[t].vec() - b.prices[t].vec())
                                            .cwiseAbs()
                                            .maxCoeff());
    const bool cache_counts = a.hjb_solves == 1 && b.hjb_solves == n_small &&
                              !a.cache_disabled && b.cache_disabled;

    detail = "mass=" + g3(mass) + " price_gap=" + g3(price_gap) +
             " cache_gap=" + g3(cache_gap) + " solves=" + std::to_string(track.hjb_solves) +
             " p_excursions=" + std::to_string(track.p_excursions);
    double margin = std::max(mass / 1e-10, price_gap / 1e-12);
    margin = std::max(margin, cache_gap / 1e-13);
    if (!cache_counts) margin = std::max(margin, 2.0);
    return margin;
}

// ---------------------------------------------------------------------------
// 10. byte-identical reruns for every subcommand

const char* kDeterminismBase = R"(
[model]
dt = 0.25

[grid]
n_a = 30
a_max = 20.0

[output]
density_every = 10

[run]
seed = 7
)";

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// runs the subcommand twice and counts CSV files whose bytes differ
int rerun_gap(const std::string& sub, const std::string& toml_text, std::string& detail) {
    const RunConfig cfg = config_from_table(toml::parse_text(toml_text));
    const fs::path root = fs::temp_directory_path() / "mfg-acceptance";
    const fs::path dir_a = root / (sub + "-a");
    const fs::path dir_b = root / (sub + "-b");
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    const RunArtifacts a = run_experiment(sub, cfg, dir_a.string());
    const RunArtifacts b = run_experiment(sub, cfg, dir_b.string());

    int differ = 0, compared = 0;
    for (const std::string& name : a.files) {
        if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
        ++compared;
        if (read_bytes(dir_a / name) != read_bytes(dir_b / name)) ++differ;
    }
    detail += sub + "=" + std::to_string(compared) + " ";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    return differ;
}

double criterion_determinism(std::string& detail) {
    const std::string base = kDeterminismBase;
    const std::string discrete_block = R"(
[discrete]
n_x = 2
n_act = 2
n_z = 2
discount = 0.9
horizon = 6
z_kernel = [[0.7, 0.3], [0.4, 0.6]]
x_kernel = [
  [[[0.85, 0.15], [0.25, 0.75]], [[0.80, 0.20], [0.30, 0.70]]],
  [[[0.50, 0.50], [0.60, 0.40]], [[0.45, 0.55], [0.55, 0.45]]],
]
reward_base = [[2.0, 0.0], [0.3, 2.3]]
reward_price = [[0.5, 0.5], [0.5, 0.5]]
terminal_base = [0.0, 0.4]
terminal_price = [0.7, 0.7]
price_intercept = 0.8
price_weights = [0.0, 0.4]
price_z_factor = [1.0, 1.1]
n_steps = 25
rule = "least_squares"
resolution = 41
)";
    const std::string mrp_block = R"(
[mrp]
n_x = 3
n_z = 2
discount = 0.92
horizon = 4
z_kernel = [[0.8, 0.2], [0.3, 0.7]]
x_kernel = [
  [[0.7, 0.2, 0.1], [0.15, 0.7, 0.15], [0.1, 0.25, 0.65]],
  [[0.6, 0.3, 0.1], [0.2, 0.6, 0.2], [0.05, 0.3, 0.65]],
]
reward = [0.4, 0.5]
terminal = [0.0, 1.1]
price_intercept = 1.0
price_weights = [0.0, 0.3, 0.6]
price_z_factor = [1.0, 1.15]
m0 = [0.47, 0.31, 0.22]
resolution = 41
paths = 500
)";

    int differ = 0;
    detail = "csv_counts: ";
    differ += rerun_gap("stationary", base, detail);
    differ += rerun_gap("transition", base + R"(
[transition]
n_steps = 20
tol = 1e-7
)",
                        detail);
    differ += rerun_gap("temporary-eq", base + R"(
[temporary]
n_steps = 15
enforce_horizon = false

[beliefs]
predictor = "adaptive_level"
rule = "constant_gain"
gain = 0.1
)",
                        detail);
    differ += rerun_gap("common-noise", R"(
[model]
dt = 0.25
beta = 0.001

[grid]
n_a = 30
a_max = 20.0

[output]
density_every = 10

[run]
seed = 7

[common_noise]
n_steps = 10
n_z = 3
n_p = 5
enforce_horizon = false

[beliefs]
rule = "constant_gain"
gain = 0.05
)",
                        detail);
    differ += rerun_gap("discrete-learn", base + discrete_block, detail);
    differ += rerun_gap("discrete-master", base + discrete_block, detail);
    differ += rerun_gap("mrp", base + mrp_block, detail);
    return differ;
}

struct Criterion {
    std::string name;
    double threshold;
    double budget_seconds;  // 0 disables the runtime bound
    std::function<double(std::string&)> body;
};

}  // namespace

std::vector<CriterionResult> run_acceptance_battery(std::ostream& log) {
    const std::vector<Criterion> checks = {
        {"adjoint-consistency", 1e-12, 5.0, criterion_adjoint},
        {"mass-conservation", 1e-10, 10.0, criterion_mass},
        {"stationary-equilibrium", 1.0, 30.0, criterion_stationary},
        {"re-recovery", 1e-6, 180.0, criterion_recovery},
        {"learning-convergence", 1.0, 30.0, criterion_learning},
        {"cross-solver-consistency", 1.0, 120.0, criterion_cross},
        {"master-sidestep", 1.0, 60.0, criterion_master},
        {"mrp-cross-oracle", 1.0, 60.0, criterion_mrp},
        {"common-noise-structure", 1.0, 600.0, criterion_noise},
        {"determinism", 0.0, 0.0, criterion_determinism},
    };

    std::vector<CriterionResult> out;
    for (std::size_t k = 0; k < checks.size(); ++k) {
        CriterionResult r;
        r.name = checks[k].name;
        r.threshold = checks[k].threshold;
        const auto start = std::chrono::steady_clock::now();
        try {
            r.measured = checks[k].body(r.detail);
            r.passed = std::isfinite(r.measured) && r.measured <= r.threshold;
        } catch (const std::exception& e) {
            r.measured = std::numeric_limits<double>::quiet_NaN();
            r.passed = false;
            r.detail = e.what();
        }
        const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
        r.seconds = took.count();
        if (checks[k].budget_seconds > 0.0 && r.seconds > checks[k].budget_seconds) {
            r.passed = false;
            r.detail += " (over " + g3(checks[k].budget_seconds) + "s budget)";
        }

        char line[160];
        std::snprintf(line, sizeof(line), "%s %2zu/10 %-26s measured=%-10s bound=%-8s [%.1fs]",
                      r.passed ? "PASS" : "FAIL", k + 1, r.name.c_str(),
                      g3(r.measured).c_str(), g3(r.threshold).c_str(), r.seconds);
        log << line;
        if (!r.detail.empty()) log << "  " << r.detail;
        log << "\n";
        log.flush();
        out.push_back(std::move(r));
    }
    return out;
}

bool all_passed(const std::vector<CriterionResult>& results) {
    for (const auto& r : results)
        if (!r.passed) return false;
    return results.size() == 10;
}

}  // namespace mfg
