#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "mfg/discrete.hpp"

using namespace mfg;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

Histogram histo(std::initializer_list<double> w) {
    Histogram m;
    m.w.resize(static_cast<int>(w.size()));
    int i = 0;
    for (double v : w) m.w[i++] = v;
    return m;
}

// two states, two actions, two aggregate states; the preferred action a == x
// carries a flat bonus large enough to dominate every continuation gap, so
// the equilibrium profile is known in closed form and the measure tree it
// generates is exact
DiscreteModel tiny_model(bool linear) {
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
        VectorXd row(2);
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

MatrixXd preferred_profile() {
    MatrixXd pi = MatrixXd::Zero(2, 2);
    pi(0, 0) = 1.0;
    pi(1, 1) = 1.0;
    return pi;
}

// exact values on the realized measure tree by direct backward enumeration;
// doubles as the dominance check (the argmax must be the preferred action
// at every tree node, otherwise the profile fed to the tree was wrong)
std::vector<std::vector<std::array<double, 2>>> tree_values(const DiscreteModel& md,
                                                            const PriceTree& tree) {
    const int T = md.horizon;
    std::vector<std::vector<std::array<double, 2>>> U(T + 1);
    for (int t = T; t >= 0; --t) {
        const int lo = tree.offset[t], hi = tree.offset[t + 1];
        U[t].resize(hi - lo);
        for (int node = lo; node < hi; ++node) {
            const int z = tree.z_state[node];
            const double p = tree.price[node];
            for (int x = 0; x < 2; ++x) {
                if (t == T) {
                    U[t][node - lo][x] = md.terminal(x, z, p);
                    continue;
                }
                double best = -1e300;
                int arg = -1;
                for (int a = 0; a < 2; ++a) {
                    double ev = 0.0;
                    for (int zn = 0; zn < 2; ++zn) {
                        const int kid = tree.child(t, node, zn);
                        const VectorXd row = md.x_kernel(x, z, a, p);
                        double w = 0.0;
                        for (int x1 = 0; x1 < 2; ++x1)
                            w += row[x1] * U[t + 1][kid - tree.offset[t + 1]][x1];
                        ev += md.z_kernel(z, zn) * w;
                    }
                    const double q = md.reward(x, z, a, p) + md.discount * ev;
                    if (q > best) {
                        best = q;
                        arg = a;
                    }
                }
                REQUIRE(arg == x);
                U[t][node - lo][x] = best;
            }
        }
    }
    return U;
}

// the stationary learning fixture: n_z = 1, frozen-price optimum found by
// policy iteration, stationary histogram of the greedy chain, terminal set
// to the infinite-horizon value so every tail solve reproduces it
constexpr double kStatKernel[2][2][2] = {{{0.9, 0.1}, {0.3, 0.7}}, {{0.6, 0.4}, {0.2, 0.8}}};

double stat_reward(int x, int a, double p) {
    return a == 0 ? 0.2 + 0.1 * x : 0.05 + 0.05 * x + 0.5 * p;
}

struct StationaryFixture {
    DiscreteModel model;
    Histogram m_star;
    double p_star = 0.0;
    int pi_star[2] = {-1, -1};
};

const StationaryFixture& stationary_fixture() {
    static const StationaryFixture fix = [] {
        const double gamma = 0.95;
        auto pstar = [](const VectorXd& m) { return 0.6 + 0.8 * m[1]; };
        double p = 0.9;
        int pi[2] = {-1, -1};
        Vector2d U = Vector2d::Zero();
        for (int it = 0; it < 400; ++it) {
            bool found = false;
            for (int a0 = 0; a0 < 2 && !found; ++a0) {
                for (int a1 = 0; a1 < 2 && !found; ++a1) {
                    Eigen::Matrix2d P;
                    P << kStatKernel[a0][0][0], kStatKernel[a0][0][1], kStatKernel[a1][1][0],
                        kStatKernel[a1][1][1];
                    const Vector2d r(stat_reward(0, a0, p), stat_reward(1, a1, p));
                    const Vector2d V =
                        (Eigen::Matrix2d::Identity() - gamma * P).partialPivLu().solve(r);
                    bool consistent = true;
                    for (int x = 0; x < 2; ++x) {
                        double q[2];
                        for (int a = 0; a < 2; ++a) {
                            q[a] = stat_reward(x, a, p) +
                                   gamma * (kStatKernel[a][x][0] * V[0] +
                                            kStatKernel[a][x][1] * V[1]);
                        }
                        const int arg = q[1] > q[0] ? 1 : 0;
                        if (arg != (x == 0 ? a0 : a1)) consistent = false;
                    }
                    if (consistent) {
                        pi[0] = a0;
                        pi[1] = a1;
                        U = V;
                        found = true;
                    }
                }
            }
            REQUIRE(found);
            const double a = kStatKernel[pi[0]][0][1];
            const double b = kStatKernel[pi[1]][1][0];
            const Vector2d m(b / (a + b), a / (a + b));
            const double pn = pstar(m);
            if (std::abs(pn - p) < 1e-15) {
                p = pn;
                break;
            }
            p = 0.5 * (p + pn);
        }

        StationaryFixture f;
        f.p_star = p;
        f.pi_star[0] = pi[0];
        f.pi_star[1] = pi[1];
        const double a = kStatKernel[pi[0]][0][1];
        const double b = kStatKernel[pi[1]][1][0];
        f.m_star = histo({b / (a + b), a / (a + b)});

        f.model.n_x = 2;
        f.model.n_act = 2;
        f.model.n_z = 1;
        f.model.discount = gamma;
        f.model.z_kernel = MatrixXd::Ones(1, 1);
        f.model.x_kernel = [](int x, int, int act, double) {
            VectorXd row(2);
            row << kStatKernel[act][x][0], kStatKernel[act][x][1];
            return row;
        };
        f.model.reward = [](int x, int, int act, double p_) { return stat_reward(x, act, p_); };
        const double u0 = U[0], u1 = U[1];
        f.model.terminal = [u0, u1](int x, int, double) { return x == 0 ? u0 : u1; };
        f.model.price_map = [pstar](const Histogram& m, int) { return pstar(m.w); };
        return f;
    }();
    return fix;
}

// constant-price environment: the price map ignores the histogram entirely
DiscreteModel constant_price_model(double pbar) {
    DiscreteModel md = stationary_fixture().model;
    md.price_map = [pbar](const Histogram&, int) { return pbar; };
    return md;
}

}  // namespace

TEST_CASE("histograms, models and kernels reject malformed inputs") {
    CHECK_THROWS_AS(histo({0.5, 0.6}).validate(), DomainError);
    CHECK_THROWS_AS(histo({1.2, -0.2}).validate(), DomainError);
    CHECK_THROWS_AS(Histogram{}.validate(), ShapeError);
    CHECK_NOTHROW(histo({0.25, 0.75}).validate());

    DiscreteModel md = tiny_model(true);
    CHECK_NOTHROW(md.validate());
    DiscreteModel bad = md;
    bad.discount = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = md;
    bad.z_kernel(0, 0) = 0.9;  // row no longer sums to one
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = md;
    bad.z_kernel.resize(1, 1);
    CHECK_THROWS_AS(bad.validate(), ShapeError);
    bad = md;
    bad.reward = nullptr;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = md;
    bad.horizon = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    VectorXd grid(3);
    grid << 0.9, 1.0, 1.1;
    CHECK_NOTHROW(PerceivedPriceKernel::degenerate(grid, 2).validate());
    VectorXd decreasing(2);
    decreasing << 1.1, 0.9;
    CHECK_THROWS_AS(PerceivedPriceKernel::degenerate(decreasing, 2), ConfigError);
    CHECK_THROWS_AS(
        PerceivedPriceKernel::finite(grid, {MatrixXd::Identity(3, 3)}, 2), ShapeError);
    std::vector<MatrixXd> leaky(2, MatrixXd::Identity(3, 3));
    leaky[1](0, 0) = 0.5;
    CHECK_THROWS_AS(PerceivedPriceKernel::finite(grid, leaky, 2), DomainError);
    CHECK_THROWS_AS(PerceivedPriceKernel::var1(grid, Vector2d(1.0, 0.0), -0.1, 2), ConfigError);

    // bellman rejects a kernel sized for a different aggregate count
    const PerceivedPriceKernel solo = PerceivedPriceKernel::degenerate(grid, 1);
    CHECK_THROWS_AS(bellman_backward(md, solo), ShapeError);
}

TEST_CASE("var1 kernels bin the forecast mass where it belongs") {
    VectorXd grid(4);
    grid << 1.0, 1.2, 1.4, 1.6;

    // exact forecast: linear split between the bracketing nodes
    const PerceivedPriceKernel sharp =
        PerceivedPriceKernel::var1(grid, Vector2d(0.25, 1.0), 0.0, 2);
    CHECK(sharp.rows.size() == 4);
    const MatrixXd& mat = sharp.rows[0];
    // row 0: mean 1.25, a quarter of the way from 1.2 to 1.4
    CHECK(mat(0, 1) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(mat(0, 2) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(mat(0, 0) == 0.0);
    // row 3: mean 1.85 beyond the grid, clamped onto the last node
    CHECK(mat(3, 3) == 1.0);
    for (const MatrixXd& k : sharp.rows) CHECK((k - mat).norm() == 0.0);

    // diffuse forecast: rows are cdf bins, sum exactly one, and shift right
    // with the current price when the slope is positive
    const PerceivedPriceKernel fuzzy =
        PerceivedPriceKernel::var1(grid, Vector2d(0.1, 0.9), 0.15, 1);
    const MatrixXd& fm = fuzzy.rows[0];
    for (int i = 0; i < 4; ++i) {
        CHECK(fm.row(i).sum() == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(fm.row(i).minCoeff() >= 0.0);
    }
    double cdf_low = 0.0, cdf_high = 0.0;
    for (int j = 0; j < 2; ++j) {
        cdf_low += fm(0, j);
        cdf_high += fm(3, j);
    }
    CHECK(cdf_low > cdf_high);  // higher current price pushes mass upward
}

TEST_CASE("backward induction reduces to terminal tables and myopic argmax") {
    DiscreteModel md = tiny_model(true);
    VectorXd grid(3);
    grid << 0.85, 1.0, 1.25;
    const PerceivedPriceKernel kern = PerceivedPriceKernel::degenerate(grid, 2);

    SUBCASE("horizon zero returns the terminal slice") {
        md.horizon = 0;
        const BellmanTables bt = bellman_backward(md, kern);
        CHECK(bt.value.size() == 1);
        CHECK(bt.action.empty());
        CHECK(bt.policy.empty());
        for (int ip = 0; ip < 3; ++ip) {
            for (int z = 0; z < 2; ++z) {
                for (int x = 0; x < 2; ++x) {
                    CHECK(bt.value[0][bt.index(x, z, ip)] == md.terminal(x, z, grid[ip]));
                }
            }
        }
    }

    SUBCASE("zero discount maximizes the flow reward alone") {
        md.discount = 0.0;
        md.reward = [](int x, int z, int a, double) {
            return a == (x + z) % 2 ? 1.0 : 0.0;  // known argmax pattern
        };
        const BellmanTables bt = bellman_backward(md, kern);
        for (int t = 0; t < md.horizon; ++t) {
            for (int ip = 0; ip < 3; ++ip) {
                for (int z = 0; z < 2; ++z) {
                    for (int x = 0; x < 2; ++x) {
                        CHECK(bt.action[t][bt.index(x, z, ip)] == (x + z) % 2);
                        CHECK(bt.value[t][bt.index(x, z, ip)] == 1.0);
                    }
                }
            }
        }
    }
}

TEST_CASE("backward induction matches brute force over every deterministic policy") {
    // two states, two actions, two dates, frozen price: enumerate all 2^4
    // assignments (x, t) -> a and take the best
    DiscreteModel md;
    md.n_x = 2;
    md.n_act = 2;
    md.n_z = 1;
    md.discount = 0.9;
    md.horizon = 2;
    md.z_kernel = MatrixXd::Ones(1, 1);
    md.x_kernel = [](int x, int, int a, double) {
        static const double K[2][2][2] = {{{0.8, 0.2}, {0.4, 0.6}}, {{0.3, 0.7}, {0.9, 0.1}}};
        VectorXd row(2);
        row << K[a][x][0], K[a][x][1];
        return row;
    };
    md.reward = [](int x, int, int a, double p) { return 0.3 * x + (a == 1 ? 0.8 * p : 0.55); };
    md.terminal = [](int x, int, double p) { return x == 0 ? 1.4 * p : 0.2; };
    md.price_map = [](const Histogram&, int) { return 1.0; };

    VectorXd node(1);
    node << 1.07;
    const BellmanTables bt = bellman_backward(md, PerceivedPriceKernel::degenerate(node, 1));

    const double p = node[0];
    double best[2] = {-1e300, -1e300};
    for (int mask = 0; mask < 16; ++mask) {
        const int assign[2][2] = {{mask & 1, (mask >> 1) & 1}, {(mask >> 2) & 1, (mask >> 3) & 1}};
        Vector2d v;
        for (int x = 0; x < 2; ++x) v[x] = md.terminal(x, 0, p);
        for (int t = 1; t >= 0; --t) {
            Vector2d next;
            for (int x = 0; x < 2; ++x) {
                const int a = assign[t][x];
                next[x] = md.reward(x, 0, a, p) + md.discount * md.x_kernel(x, 0, a, p).dot(v);
            }
            v = next;
        }
        for (int x = 0; x < 2; ++x) best[x] = std::max(best[x], v[x]);
    }
    for (int x = 0; x < 2; ++x) CHECK(bt.value[0][bt.index(x, 0, 0)] == best[x]);
}

TEST_CASE("a degenerate kernel reproduces the frozen-price solve at every node") {
    DiscreteModel md = tiny_model(false);
    // make the kernel price-sensitive too so the reduction is not vacuous
    md.x_kernel = [](int x, int z, int a, double p) {
        const double lean = 0.1 * (p - 1.0);
        VectorXd row(2);
        const double stay = std::clamp((a == 0 ? 0.8 : 0.45) + lean, 0.05, 0.95);
        row << (x == 0 ? stay : 1.0 - stay), (x == 0 ? 1.0 - stay : stay);
        return row;
    };
    VectorXd grid(3);
    grid << 0.9, 1.05, 1.22;
    const BellmanTables bt = bellman_backward(md, PerceivedPriceKernel::degenerate(grid, 2));

    for (int ip = 0; ip < 3; ++ip) {
        const double p = grid[ip];
        // frozen-price backward induction over (x, z) alone
        MatrixXd v(2, 2);  // x rows, z cols
        for (int z = 0; z < 2; ++z) {
            for (int x = 0; x < 2; ++x) v(x, z) = md.terminal(x, z, p);
        }
        for (int t = md.horizon - 1; t >= 0; --t) {
            MatrixXd next(2, 2);
            for (int z = 0; z < 2; ++z) {
                Vector2d cont = Vector2d::Zero();
                for (int zn = 0; zn < 2; ++zn) {
                    for (int x1 = 0; x1 < 2; ++x1) cont[x1] += md.z_kernel(z, zn) * v(x1, zn);
                }
                for (int x = 0; x < 2; ++x) {
                    double bestq = -1e300;
                    for (int a = 0; a < 2; ++a) {
                        bestq = std::max(bestq, md.reward(x, z, a, p) +
                                                    md.discount *
                                                        md.x_kernel(x, z, a, p).dot(cont));
                    }
                    next(x, z) = bestq;
                }
            }
            for (int z = 0; z < 2; ++z) {
                for (int x = 0; x < 2; ++x) {
                    CHECK(bt.value[t][bt.index(x, z, ip)] == next(x, z));
                }
            }
            v = next;
        }
    }
}

TEST_CASE("exact ties spread the policy uniformly and the action takes the lowest index") {
    DiscreteModel md = tiny_model(true);
    // both actions identical: every (x, z, p, t) ties exactly
    md.x_kernel = [](int x, int, int, double) {
        VectorXd row(2);
        row << (x == 0 ? 0.7 : 0.2), (x == 0 ? 0.3 : 0.8);
        return row;
    };
    md.reward = [](int x, int, int, double p) { return 0.4 * x + p; };
    VectorXd grid(2);
    grid << 0.9, 1.1;
    const BellmanTables bt = bellman_backward(md, PerceivedPriceKernel::degenerate(grid, 2));
    for (int t = 0; t < md.horizon; ++t) {
        CHECK((bt.action[t].array() == 0).all());
        CHECK((bt.policy[t].array() == 0.5).all());
    }
}

TEST_CASE("chapman steps preserve mass and map point masses exactly") {
    DiscreteModel md = tiny_model(true);

    // doubly stochastic single-action kernel keeps the uniform histogram
    DiscreteModel ds = md;
    ds.n_act = 1;
    ds.x_kernel = [](int x, int, int, double) {
        VectorXd row(2);
        row << (x == 0 ? 0.3 : 0.7), (x == 0 ? 0.7 : 0.3);
        return row;
    };
    const Histogram uni = histo({0.5, 0.5});
    const Histogram pushed = chapman_step(uni, MatrixXd::Ones(2, 1), 0, 1.0, ds);
    CHECK(std::abs(pushed.w[0] - 0.5) <= 1e-15);
    CHECK(std::abs(pushed.w[1] - 0.5) <= 1e-15);

    // deterministic kernel and policy map a point mass to a point mass
    DiscreteModel det = md;
    det.x_kernel = [](int x, int, int a, double) {
        VectorXd row = VectorXd::Zero(2);
        row[a == 0 ? x : 1 - x] = 1.0;  // action 1 swaps the state
        return row;
    };
    MatrixXd swap_all = MatrixXd::Zero(2, 2);
    swap_all.col(1).setOnes();
    const Histogram point = chapman_step(histo({1.0, 0.0}), swap_all, 1, 1.0, det);
    CHECK(point.w[0] == 0.0);
    CHECK(point.w[1] == 1.0);

    // generic stochastic policy keeps unit mass
    MatrixXd mixed(2, 2);
    mixed << 0.37, 0.63, 0.81, 0.19;
    const Histogram any = chapman_step(histo({0.29, 0.71}), mixed, 1, 1.13, md);
    CHECK(std::abs(any.w.sum() - 1.0) <= 1e-14);
    CHECK(any.w.minCoeff() >= 0.0);

    // malformed policies are refused
    MatrixXd leaky(2, 2);
    leaky << 0.5, 0.4, 0.5, 0.5;
    CHECK_THROWS_AS(chapman_step(uni, leaky, 0, 1.0, md), DomainError);
    CHECK_THROWS_AS(chapman_step(uni, MatrixXd::Ones(3, 1), 0, 1.0, md), ShapeError);
    CHECK_THROWS_AS(chapman_step(histo({0.2, 0.2, 0.6}), mixed, 0, 1.0, md), ShapeError);
}

TEST_CASE("simplex lattice interpolation is exact for linear functions") {
    SUBCASE("segment") {
        const SimplexGrid grid{2, 21};
        CHECK(grid.node_count() == 21);
        VectorXd vals(21);
        for (int k = 0; k < 21; ++k) {
            const VectorXd m = grid.node(k);
            CHECK(std::abs(m.sum() - 1.0) <= 1e-15);
            vals[k] = 0.3 + 1.7 * m[1];
        }
        for (double u : {0.0, 0.013, 0.5, 0.777, 1.0}) {
            VectorXd m(2);
            m << 1.0 - u, u;
            CHECK(grid.interpolate(vals, m) == doctest::Approx(0.3 + 1.7 * u).epsilon(1e-14));
        }
    }
    SUBCASE("triangle") {
        const SimplexGrid grid{3, 11};
        CHECK(grid.node_count() == 66);
        VectorXd vals(66);
        for (int k = 0; k < 66; ++k) {
            const VectorXd m = grid.node(k);
            CHECK(std::abs(m.sum() - 1.0) <= 1e-15);
            CHECK(m.minCoeff() >= -1e-15);
            vals[k] = 0.4 - 0.9 * m[0] + 2.2 * m[1];
        }
        // every lattice node locates onto itself with unit weight
        int idx[3];
        double wgt[3];
        for (int k = 0; k < 66; ++k) {
            const int cnt = grid.locate(grid.node(k), idx, wgt);
            double self = 0.0;
            for (int c = 0; c < cnt; ++c) {
                if (idx[c] == k) self += wgt[c];
            }
            CHECK(self == doctest::Approx(1.0).epsilon(1e-12));
        }
        // interior, edge and vertex queries reproduce the plane exactly
        const double probes[][2] = {{0.21, 0.33}, {0.0, 0.475}, {0.31, 0.0},
                                    {0.62, 0.38},  // diagonal edge
                                    {1.0, 0.0},   {0.0, 0.0}};
        for (const auto& q : probes) {
            VectorXd m(3);
            m << q[0], q[1], 1.0 - q[0] - q[1];
            const double want = 0.4 - 0.9 * m[0] + 2.2 * m[1];
            CHECK(grid.interpolate(vals, m) == doctest::Approx(want).epsilon(1e-13));
        }
        CHECK_THROWS_AS(grid.interpolate(vals, VectorXd::Ones(2)), ShapeError);
    }
}

TEST_CASE("master oracle, induced-kernel bellman and tree enumeration agree when linear") {
    const DiscreteModel md = tiny_model(true);
    const Histogram m0 = histo({0.63, 0.37});
    auto profile = [](int, int, double) { return preferred_profile(); };

    const PriceTree tree = induce_price_tree(md, profile, m0, 0);
    CHECK(tree.nodes() == 15);  // 1 + 2 + 4 + 8
    const auto U = tree_values(md, tree);

    const BellmanTables bt = bellman_backward(md, tree.kernel);
    const MasterTables mt = master_oracle(md, 101);
    CHECK(mt.cycle_flags == 0);
    CHECK(mt.interp_error_estimate <= 1e-12);  // linear value surface

    double worst_bellman = 0.0;
    double worst_master = 0.0;
    for (int t = 0; t <= md.horizon; ++t) {
        for (int node = tree.offset[t]; node < tree.offset[t + 1]; ++node) {
            for (int x = 0; x < 2; ++x) {
                const double truth = U[t][node - tree.offset[t]][x];
                const double vb =
                    bt.value[t][bt.index(x, tree.z_state[node], tree.grid_index[node])];
                const double vm =
                    master_value(mt, t, x, tree.z_state[node], tree.density[node].w);
                worst_bellman = std::max(worst_bellman, std::abs(vb - truth));
                worst_master = std::max(worst_master, std::abs(vm - truth));
            }
        }
    }
    CHECK(worst_bellman <= 1e-12);
    CHECK(worst_master <= 1e-12);

    // the oracle's equilibrium policy is the dominant profile at every node
    for (int t = 0; t < md.horizon; ++t) {
        for (int k = 0; k < mt.grid.node_count(); ++k) {
            for (int z = 0; z < 2; ++z) {
                for (int x = 0; x < 2; ++x) {
                    CHECK(mt.policy[t](mt.index(x, z, k), x) == 1.0);
                }
            }
        }
    }
}

TEST_CASE("master oracle interpolation error decays quadratically") {
    const DiscreteModel md = tiny_model(false);
    const Histogram m0 = histo({0.63, 0.37});
    auto profile = [](int, int, double) { return preferred_profile(); };
    const PriceTree tree = induce_price_tree(md, profile, m0, 0);
    const auto U = tree_values(md, tree);

    auto worst_gap = [&](const MasterTables& mt) {
        double worst = 0.0;
        for (int t = 0; t <= md.horizon; ++t) {
            for (int node = tree.offset[t]; node < tree.offset[t + 1]; ++node) {
                for (int x = 0; x < 2; ++x) {
                    const double vm =
                        master_value(mt, t, x, tree.z_state[node], tree.density[node].w);
                    worst = std::max(worst,
                                     std::abs(vm - U[t][node - tree.offset[t]][x]));
                }
            }
        }
        return worst;
    };

    const MasterTables coarse = master_oracle(md, 101);
    const MasterTables fine = master_oracle(md, 201);
    const double e_coarse = worst_gap(coarse);
    const double e_fine = worst_gap(fine);
    CHECK(e_coarse <= 1e-4);  // measured 5.2e-6 at resolution 101
    const double ratio = e_coarse / e_fine;
    CHECK(ratio >= 2.5);  // quadratic decay gives ~4 when the grids nest
    CHECK(ratio <= 8.0);

    // the induced-kernel reduction stays exact regardless of nonlinearity
    const BellmanTables bt = bellman_backward(md, tree.kernel);
    for (int t = 0; t <= md.horizon; ++t) {
        for (int node = tree.offset[t]; node < tree.offset[t + 1]; ++node) {
            for (int x = 0; x < 2; ++x) {
                const double vb =
                    bt.value[t][bt.index(x, tree.z_state[node], tree.grid_index[node])];
                CHECK(std::abs(vb - U[t][node - tree.offset[t]][x]) <= 1e-12);
            }
        }
    }

    // coarse lattice plus a strict accuracy target raises the warning
    MasterOptions strict;
    strict.target_accuracy = 1e-5;
    const MasterTables warned = master_oracle(md, 11, strict);
    CHECK(warned.warning.find("too coarse") != std::string::npos);
    CHECK(warned.interp_error_estimate > 1e-5);
    CHECK(master_oracle(md, 201, strict).warning.empty());
}

TEST_CASE("anti-coordination cycles are flagged, not hidden") {
    // everyone wants the state the crowd leaves: the best response flips
    // forever, the damped loop cannot settle, and each node says so
    DiscreteModel md;
    md.n_x = 2;
    md.n_act = 2;
    md.n_z = 1;
    md.discount = 1.0;
    md.horizon = 1;
    md.z_kernel = MatrixXd::Ones(1, 1);
    md.x_kernel = [](int, int, int a, double) {
        VectorXd row = VectorXd::Zero(2);
        row[a] = 1.0;
        return row;
    };
    md.reward = [](int, int, int, double) { return 0.0; };
    md.price_map = [](const Histogram& m, int) { return m.w[0]; };
    md.terminal = [](int x, int, double p) { return x == 0 ? -1.02 * p : p - 1.0; };

    const MasterTables mt = master_oracle(md, 41);
    CHECK(mt.cycle_flags > 0);
    CHECK(mt.value[0].allFinite());
}

TEST_CASE("mrp brute force matches hand trees, the oracle and Monte Carlo") {
    MrpModel mr;
    mr.n_x = 3;
    mr.n_z = 2;
    mr.discount = 0.92;
    mr.horizon = 4;
    mr.z_kernel.resize(2, 2);
    mr.z_kernel << 0.8, 0.2, 0.3, 0.7;
    MatrixXd A0(3, 3), A1(3, 3);
    A0 << 0.7, 0.2, 0.1, 0.15, 0.7, 0.15, 0.1, 0.25, 0.65;
    A1 << 0.6, 0.3, 0.1, 0.2, 0.6, 0.2, 0.05, 0.3, 0.65;
    mr.x_kernel = {A0, A1};
    mr.price_map = [](const Histogram& m, int z) {
        return (1.0 + 0.3 * m.w[1] + 0.6 * m.w[2]) * (z == 0 ? 1.0 : 1.15);
    };
    mr.reward = [](double p) { return 0.4 + 0.5 * p; };
    mr.terminal = [](double p) { return 1.1 * p; };
    const Histogram m0 = histo({0.47, 0.31, 0.22});

    SUBCASE("single aggregate state is a deterministic discounted sum") {
        MrpModel solo = mr;
        solo.n_z = 1;
        solo.z_kernel = MatrixXd::Ones(1, 1);
        solo.x_kernel = {A0};
        double hand = 0.0;
        VectorXd m = m0.w;
        double gpow = 1.0;
        for (int t = 0; t < solo.horizon; ++t) {
            hand += gpow * solo.reward(solo.price_map(Histogram{m}, 0));
            m = (A0.transpose() * m).eval();
            gpow *= solo.discount;
        }
        hand += gpow * solo.terminal(solo.price_map(Histogram{m}, 0));
        CHECK(mrp_value_bruteforce(solo, m0, 0) == doctest::Approx(hand).epsilon(1e-15));
    }

    SUBCASE("one-period tree by hand") {
        MrpModel two = mr;
        two.horizon = 1;
        const double p0 = two.price_map(m0, 0);
        const Histogram m1{(A0.transpose() * m0.w).eval()};
        double hand = two.reward(p0);
        for (int zn = 0; zn < 2; ++zn) {
            hand += two.discount * two.z_kernel(0, zn) *
                    two.terminal(two.price_map(m1, zn));
        }
        CHECK(mrp_value_bruteforce(two, m0, 0) == doctest::Approx(hand).epsilon(1e-15));
    }

    SUBCASE("cross-oracle agreement is exact for linear rewards") {
        const double bf = mrp_value_bruteforce(mr, m0, 0);
        const MrpTables tables = mrp_master_oracle(mr, 11);
        CHECK(std::abs(mrp_oracle_value(tables, m0, 0) - bf) <= 1e-12);
        CHECK(tables.interp_error_estimate <= 1e-12);

        const MonteCarloValue mc = mrp_value_monte_carlo(mr, m0, 0, 4000, 99);
        CHECK(mc.paths == 4000);
        CHECK(mc.std_error > 0.0);
        CHECK(std::abs(mc.mean - bf) <= 3.0 * mc.std_error);
    }

    SUBCASE("enumeration budget trips into the Monte Carlo suggestion") {
        MrpModel deep = mr;
        deep.horizon = 21;  // 2^21 > 1e6 paths
        CHECK_THROWS_WITH_AS(mrp_value_bruteforce(deep, m0, 0),
                             doctest::Contains("Monte Carlo"), BudgetError);
    }
}

TEST_CASE("mrp oracle error decays quadratically on a curved reward") {
    MrpModel mr;
    mr.n_x = 2;
    mr.n_z = 2;
    mr.discount = 0.9;
    mr.horizon = 4;
    mr.z_kernel.resize(2, 2);
    mr.z_kernel << 0.75, 0.25, 0.35, 0.65;
    MatrixXd A0(2, 2), A1(2, 2);
    A0 << 0.8, 0.2, 0.3, 0.7;
    A1 << 0.65, 0.35, 0.25, 0.75;
    mr.x_kernel = {A0, A1};
    mr.price_map = [](const Histogram& m, int z) {
        return (0.9 + 0.5 * m.w[1]) * (z == 0 ? 1.0 : 1.1);
    };
    mr.reward = [](double p) { return std::exp(0.8 * p); };
    mr.terminal = [](double p) { return std::log(1.0 + p); };
    const Histogram m0 = histo({0.585, 0.415});

    const double bf = mrp_value_bruteforce(mr, m0, 0);
    const double e_coarse = std::abs(mrp_oracle_value(mrp_master_oracle(mr, 101), m0, 0) - bf);
    const double e_fine = std::abs(mrp_oracle_value(mrp_master_oracle(mr, 201), m0, 0) - bf);
    CHECK(e_coarse <= 1e-4);  // measured 1.5e-5
    CHECK(e_fine <= e_coarse);
    const double ratio = e_coarse / e_fine;
    CHECK(ratio >= 2.5);
    CHECK(ratio <= 8.0);  // measured 5.2
}

TEST_CASE("learning run holds the consistent stationary point") {
    const StationaryFixture& fix = stationary_fixture();
    DiscreteLearnOptions opts;
    opts.price_grid.resize(3);
    opts.price_grid << fix.p_star - 0.05, fix.p_star, fix.p_star + 0.05;
    DiscreteBelief b0;
    b0.theta = VectorXd::Constant(1, fix.p_star);
    DiscreteRule rule;
    rule.kind = DiscreteRule::Kind::constant_gain;
    rule.gain = 0.3;

    const int n = 50;
    const DiscreteTrack tr = run_discrete_learning(fix.model, fix.m_star, 0, b0, rule, n, opts);
    CHECK(tr.bellman_solves == 1);
    CHECK(tr.resolved[0] == 1);
    CHECK(tr.p_excursions == 0);
    CHECK_FALSE(tr.cache_disabled);
    for (int t = 0; t <= n; ++t) {
        CHECK(std::abs(tr.prices[t] - fix.p_star) <= 1e-13);
        CHECK(std::abs(tr.thetas[t][0] - fix.p_star) <= 1e-13);
        CHECK((tr.densities[t].w - fix.m_star.w).lpNorm<Eigen::Infinity>() <= 1e-13);
    }
    for (const MatrixXd& pol : tr.policies) {
        CHECK(pol(0, fix.pi_star[0]) == 1.0);
        CHECK(pol(1, fix.pi_star[1]) == 1.0);
    }
}

TEST_CASE("constant-price learning follows the analytic average and halves per doubling") {
    const double pbar = 1.3;
    const DiscreteModel md = constant_price_model(pbar);
    const Histogram m0 = stationary_fixture().m_star;
    DiscreteLearnOptions opts;
    opts.price_grid.resize(3);
    opts.price_grid << 1.0, pbar, 1.6;

    SUBCASE("decreasing gain is recursive averaging with a unit prior weight") {
        DiscreteBelief b0;
        b0.theta = VectorXd::Constant(1, 0.3);
        DiscreteRule rule;
        rule.kind = DiscreteRule::Kind::decreasing_gain;
        rule.t0 = 2.0;
        const DiscreteTrack tr = run_discrete_learning(md, m0, 0, b0, rule, 512, opts);
        for (int t = 0; t <= 512; ++t) {
            const double exact = (0.3 + pbar * t) / (1.0 + t);
            CHECK(std::abs(tr.thetas[t][0] - exact) <= 1e-12);
        }
        for (int t : {32, 64, 128}) {
            const double ratio = std::abs(tr.thetas[2 * t][0] - pbar) /
                                 std::abs(tr.thetas[t][0] - pbar);
            CHECK(ratio <= 0.75);
        }
    }

    SUBCASE("least squares drives the forecast to the realized price") {
        DiscreteBelief b0;
        b0.theta = VectorXd::Zero(2);
        DiscreteRule rule;
        rule.kind = DiscreteRule::Kind::least_squares;
        rule.ridge = 1e-6;
        const DiscreteTrack tr = run_discrete_learning(md, m0, 0, b0, rule, 512, opts);
        auto err = [&](int t) {
            return std::abs(tr.thetas[t][0] + tr.thetas[t][1] * pbar - pbar);
        };
        CHECK(err(512) <= 1e-8);
        for (int t : {32, 64, 128, 256}) {
            CHECK(err(2 * t) / err(t) <= 0.75);  // measured ~0.5
        }
    }
}

TEST_CASE("learning runs are reproducible by seed") {
    // two aggregate states so the draw actually matters
    DiscreteModel md = stationary_fixture().model;
    md.n_z = 2;
    md.z_kernel.resize(2, 2);
    md.z_kernel << 0.6, 0.4, 0.3, 0.7;
    md.x_kernel = [](int x, int z, int act, double) {
        const double tilt = z == 0 ? 0.0 : 0.08;
        VectorXd row(2);
        const double stay = kStatKernel[act][x][x] - tilt;
        row[x] = stay;
        row[1 - x] = 1.0 - stay;
        return row;
    };

    DiscreteLearnOptions opts;
    opts.price_grid.resize(5);
    opts.price_grid << 0.8, 0.95, 1.1, 1.25, 1.4;
    opts.seed = 2024;
    DiscreteBelief b0;
    b0.theta = VectorXd::Constant(1, 1.05);
    DiscreteRule rule;
    rule.kind = DiscreteRule::Kind::constant_gain;
    rule.gain = 0.2;

    const Histogram m0 = histo({0.5, 0.5});
    const DiscreteTrack a = run_discrete_learning(md, m0, 0, b0, rule, 40, opts);
    const DiscreteTrack b = run_discrete_learning(md, m0, 0, b0, rule, 40, opts);
    CHECK(a.z == b.z);
    for (int t = 0; t <= 40; ++t) {
        CHECK(a.prices[t] == b.prices[t]);
        CHECK(a.thetas[t][0] == b.thetas[t][0]);
        CHECK((a.densities[t].w - b.densities[t].w).norm() == 0.0);
    }
    CHECK(a.bellman_solves == b.bellman_solves);

    opts.seed = 2025;
    const DiscreteTrack c = run_discrete_learning(md, m0, 0, b0, rule, 40, opts);
    CHECK(a.z != c.z);
}

TEST_CASE("price tree induction guards its inputs") {
    const DiscreteModel md = tiny_model(true);
    const Histogram m0 = histo({0.63, 0.37});
    auto profile = [](int, int, double) { return preferred_profile(); };

    DiscreteModel flat = md;
    flat.price_map = [](const Histogram&, int) { return 1.0; };
    CHECK_THROWS_WITH_AS(induce_price_tree(flat, profile, m0, 0),
                         doctest::Contains("collide"), ConfigError);

    DiscreteModel deep = md;
    deep.horizon = 21;
    CHECK_THROWS_AS(induce_price_tree(deep, profile, m0, 0), BudgetError);

    CHECK_THROWS_AS(induce_price_tree(md, nullptr, m0, 0), ConfigError);
    CHECK_THROWS_AS(induce_price_tree(md, profile, m0, 5), DomainError);
    CHECK_THROWS_AS(induce_price_tree(md, profile, histo({1.0}), 0), ShapeError);

    // well-formed trees expose a consistent child map and sorted grid
    const PriceTree tree = induce_price_tree(md, profile, m0, 0);
    for (int t = 0; t < md.horizon; ++t) {
        for (int node = tree.offset[t]; node < tree.offset[t + 1]; ++node) {
            for (int zn = 0; zn < 2; ++zn) {
                const int kid = tree.child(t, node, zn);
                CHECK(kid >= tree.offset[t + 1]);
                CHECK(kid < tree.offset[t + 2]);
                CHECK(tree.z_state[kid] == zn);
            }
        }
    }
    for (int i = 0; i + 1 < tree.nodes(); ++i) {
        CHECK(tree.kernel.price_grid[i] < tree.kernel.price_grid[i + 1]);
    }
}

TEST_CASE("learning run and oracle preconditions") {
    const StationaryFixture& fix = stationary_fixture();
    DiscreteLearnOptions opts;
    opts.price_grid.resize(2);
    opts.price_grid << 1.0, 1.2;
    DiscreteBelief b0;
    b0.theta = VectorXd::Constant(1, 1.1);
    DiscreteRule rule;
    rule.kind = DiscreteRule::Kind::constant_gain;
    rule.gain = 0.2;

    CHECK_THROWS_AS(run_discrete_learning(fix.model, fix.m_star, 0, b0, rule, -1, opts),
                    ConfigError);
    CHECK_THROWS_AS(run_discrete_learning(fix.model, fix.m_star, 3, b0, rule, 5, opts),
                    DomainError);

    DiscreteLearnOptions bad = opts;
    bad.cache_threshold = -0.1;
    CHECK_THROWS_AS(run_discrete_learning(fix.model, fix.m_star, 0, b0, rule, 5, bad),
                    ConfigError);
    bad = opts;
    bad.kernel_sd = -1.0;
    CHECK_THROWS_AS(run_discrete_learning(fix.model, fix.m_star, 0, b0, rule, 5, bad),
                    ConfigError);
    bad = opts;
    bad.price_grid.resize(0);
    CHECK_THROWS_AS(run_discrete_learning(fix.model, fix.m_star, 0, b0, rule, 5, bad),
                    ConfigError);
    bad = opts;
    bad.price_grid.resize(2);
    bad.price_grid << 1.2, 1.0;
    CHECK_THROWS_AS(run_discrete_learning(fix.model, fix.m_star, 0, b0, rule, 5, bad),
                    ConfigError);

    DiscreteBelief wide;
    wide.theta = VectorXd::Zero(2);  // level rule wants one parameter
    CHECK_THROWS_AS(run_discrete_learning(fix.model, fix.m_star, 0, wide, rule, 5, opts),
                    ShapeError);

    // zero steps records the start and does nothing else
    const DiscreteTrack still = run_discrete_learning(fix.model, fix.m_star, 0, b0, rule, 0, opts);
    CHECK(still.n_steps() == 0);
    CHECK(still.prices.size() == 1);
    CHECK(still.bellman_solves == 0);

    // threshold zero disables the cache outright
    DiscreteLearnOptions every = opts;
    every.cache_threshold = 0.0;
    const DiscreteTrack dense =
        run_discrete_learning(fix.model, fix.m_star, 0, b0, rule, 6, every);
    CHECK(dense.cache_disabled);
    CHECK(dense.bellman_solves == 6);

    CHECK_THROWS_AS(master_oracle(tiny_model(true), 9), ConfigError);
    DiscreteModel wide_x = tiny_model(true);
    wide_x.n_x = 4;
    CHECK_THROWS_AS(master_oracle(wide_x, 101), ConfigError);

    DiscreteRule bad_rule = rule;
    bad_rule.gain = 1.5;
    CHECK_THROWS_AS(update_discrete_belief(bad_rule, b0, 1.0), ConfigError);
    bad_rule = rule;
    bad_rule.kind = DiscreteRule::Kind::decreasing_gain;
    bad_rule.t0 = 0.0;
    CHECK_THROWS_AS(update_discrete_belief(bad_rule, b0, 1.0), ConfigError);
    DiscreteRule ls;
    ls.kind = DiscreteRule::Kind::least_squares;
    ls.ridge = 0.0;
    DiscreteBelief pair;
    pair.theta = VectorXd::Zero(2);
    CHECK_THROWS_AS(update_discrete_belief(ls, pair, 1.0), ConfigError);
}

TEST_CASE("quantile grids space pilot samples and survive ties") {
    std::vector<double> ramp;
    for (int i = 1; i <= 100; ++i) ramp.push_back(static_cast<double>(i));
    const VectorXd grid = quantile_nodes(ramp, 5);
    CHECK(grid.size() == 5);
    CHECK(grid[0] == 1.0);
    CHECK(grid[2] == doctest::Approx(50.5).epsilon(1e-14));
    CHECK(grid[4] == 100.0);
    for (int i = 0; i + 1 < 5; ++i) CHECK(grid[i] < grid[i + 1]);

    // constant samples collapse; the fallback pads an envelope
    const VectorXd flat = quantile_nodes(std::vector<double>(40, 2.5), 4);
    CHECK(flat.size() == 4);
    for (int i = 0; i + 1 < 4; ++i) CHECK(flat[i] < flat[i + 1]);
    CHECK(flat[0] < 2.5);
    CHECK(flat[3] > 2.5);

    CHECK_THROWS_AS(quantile_nodes({}, 3), ConfigError);
    CHECK_THROWS_AS(quantile_nodes({1.0, 2.0}, 1), ConfigError);
}
