#include "mfg/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace mfg {

namespace {

void check_stochastic_rows(const Eigen::MatrixXd& mat, const char* what) {
    for (int i = 0; i < mat.rows(); ++i) {
        if (mat.row(i).minCoeff() < -1e-15) {
            throw DomainError(std::string(what) + " has negative entries");
        }
        if (std::abs(mat.row(i).sum() - 1.0) > 1e-12) {
            throw DomainError(std::string(what) + " rows must sum to one");
        }
    }
}

Eigen::VectorXd x_row(const DiscreteModel& model, int x, int z, int a, double p) {
    Eigen::VectorXd row = model.x_kernel(x, z, a, p);
    if (row.size() != model.n_x) {
        throw ShapeError("individual kernel row has the wrong length");
    }
    if (row.minCoeff() < -1e-15) {
        throw DomainError("individual kernel has negative entries");
    }
    if (std::abs(row.sum() - 1.0) > 1e-12) {
        throw DomainError("individual kernel rows must sum to one");
    }
    return row;
}

// policy rows uniform over the per-state argmax sets of q; exact ties only
Eigen::MatrixXd greedy_policy(const Eigen::MatrixXd& q, Eigen::VectorXi* first) {
    const int n_x = static_cast<int>(q.rows());
    const int n_act = static_cast<int>(q.cols());
    Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(n_x, n_act);
    for (int x = 0; x < n_x; ++x) {
        const double best = q.row(x).maxCoeff();
        int count = 0;
        int lead = 0;
        for (int a = 0; a < n_act; ++a) {
            if (q(x, a) == best) {
                if (count == 0) lead = a;
                ++count;
            }
        }
        for (int a = 0; a < n_act; ++a) {
            if (q(x, a) == best) pi(x, a) = 1.0 / count;
        }
        if (first) (*first)[x] = lead;
    }
    return pi;
}

int draw_state(const Eigen::MatrixXd& kernel, int z, double u) {
    const int n = static_cast<int>(kernel.cols());
    double acc = 0.0;
    for (int zn = 0; zn < n; ++zn) {
        acc += kernel(z, zn);
        if (u < acc) return zn;
    }
    return n - 1;
}

// linear interpolation bracket on a strictly increasing grid, clamped
void bracket(const Eigen::VectorXd& grid, double p, int* j, double* f) {
    const int n = static_cast<int>(grid.size());
    if (n == 1 || p <= grid[0]) {
        *j = 0;
        *f = 0.0;
        return;
    }
    if (p >= grid[n - 1]) {
        *j = n - 2;
        *f = 1.0;
        return;
    }
    int lo = 0;
    int hi = n - 1;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        (grid[mid] <= p ? lo : hi) = mid;
    }
    *j = lo;
    *f = (p - grid[lo]) / (grid[lo + 1] - grid[lo]);
}

// largest second difference over the lattice, scaled to the linear
// interpolation error bound h^2 |f''| / 8
double lattice_curvature(const SimplexGrid& grid, const Eigen::VectorXd& per_node) {
    double worst = 0.0;
    const int N = grid.res - 1;
    auto take = [&](int a, int b, int c) {
        worst = std::max(worst, std::abs(per_node[a] - 2.0 * per_node[b] + per_node[c]));
    };
    if (grid.n_x == 2) {
        for (int k = 1; k + 1 <= N; ++k) take(k - 1, k, k + 1);
        return worst / 8.0;
    }
    if (grid.n_x == 3) {
        auto at = [&](int i, int j) { return i * (N + 1) - i * (i - 1) / 2 + j; };
        for (int i = 0; i <= N; ++i) {
            for (int j = 0; j <= N - i; ++j) {
                if (i >= 1 && i + 1 + j <= N) take(at(i - 1, j), at(i, j), at(i + 1, j));
                if (j >= 1 && i + j + 1 <= N) take(at(i, j - 1), at(i, j), at(i, j + 1));
                // transverse direction (i+1, j-1) <- (i, j) -> (i-1, j+1)
                if (i >= 1 && j >= 1 && i + j <= N) take(at(i + 1, j - 1), at(i, j), at(i - 1, j + 1));
            }
        }
        return worst / 8.0;
    }
    return 0.0;
}

std::string coarse_warning(double estimate, double target, int resolution) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "simplex resolution %d is too coarse: estimated interpolation error %.3g "
                  "exceeds the %.3g target",
                  resolution, estimate, target);
    return buf;
}

}  // namespace

void Histogram::validate() const {
    if (w.size() < 1) throw ShapeError("histogram is empty");
    if (w.minCoeff() < -1e-15) throw DomainError("histogram has negative entries");
    if (std::abs(w.sum() - 1.0) > 1e-12) throw DomainError("histogram mass must be one");
}

void DiscreteModel::validate() const {
    if (n_x < 1) throw ConfigError("need at least one individual state");
    if (n_act < 1) throw ConfigError("need at least one action");
    if (n_z < 1) throw ConfigError("need at least one aggregate state");
    if (!(discount >= 0.0 && discount <= 1.0)) {
        throw ConfigError("discount factor must lie in [0, 1]");
    }
    if (horizon < 0) throw ConfigError("horizon must be nonnegative");
    if (z_kernel.rows() != n_z || z_kernel.cols() != n_z) {
        throw ShapeError("aggregate kernel must be n_z by n_z");
    }
    check_stochastic_rows(z_kernel, "aggregate kernel");
    if (!x_kernel) throw ConfigError("model needs an individual kernel");
    if (!reward) throw ConfigError("model needs a reward");
    if (!terminal) throw ConfigError("model needs a terminal value");
    if (!price_map) throw ConfigError("model needs a price map");
}

PerceivedPriceKernel PerceivedPriceKernel::degenerate(const Eigen::VectorXd& grid, int n_z) {
    PerceivedPriceKernel out;
    out.price_grid = grid;
    out.n_z = n_z;
    out.rows.assign(static_cast<std::size_t>(n_z) * n_z,
                    Eigen::MatrixXd::Identity(grid.size(), grid.size()));
    out.validate();
    return out;
}

PerceivedPriceKernel PerceivedPriceKernel::finite(const Eigen::VectorXd& grid,
                                                  std::vector<Eigen::MatrixXd> mats, int n_z) {
    PerceivedPriceKernel out;
    out.price_grid = grid;
    out.n_z = n_z;
    if (static_cast<int>(mats.size()) == n_z) {
        out.rows.reserve(static_cast<std::size_t>(n_z) * n_z);
        for (int z = 0; z < n_z; ++z) {
            for (int zn = 0; zn < n_z; ++zn) out.rows.push_back(mats[z]);
        }
    } else if (static_cast<int>(mats.size()) == n_z * n_z) {
        out.rows = std::move(mats);
    } else {
        throw ShapeError("perceived kernel needs one matrix per current state or per state pair");
    }
    out.validate();
    return out;
}

PerceivedPriceKernel PerceivedPriceKernel::var1(const Eigen::VectorXd& grid,
                                                const Eigen::Vector2d& theta, double noise_sd,
                                                int n_z) {
    if (noise_sd < 0.0) throw ConfigError("perceived price noise must be nonnegative");
    const int n_p = static_cast<int>(grid.size());
    Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(n_p, n_p);
    for (int i = 0; i < n_p; ++i) {
        const double mean = theta[0] + theta[1] * grid[i];
        if (noise_sd == 0.0 || n_p == 1) {
            int j;
            double f;
            bracket(grid, mean, &j, &f);
            if (n_p == 1) {
                mat(i, 0) = 1.0;
            } else {
                mat(i, j) = 1.0 - f;
                mat(i, j + 1) += f;
            }
            continue;
        }
        // cdf mass between node midpoints; tails fold into the end nodes
        double prev = 0.0;
        for (int j = 0; j + 1 < n_p; ++j) {
            const double edge = 0.5 * (grid[j] + grid[j + 1]);
            const double cdf = 0.5 * std::erfc(-(edge - mean) / (noise_sd * std::sqrt(2.0)));
            mat(i, j) = cdf - prev;
            prev = cdf;
        }
        mat(i, n_p - 1) = 1.0 - prev;
    }
    PerceivedPriceKernel out;
    out.price_grid = grid;
    out.n_z = n_z;
    out.rows.assign(static_cast<std::size_t>(n_z) * n_z, mat);
    out.validate();
    return out;
}

void PerceivedPriceKernel::validate() const {
    const int n = n_p();
    if (n < 1) throw ConfigError("perceived kernel needs a price grid");
    for (int i = 0; i + 1 < n; ++i) {
        if (!(price_grid[i] < price_grid[i + 1])) {
            throw ConfigError("price grid must be strictly increasing");
        }
    }
    if (n_z < 1) throw ConfigError("perceived kernel needs at least one aggregate state");
    if (static_cast<int>(rows.size()) != n_z * n_z) {
        throw ShapeError("perceived kernel needs one matrix per aggregate state pair");
    }
    for (const Eigen::MatrixXd& mat : rows) {
        if (mat.rows() != n || mat.cols() != n) {
            throw ShapeError("perceived kernel matrices must match the price grid");
        }
        check_stochastic_rows(mat, "perceived kernel");
    }
}

BellmanTables bellman_backward(const DiscreteModel& model, const PerceivedPriceKernel& kernel) {
    model.validate();
    kernel.validate();
    if (kernel.n_z != model.n_z) {
        throw ShapeError("perceived kernel and model disagree on the aggregate count");
    }
    const int n_x = model.n_x, n_z = model.n_z, n_p = kernel.n_p(), T = model.horizon;
    const int n = n_x * n_z * n_p;

    BellmanTables out;
    out.n_x = n_x;
    out.n_z = n_z;
    out.n_p = n_p;
    out.horizon = T;
    out.price_grid = kernel.price_grid;
    out.value.assign(T + 1, Eigen::VectorXd(n));
    out.action.assign(T, Eigen::VectorXi(n));
    out.policy.assign(T, Eigen::MatrixXd::Zero(n, model.n_act));

    for (int ip = 0; ip < n_p; ++ip) {
        for (int z = 0; z < n_z; ++z) {
            for (int x = 0; x < n_x; ++x) {
                out.value[T][out.index(x, z, ip)] = model.terminal(x, z, kernel.price_grid[ip]);
            }
        }
    }

    Eigen::VectorXd cont(n_x);
    Eigen::MatrixXd q(n_x, model.n_act);
    Eigen::VectorXi lead(n_x);
    for (int t = T - 1; t >= 0; --t) {
        const Eigen::VectorXd& next = out.value[t + 1];
        for (int ip = 0; ip < n_p; ++ip) {
            for (int z = 0; z < n_z; ++z) {
                const double p = kernel.price_grid[ip];
                // continuation marginalized over (z', p'), one entry per x'
                cont.setZero();
                for (int zn = 0; zn < n_z; ++zn) {
                    const Eigen::MatrixXd& K = kernel.rows[z * n_z + zn];
                    const double pz = model.z_kernel(z, zn);
                    for (int x1 = 0; x1 < n_x; ++x1) {
                        double acc = 0.0;
                        for (int jp = 0; jp < n_p; ++jp) {
                            acc += K(ip, jp) * next[out.index(x1, zn, jp)];
                        }
                        cont[x1] += pz * acc;
                    }
                }
                for (int x = 0; x < n_x; ++x) {
                    for (int a = 0; a < model.n_act; ++a) {
                        q(x, a) = model.reward(x, z, a, p) +
                                  model.discount * x_row(model, x, z, a, p).dot(cont);
                    }
                }
                const Eigen::MatrixXd pi = greedy_policy(q, &lead);
                for (int x = 0; x < n_x; ++x) {
                    const int idx = out.index(x, z, ip);
                    out.value[t][idx] = q.row(x).maxCoeff();
                    out.action[t][idx] = lead[x];
                    out.policy[t].row(idx) = pi.row(x);
                }
            }
        }
    }
    return out;
}

Eigen::MatrixXd induced_transition(const Eigen::MatrixXd& policy, int z, double p,
                                   const DiscreteModel& model) {
    if (policy.rows() != model.n_x || policy.cols() != model.n_act) {
        throw ShapeError("policy must be n_x by n_act");
    }
    check_stochastic_rows(policy, "policy");
    if (z < 0 || z >= model.n_z) throw DomainError("aggregate state out of range");
    Eigen::MatrixXd trans = Eigen::MatrixXd::Zero(model.n_x, model.n_x);
    for (int x = 0; x < model.n_x; ++x) {
        for (int a = 0; a < model.n_act; ++a) {
            if (policy(x, a) == 0.0) continue;
            trans.row(x) += policy(x, a) * x_row(model, x, z, a, p).transpose();
        }
    }
    return trans;
}

Histogram chapman_step(const Histogram& m, const Eigen::MatrixXd& policy, int z, double p,
                       const DiscreteModel& model) {
    m.validate();
    if (m.w.size() != model.n_x) {
        throw ShapeError("histogram length must match the state count");
    }
    Histogram out;
    out.w = induced_transition(policy, z, p, model).transpose() * m.w;
    return out;
}

int SimplexGrid::node_count() const {
    if (n_x == 1) return 1;
    if (n_x == 2) return res;
    return res * (res + 1) / 2;
}

Eigen::VectorXd SimplexGrid::node(int k) const {
    Eigen::VectorXd m(n_x);
    if (n_x == 1) {
        m[0] = 1.0;
        return m;
    }
    const int N = res - 1;
    if (n_x == 2) {
        m[1] = static_cast<double>(k) / N;
        m[0] = 1.0 - m[1];
        return m;
    }
    int i = 0;
    int base = 0;
    while (k - base > N - i) {
        base += N - i + 1;
        ++i;
    }
    const int j = k - base;
    m[0] = static_cast<double>(i) / N;
    m[1] = static_cast<double>(j) / N;
    m[2] = 1.0 - m[0] - m[1];
    return m;
}

int SimplexGrid::locate(const Eigen::VectorXd& m, int* idx, double* wgt) const {
    if (m.size() != n_x) throw ShapeError("histogram length must match the simplex dimension");
    if (n_x == 1) {
        idx[0] = 0;
        wgt[0] = 1.0;
        return 1;
    }
    const int N = res - 1;
    if (n_x == 2) {
        const double u = std::clamp(m[1], 0.0, 1.0) * N;
        const int i = std::min(static_cast<int>(u), N - 1);
        const double f = u - i;
        idx[0] = i;
        idx[1] = i + 1;
        wgt[0] = 1.0 - f;
        wgt[1] = f;
        return 2;
    }
    auto at = [&](int i, int j) {
        // out-of-simplex corners only ever carry zero weight; park them on
        // the diagonal edge so the index stays valid
        j = std::min(j, N - i);
        return i * (N + 1) - i * (i - 1) / 2 + j;
    };
    const double u = std::clamp(m[0], 0.0, 1.0) * N;
    const double v = std::clamp(m[1], 0.0, 1.0) * N;
    const int i = std::min(static_cast<int>(u), N - 1);
    const int j = std::min({static_cast<int>(v), N - 1, N - 1 - i});
    const double fu = u - i;
    const double fv = v - j;
    if (fu + fv <= 1.0) {
        idx[0] = at(i, j);
        idx[1] = at(i + 1, j);
        idx[2] = at(i, j + 1);
        wgt[0] = 1.0 - fu - fv;
        wgt[1] = fu;
        wgt[2] = fv;
    } else {
        idx[0] = at(i + 1, j + 1);
        idx[1] = at(i + 1, j);
        idx[2] = at(i, j + 1);
        wgt[0] = fu + fv - 1.0;
        wgt[1] = 1.0 - fv;
        wgt[2] = 1.0 - fu;
    }
    for (int c = 0; c < 3; ++c) wgt[c] = std::max(wgt[c], 0.0);
    return 3;
}

double SimplexGrid::interpolate(const Eigen::VectorXd& per_node, const Eigen::VectorXd& m) const {
    if (per_node.size() != node_count()) {
        throw ShapeError("value slice does not match the simplex grid");
    }
    int idx[3];
    double wgt[3];
    const int cnt = locate(m, idx, wgt);
    double acc = 0.0;
    for (int c = 0; c < cnt; ++c) acc += wgt[c] * per_node[idx[c]];
    return acc;
}

MasterTables master_oracle(const DiscreteModel& model, int resolution,
                           const MasterOptions& options) {
    model.validate();
    if (model.n_x > 3) throw ConfigError("master oracle handles at most three individual states");
    if (resolution < 11) throw ConfigError("simplex resolution must be at least 11 nodes per axis");
    if (options.damping <= 0.0 || options.damping > 1.0) {
        throw ConfigError("damping must lie in (0, 1]");
    }

    MasterTables out;
    out.n_x = model.n_x;
    out.n_z = model.n_z;
    out.n_act = model.n_act;
    out.horizon = model.horizon;
    out.grid = SimplexGrid{model.n_x, resolution};
    const int nodes = out.grid.node_count();
    const int n = model.n_x * model.n_z * nodes;
    const int T = model.horizon;
    out.value.assign(T + 1, Eigen::VectorXd(n));
    out.policy.assign(T, Eigen::MatrixXd::Zero(n, model.n_act));

    for (int k = 0; k < nodes; ++k) {
        const Histogram m{out.grid.node(k)};
        for (int z = 0; z < model.n_z; ++z) {
            const double p = model.price_map(m, z);
            for (int x = 0; x < model.n_x; ++x) {
                out.value[T][out.index(x, z, k)] = model.terminal(x, z, p);
            }
        }
    }

    int idx[3];
    double wgt[3];
    Eigen::MatrixXd q(model.n_x, model.n_act);
    Eigen::MatrixXd cont(model.n_x, model.n_z);
    for (int t = T - 1; t >= 0; --t) {
        const Eigen::VectorXd& next = out.value[t + 1];
        for (int k = 0; k < nodes; ++k) {
            const Histogram m{out.grid.node(k)};
            for (int z = 0; z < model.n_z; ++z) {
                const double p = model.price_map(m, z);
                // equilibrium loop: the policy everyone uses moves the
                // histogram that prices the continuation. Best response
                // iteration first; damped averaging once it cycles.
                Eigen::MatrixXd pi =
                    Eigen::MatrixXd::Constant(model.n_x, model.n_act, 1.0 / model.n_act);
                Eigen::MatrixXd pi_prev;
                bool damped = false;
                bool settled = false;
                for (int iter = 0; iter < options.max_iterations; ++iter) {
                    const Eigen::VectorXd pushed =
                        induced_transition(pi, z, p, model).transpose() * m.w;
                    const int cnt = out.grid.locate(pushed, idx, wgt);
                    for (int zn = 0; zn < model.n_z; ++zn) {
                        for (int x1 = 0; x1 < model.n_x; ++x1) {
                            double acc = 0.0;
                            for (int c = 0; c < cnt; ++c) {
                                acc += wgt[c] * next[out.index(x1, zn, idx[c])];
                            }
                            cont(x1, zn) = acc;
                        }
                    }
                    for (int x = 0; x < model.n_x; ++x) {
                        for (int a = 0; a < model.n_act; ++a) {
                            const Eigen::VectorXd row = x_row(model, x, z, a, p);
                            double ev = 0.0;
                            for (int zn = 0; zn < model.n_z; ++zn) {
                                ev += model.z_kernel(z, zn) * row.dot(cont.col(zn));
                            }
                            q(x, a) = model.reward(x, z, a, p) + model.discount * ev;
                        }
                    }
                    const Eigen::MatrixXd br = greedy_policy(q, nullptr);
                    if ((br - pi).lpNorm<Eigen::Infinity>() <= options.tol) {
                        pi = br;
                        settled = true;
                        break;
                    }
                    if (!damped && iter >= 1 &&
                        (br - pi_prev).lpNorm<Eigen::Infinity>() <= options.tol) {
                        damped = true;  // two-cycle between best responses
                    }
                    if (!damped && iter >= 32) damped = true;
                    pi_prev = pi;
                    pi = damped ? ((1.0 - options.damping) * pi + options.damping * br).eval() : br;
                }
                if (!settled) ++out.cycle_flags;
                for (int x = 0; x < model.n_x; ++x) {
                    out.value[t][out.index(x, z, k)] = q.row(x).maxCoeff();
                    out.policy[t].row(out.index(x, z, k)) = pi.row(x);
                }
            }
        }
    }

    Eigen::VectorXd per_node(nodes);
    for (int z = 0; z < model.n_z; ++z) {
        for (int x = 0; x < model.n_x; ++x) {
            for (int k = 0; k < nodes; ++k) per_node[k] = out.value[0][out.index(x, z, k)];
            out.interp_error_estimate =
                std::max(out.interp_error_estimate, lattice_curvature(out.grid, per_node));
        }
    }
    if (options.target_accuracy > 0.0 && out.interp_error_estimate > options.target_accuracy) {
        out.warning = coarse_warning(out.interp_error_estimate, options.target_accuracy, resolution);
    }
    return out;
}

double master_value(const MasterTables& tables, int t, int x, int z, const Eigen::VectorXd& m) {
    if (t < 0 || t > tables.horizon) throw ConfigError("date out of range");
    if (x < 0 || x >= tables.n_x) throw DomainError("individual state out of range");
    if (z < 0 || z >= tables.n_z) throw DomainError("aggregate state out of range");
    int idx[3];
    double wgt[3];
    const int cnt = tables.grid.locate(m, idx, wgt);
    double acc = 0.0;
    for (int c = 0; c < cnt; ++c) acc += wgt[c] * tables.value[t][tables.index(x, z, idx[c])];
    return acc;
}

void MrpModel::validate() const {
    if (n_x < 1) throw ConfigError("need at least one individual state");
    if (n_z < 1) throw ConfigError("need at least one aggregate state");
    if (!(discount >= 0.0 && discount <= 1.0)) {
        throw ConfigError("discount factor must lie in [0, 1]");
    }
    if (horizon < 0) throw ConfigError("horizon must be nonnegative");
    if (z_kernel.rows() != n_z || z_kernel.cols() != n_z) {
        throw ShapeError("aggregate kernel must be n_z by n_z");
    }
    check_stochastic_rows(z_kernel, "aggregate kernel");
    if (static_cast<int>(x_kernel.size()) != n_z) {
        throw ShapeError("need one transition matrix per aggregate state");
    }
    for (const Eigen::MatrixXd& mat : x_kernel) {
        if (mat.rows() != n_x || mat.cols() != n_x) {
            throw ShapeError("transition matrices must be n_x by n_x");
        }
        check_stochastic_rows(mat, "transition matrix");
    }
    if (!price_map) throw ConfigError("model needs a price map");
    if (!reward) throw ConfigError("model needs a reward");
    if (!terminal) throw ConfigError("model needs a terminal value");
}

MrpTables mrp_master_oracle(const MrpModel& model, int resolution, double target_accuracy) {
    model.validate();
    if (model.n_x > 3) throw ConfigError("master oracle handles at most three individual states");
    if (resolution < 11) throw ConfigError("simplex resolution must be at least 11 nodes per axis");

    MrpTables out;
    out.n_z = model.n_z;
    out.horizon = model.horizon;
    out.grid = SimplexGrid{model.n_x, resolution};
    const int nodes = out.grid.node_count();
    const int T = model.horizon;
    out.value.assign(T + 1, Eigen::MatrixXd(model.n_z, nodes));

    for (int k = 0; k < nodes; ++k) {
        const Histogram m{out.grid.node(k)};
        for (int z = 0; z < model.n_z; ++z) {
            out.value[T](z, k) = model.terminal(model.price_map(m, z));
        }
    }
    int idx[3];
    double wgt[3];
    for (int t = T - 1; t >= 0; --t) {
        for (int k = 0; k < nodes; ++k) {
            const Histogram m{out.grid.node(k)};
            for (int z = 0; z < model.n_z; ++z) {
                const Eigen::VectorXd pushed = model.x_kernel[z].transpose() * m.w;
                const int cnt = out.grid.locate(pushed, idx, wgt);
                double ev = 0.0;
                for (int zn = 0; zn < model.n_z; ++zn) {
                    double acc = 0.0;
                    for (int c = 0; c < cnt; ++c) acc += wgt[c] * out.value[t + 1](zn, idx[c]);
                    ev += model.z_kernel(z, zn) * acc;
                }
                out.value[t](z, k) =
                    model.reward(model.price_map(m, z)) + model.discount * ev;
            }
        }
    }

    for (int z = 0; z < model.n_z; ++z) {
        out.interp_error_estimate = std::max(
            out.interp_error_estimate,
            lattice_curvature(out.grid, out.value[0].row(z).transpose()));
    }
    if (target_accuracy > 0.0 && out.interp_error_estimate > target_accuracy) {
        out.warning = coarse_warning(out.interp_error_estimate, target_accuracy, resolution);
    }
    return out;
}

double mrp_oracle_value(const MrpTables& tables, const Histogram& m0, int z0) {
    m0.validate();
    if (z0 < 0 || z0 >= tables.n_z) throw DomainError("aggregate state out of range");
    return tables.grid.interpolate(tables.value[0].row(z0).transpose(), m0.w);
}

double mrp_value_bruteforce(const MrpModel& model, const Histogram& m0, int z0) {
    model.validate();
    m0.validate();
    if (m0.w.size() != model.n_x) throw ShapeError("histogram length must match the state count");
    if (z0 < 0 || z0 >= model.n_z) throw DomainError("aggregate state out of range");
    if (model.horizon * std::log(static_cast<double>(model.n_z)) > std::log(1e6) + 1e-9) {
        throw BudgetError(
            "aggregate path enumeration needs n_z^T <= 1e6; use the Monte Carlo mode "
            "(mrp_value_monte_carlo) instead");
    }
    const int T = model.horizon;
    double total = 0.0;
    // depth-first over aggregate paths; the histogram moves deterministically
    std::function<void(int, int, const Eigen::VectorXd&, double, double, double)> walk =
        [&](int t, int z, const Eigen::VectorXd& m, double weight, double acc, double gpow) {
            const double p = model.price_map(Histogram{m}, z);
            if (t == T) {
                total += weight * (acc + gpow * model.terminal(p));
                return;
            }
            const double acc_next = acc + gpow * model.reward(p);
            const Eigen::VectorXd pushed = model.x_kernel[z].transpose() * m;
            for (int zn = 0; zn < model.n_z; ++zn) {
                const double pz = model.z_kernel(z, zn);
                if (pz == 0.0) continue;
                walk(t + 1, zn, pushed, weight * pz, acc_next, gpow * model.discount);
            }
        };
    walk(0, z0, m0.w, 1.0, 0.0, 1.0);
    return total;
}

MonteCarloValue mrp_value_monte_carlo(const MrpModel& model, const Histogram& m0, int z0,
                                      int paths, std::uint64_t seed) {
    model.validate();
    m0.validate();
    if (m0.w.size() != model.n_x) throw ShapeError("histogram length must match the state count");
    if (z0 < 0 || z0 >= model.n_z) throw DomainError("aggregate state out of range");
    if (paths < 2) throw ConfigError("Monte Carlo needs at least two paths");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double sum = 0.0;
    double sumsq = 0.0;
    for (int i = 0; i < paths; ++i) {
        int z = z0;
        Eigen::VectorXd m = m0.w;
        double acc = 0.0;
        double gpow = 1.0;
        for (int t = 0; t < model.horizon; ++t) {
            acc += gpow * model.reward(model.price_map(Histogram{m}, z));
            m = (model.x_kernel[z].transpose() * m).eval();
            z = draw_state(model.z_kernel, z, unif(rng));
            gpow *= model.discount;
        }
        acc += gpow * model.terminal(model.price_map(Histogram{m}, z));
        sum += acc;
        sumsq += acc * acc;
    }
    MonteCarloValue out;
    out.paths = paths;
    out.mean = sum / paths;
    const double var = std::max(0.0, (sumsq - paths * out.mean * out.mean) / (paths - 1));
    out.std_error = std::sqrt(var / paths);
    return out;
}

int PriceTree::child(int t, int n, int zn) const {
    const int fan = (offset[t + 2] - offset[t + 1]) / (offset[t + 1] - offset[t]);
    return offset[t + 1] + (n - offset[t]) * fan + zn;
}

PriceTree induce_price_tree(const DiscreteModel& model,
                            const std::function<Eigen::MatrixXd(int t, int z, double p)>& policy,
                            const Histogram& m0, int z0) {
    model.validate();
    m0.validate();
    if (m0.w.size() != model.n_x) throw ShapeError("histogram length must match the state count");
    if (z0 < 0 || z0 >= model.n_z) throw DomainError("aggregate state out of range");
    if (!policy) throw ConfigError("price tree needs a policy profile");
    const int T = model.horizon;
    if (T * std::log(static_cast<double>(model.n_z)) > std::log(1e6) + 1e-9) {
        throw BudgetError("measure tree enumeration needs n_z^T <= 1e6 nodes");
    }

    PriceTree tree;
    tree.offset.assign(T + 2, 0);
    int count = 1;
    for (int t = 0; t <= T; ++t) {
        tree.offset[t + 1] = tree.offset[t] + count;
        count *= model.n_z;
    }
    const int total = tree.offset[T + 1];
    tree.z_state.resize(total);
    tree.density.resize(total);
    tree.price.resize(total);
    tree.grid_index.resize(total);

    tree.z_state[0] = z0;
    tree.density[0] = m0;
    tree.price[0] = model.price_map(m0, z0);
    for (int t = 0; t < T; ++t) {
        for (int node = tree.offset[t]; node < tree.offset[t + 1]; ++node) {
            const int z = tree.z_state[node];
            const double p = tree.price[node];
            const Eigen::MatrixXd pi = policy(t, z, p);
            const Histogram pushed = chapman_step(tree.density[node], pi, z, p, model);
            for (int zn = 0; zn < model.n_z; ++zn) {
                const int kid = tree.offset[t + 1] + (node - tree.offset[t]) * model.n_z + zn;
                tree.z_state[kid] = zn;
                tree.density[kid] = pushed;
                tree.price[kid] = model.price_map(pushed, zn);
            }
        }
    }

    std::vector<int> order(total);
    for (int i = 0; i < total; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return tree.price[a] < tree.price[b]; });
    Eigen::VectorXd grid(total);
    for (int r = 0; r < total; ++r) {
        grid[r] = tree.price[order[r]];
        tree.grid_index[order[r]] = r;
    }
    for (int r = 0; r + 1 < total; ++r) {
        if (grid[r + 1] - grid[r] <= 1e-9 * std::max(1.0, std::abs(grid[r]))) {
            throw ConfigError("tree prices collide; the induced kernel needs distinct prices");
        }
    }

    // unit mass on the child's price given the aggregate move; untraveled
    // rows self-loop so every matrix stays stochastic
    std::vector<Eigen::MatrixXd> mats(
        static_cast<std::size_t>(model.n_z) * model.n_z,
        Eigen::MatrixXd::Identity(total, total));
    for (int t = 0; t < T; ++t) {
        for (int node = tree.offset[t]; node < tree.offset[t + 1]; ++node) {
            const int row = tree.grid_index[node];
            for (int zn = 0; zn < model.n_z; ++zn) {
                const int kid = tree.offset[t + 1] + (node - tree.offset[t]) * model.n_z + zn;
                Eigen::MatrixXd& mat = mats[tree.z_state[node] * model.n_z + zn];
                mat.row(row).setZero();
                mat(row, tree.grid_index[kid]) = 1.0;
            }
        }
    }
    tree.kernel = PerceivedPriceKernel::finite(grid, std::move(mats), model.n_z);
    return tree;
}

DiscreteBelief update_discrete_belief(const DiscreteRule& rule, DiscreteBelief belief,
                                      double price) {
    switch (rule.kind) {
        case DiscreteRule::Kind::constant_gain: {
            if (rule.gain < 0.0 || rule.gain > 1.0) {
                throw ConfigError("constant gain must lie in [0, 1]");
            }
            if (belief.theta.size() != 1) throw ShapeError("level rules carry a single parameter");
            belief.theta[0] += rule.gain * (price - belief.theta[0]);
            ++belief.observations;
            break;
        }
        case DiscreteRule::Kind::decreasing_gain: {
            if (rule.t0 <= 0.0) throw ConfigError("decreasing gain offset must be positive");
            if (belief.theta.size() != 1) throw ShapeError("level rules carry a single parameter");
            const double gain = std::min(1.0, 1.0 / (belief.observations + rule.t0));
            belief.theta[0] += gain * (price - belief.theta[0]);
            ++belief.observations;
            break;
        }
        case DiscreteRule::Kind::least_squares: {
            if (rule.ridge <= 0.0) throw ConfigError("ridge must be positive");
            if (belief.theta.size() != 2) {
                throw ShapeError("least squares carries intercept and slope");
            }
            if (belief.has_prev) {
                const Eigen::Vector2d phi(1.0, belief.prev_price);
                belief.moment += phi * phi.transpose();
                belief.cross += phi * price;
                const Eigen::Matrix2d lhs =
                    belief.moment + rule.ridge * Eigen::Matrix2d::Identity();
                belief.theta = lhs.ldlt().solve(belief.cross);
                ++belief.observations;
            }
            belief.prev_price = price;
            belief.has_prev = true;
            break;
        }
    }
    return belief;
}

DiscreteTrack run_discrete_learning(const DiscreteModel& model, const Histogram& m0, int z0,
                                    const DiscreteBelief& belief0, const DiscreteRule& rule,
                                    int n_steps, const DiscreteLearnOptions& options) {
    model.validate();
    m0.validate();
    if (m0.w.size() != model.n_x) throw ShapeError("histogram length must match the state count");
    if (z0 < 0 || z0 >= model.n_z) throw DomainError("aggregate state out of range");
    if (n_steps < 0) throw ConfigError("n_steps must be nonnegative");
    if (options.cache_threshold < 0.0) throw ConfigError("cache threshold must be nonnegative");
    if (options.kernel_sd < 0.0) throw ConfigError("perceived price noise must be nonnegative");
    const int n_p = static_cast<int>(options.price_grid.size());
    if (n_p < 1) throw ConfigError("the learning run needs a perceived price grid");
    for (int i = 0; i + 1 < n_p; ++i) {
        if (!(options.price_grid[i] < options.price_grid[i + 1])) {
            throw ConfigError("perceived price grid must be strictly increasing");
        }
    }
    const bool level = rule.kind != DiscreteRule::Kind::least_squares;
    if (belief0.theta.size() != (level ? 1 : 2)) {
        throw ShapeError("belief parameters do not match the rule");
    }

    DiscreteTrack track;
    track.cache_disabled = options.cache_threshold == 0.0;
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    DiscreteBelief belief = belief0;
    Histogram m = m0;
    int zc = z0;
    BellmanTables tail;
    Eigen::VectorXd theta_ref;
    int t_ref = -1;

    for (int t = 0; t <= n_steps; ++t) {
        const double p = model.price_map(m, zc);
        track.z.push_back(zc);
        track.prices.push_back(p);
        track.thetas.push_back(belief.theta);
        track.densities.push_back(m);
        if (t == n_steps) break;

        const bool refresh =
            t_ref < 0 || track.cache_disabled ||
            (belief.theta - theta_ref).lpNorm<Eigen::Infinity>() >
                options.cache_threshold * theta_ref.lpNorm<Eigen::Infinity>();
        if (refresh) {
            const Eigen::Vector2d flat(belief.theta[0], level ? 0.0 : belief.theta[1]);
            DiscreteModel window = model;
            window.horizon = n_steps - t;
            tail = bellman_backward(
                window, PerceivedPriceKernel::var1(options.price_grid, flat, options.kernel_sd,
                                                   model.n_z));
            t_ref = t;
            theta_ref = belief.theta;
            ++track.bellman_solves;
        }
        track.resolved.push_back(refresh ? 1 : 0);

        if (p < options.price_grid[0] || p > options.price_grid[n_p - 1]) ++track.p_excursions;
        int j;
        double f;
        bracket(options.price_grid, p, &j, &f);
        const Eigen::MatrixXd& slice = tail.policy[t - t_ref];
        Eigen::MatrixXd pi(model.n_x, model.n_act);
        for (int x = 0; x < model.n_x; ++x) {
            pi.row(x) = (1.0 - f) * slice.row(tail.index(x, zc, j));
            if (n_p > 1) pi.row(x) += f * slice.row(tail.index(x, zc, j + 1));
        }
        track.policies.push_back(pi);

        m = chapman_step(m, pi, zc, p, model);
        belief = update_discrete_belief(rule, belief, p);
        zc = draw_state(model.z_kernel, zc, unif(rng));
    }
    return track;
}

Eigen::VectorXd quantile_nodes(std::vector<double> samples, int n) {
    if (n < 2) throw ConfigError("need at least two grid nodes");
    if (samples.empty()) throw ConfigError("need pilot samples");
    std::sort(samples.begin(), samples.end());
    const int s = static_cast<int>(samples.size());
    Eigen::VectorXd grid(n);
    for (int i = 0; i < n; ++i) {
        const double h = static_cast<double>(i) / (n - 1) * (s - 1);
        const int lo = std::min(static_cast<int>(h), s - 2 < 0 ? 0 : s - 2);
        const double f = h - lo;
        grid[i] = s == 1 ? samples[0] : samples[lo] + f * (samples[lo + 1] - samples[lo]);
    }
    for (int i = 0; i + 1 < n; ++i) {
        if (!(grid[i] < grid[i + 1])) {
            // ties collapsed the quantiles; fall back to a padded envelope
            const double lo = samples.front();
            const double hi = samples.back();
            const double pad = 1e-3 * std::max({1.0, std::abs(lo), std::abs(hi)});
            for (int k = 0; k < n; ++k) {
                grid[k] = lo - pad + (hi - lo + 2.0 * pad) * k / (n - 1);
            }
            break;
        }
    }
    return grid;
}

}  // namespace mfg
