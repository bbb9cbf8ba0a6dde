#include "mfg/config.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <utility>

namespace mfg {

namespace {

void check(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

// Reads typed values with defaults while recording which keys were touched;
// finish() then names anything left over. Every legal key is read exactly
// once per parse, so the complement is precisely the set of typos.
class SchemaReader {
  public:
    explicit SchemaReader(const toml::Table& table) : tab_(table) {
        for (const char* s : {"model", "grid", "hjb", "stationary", "transition", "temporary",
                              "beliefs", "common_noise", "output", "run", "discrete", "mrp"}) {
            used_[s];
        }
    }

    bool has_section(const std::string& sec) const { return tab_.sections.count(sec) != 0; }

    const toml::Value* get(const std::string& sec, const std::string& key) {
        used_[sec].insert(key);
        return tab_.find(sec, key);
    }

    double number(const std::string& sec, const std::string& key, double dflt) {
        const toml::Value* v = get(sec, key);
        if (!v) return dflt;
        if (!v->is_number()) throw ConfigError(sec + "." + key + " must be a number");
        return v->number();
    }

    int integer(const std::string& sec, const std::string& key, int dflt) {
        const toml::Value* v = get(sec, key);
        if (!v) return dflt;
        if (v->kind() != toml::Value::Kind::integer) {
            throw ConfigError(sec + "." + key + " must be an integer");
        }
        const std::int64_t raw = v->integer();
        if (raw < std::numeric_limits<int>::min() || raw > std::numeric_limits<int>::max()) {
            throw ConfigError(sec + "." + key + " is out of range");
        }
        return static_cast<int>(raw);
    }

    bool boolean(const std::string& sec, const std::string& key, bool dflt) {
        const toml::Value* v = get(sec, key);
        if (!v) return dflt;
        if (v->kind() != toml::Value::Kind::boolean) {
            throw ConfigError(sec + "." + key + " must be true or false");
        }
        return v->boolean();
    }

    std::string text(const std::string& sec, const std::string& key, const std::string& dflt) {
        const toml::Value* v = get(sec, key);
        if (!v) return dflt;
        if (v->kind() != toml::Value::Kind::string) {
            throw ConfigError(sec + "." + key + " must be a string");
        }
        return v->text();
    }

    Eigen::VectorXd vector(const std::string& sec, const std::string& key) {
        const toml::Value* v = get(sec, key);
        if (!v) return Eigen::VectorXd();
        return to_vector(*v, sec + "." + key);
    }

    Eigen::MatrixXd matrix(const std::string& sec, const std::string& key, bool required) {
        const toml::Value* v = get(sec, key);
        if (!v) {
            if (required) throw ConfigError(sec + "." + key + " is required");
            return Eigen::MatrixXd();
        }
        return to_matrix(*v, sec + "." + key);
    }

    // [z][x][x'] nesting, one transition matrix per aggregate state
    std::vector<Eigen::MatrixXd> matrix_list(const std::string& sec, const std::string& key) {
        const toml::Value* v = get(sec, key);
        if (!v) throw ConfigError(sec + "." + key + " is required");
        const std::string name = sec + "." + key;
        if (v->kind() != toml::Value::Kind::array) {
            throw ConfigError(name + " must be an array of matrices");
        }
        std::vector<Eigen::MatrixXd> out;
        for (const toml::Value& item : v->array()) out.push_back(to_matrix(item, name));
        return out;
    }

    // [action][z][x][x'] nesting, flattened to index a * n_z + z
    std::vector<Eigen::MatrixXd> kernel_grid(const std::string& sec, const std::string& key,
                                             int n_act, int n_z) {
        const toml::Value* v = get(sec, key);
        if (!v) throw ConfigError(sec + "." + key + " is required");
        const std::string name = sec + "." + key;
        if (v->kind() != toml::Value::Kind::array ||
            static_cast<int>(v->array().size()) != n_act) {
            throw ConfigError(name + " must hold one entry per action");
        }
        std::vector<Eigen::MatrixXd> out;
        for (const toml::Value& per_action : v->array()) {
            if (per_action.kind() != toml::Value::Kind::array ||
                static_cast<int>(per_action.array().size()) != n_z) {
                throw ConfigError(name + " must hold one matrix per (action, z) pair");
            }
            for (const toml::Value& item : per_action.array()) {
                out.push_back(to_matrix(item, name));
            }
        }
        return out;
    }

    void finish() const {
        for (const auto& [sec, entries] : tab_.sections) {
            const auto it = used_.find(sec);
            if (it == used_.end()) {
                if (sec.empty()) {
                    // keys appearing before any section header are always typos
                    if (!entries.empty()) {
                        throw ConfigError("unknown config key " + entries.begin()->first);
                    }
                    continue;
                }
                throw ConfigError("unknown config section [" + sec + "]");
            }
            for (const auto& [key, value] : entries) {
                if (!it->second.count(key)) {
                    throw ConfigError("unknown config key " +
                                      (sec.empty() ? key : sec + "." + key));
                }
            }
        }
    }

  private:
    static Eigen::VectorXd to_vector(const toml::Value& v, const std::string& name) {
        if (v.kind() != toml::Value::Kind::array) {
            throw ConfigError(name + " must be an array of numbers");
        }
        const toml::Array& items = v.array();
        Eigen::VectorXd out(static_cast<int>(items.size()));
        for (std::size_t k = 0; k < items.size(); ++k) {
            if (!items[k].is_number()) {
                throw ConfigError(name + " must be an array of numbers");
            }
            out[static_cast<int>(k)] = items[k].number();
        }
        return out;
    }

    static Eigen::MatrixXd to_matrix(const toml::Value& v, const std::string& name) {
        if (v.kind() != toml::Value::Kind::array || v.array().empty()) {
            throw ConfigError(name + " must be a nonempty array of rows");
        }
        const toml::Array& rows = v.array();
        Eigen::MatrixXd out;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Eigen::VectorXd row = to_vector(rows[i], name);
            if (i == 0) {
                out.resize(static_cast<int>(rows.size()), row.size());
            } else if (row.size() != out.cols()) {
                throw ConfigError(name + " rows must all have the same length");
            }
            out.row(static_cast<int>(i)) = row;
        }
        return out;
    }

    const toml::Table& tab_;
    std::map<std::string, std::set<std::string>> used_;
};

void check_stochastic(const Eigen::MatrixXd& mat, const std::string& name) {
    for (int i = 0; i < mat.rows(); ++i) {
        check(mat.row(i).minCoeff() >= -1e-15, name + " has negative entries");
        check(std::abs(mat.row(i).sum() - 1.0) <= 1e-12, name + " rows must sum to one");
    }
}

PredictorKind predictor_from(const std::string& s) {
    if (s == "perfect_foresight") return PredictorKind::perfect_foresight;
    if (s == "constant_current") return PredictorKind::constant_current;
    if (s == "adaptive_level") return PredictorKind::adaptive_level;
    if (s == "parametric_plm") return PredictorKind::parametric_plm;
    throw ConfigError("beliefs.predictor must be one of perfect_foresight, constant_current, "
                      "adaptive_level, parametric_plm");
}

LearningKind learning_from(const std::string& s) {
    if (s == "decreasing_gain") return LearningKind::decreasing_gain;
    if (s == "constant_gain") return LearningKind::constant_gain;
    if (s == "recursive_least_squares") return LearningKind::recursive_least_squares;
    throw ConfigError("beliefs.rule must be one of decreasing_gain, constant_gain, "
                      "recursive_least_squares");
}

PlmSpec::Family family_from(const std::string& s) {
    if (s == "linear") return PlmSpec::Family::linear;
    if (s == "level_revert") return PlmSpec::Family::level_revert;
    if (s == "linear_noise") return PlmSpec::Family::linear_noise;
    throw ConfigError("common_noise.family must be one of linear, level_revert, linear_noise");
}

DiscreteRule::Kind discrete_rule_from(const std::string& s) {
    if (s == "constant_gain") return DiscreteRule::Kind::constant_gain;
    if (s == "decreasing_gain") return DiscreteRule::Kind::decreasing_gain;
    if (s == "least_squares") return DiscreteRule::Kind::least_squares;
    throw ConfigError("discrete.rule must be one of constant_gain, decreasing_gain, "
                      "least_squares");
}

void read_model(SchemaReader& r, ModelParams& m) {
    m.rho = r.number("model", "rho", m.rho);
    check(m.rho > 0.0, "model.rho must be positive");
    m.crra = r.number("model", "crra", m.crra);
    check(m.crra > 0.0, "model.crra must be positive");
    m.nu = r.number("model", "nu", m.nu);
    check(m.nu >= 0.0, "model.nu must be nonnegative");
    m.beta = r.number("model", "beta", m.beta);
    check(m.beta >= 0.0, "model.beta must be nonnegative");
    m.dt = r.number("model", "dt", m.dt);
    check(m.dt > 0.0, "model.dt must be positive");
    m.horizon = r.number("model", "horizon", m.horizon);
    check(m.horizon > 0.0, "model.horizon must be positive");
    m.production_scale = r.number("model", "production_scale", m.production_scale);
    check(m.production_scale > 0.0, "model.production_scale must be positive");

    const std::string income = r.text("model", "income", "two_state");
    TwoStateIncome ts;
    ts.y_lo = r.number("model", "y_lo", ts.y_lo);
    ts.y_hi = r.number("model", "y_hi", ts.y_hi);
    ts.rate_up = r.number("model", "rate_up", ts.rate_up);
    ts.rate_down = r.number("model", "rate_down", ts.rate_down);
    OuIncome ou;
    ou.mean_reversion = r.number("model", "mean_reversion", ou.mean_reversion);
    ou.long_run_mean = r.number("model", "long_run_mean", ou.long_run_mean);
    ou.diffusion = r.number("model", "income_diffusion", ou.diffusion);
    ou.y_min = r.number("model", "y_min", ou.y_min);
    ou.y_max = r.number("model", "y_max", ou.y_max);
    ou.n_y = r.integer("model", "n_y", ou.n_y);
    if (income == "two_state") {
        check(ts.y_lo > 0.0, "model.y_lo must be positive");
        check(ts.y_hi > ts.y_lo, "model.y_hi must exceed model.y_lo");
        check(ts.rate_up > 0.0, "model.rate_up must be positive");
        check(ts.rate_down > 0.0, "model.rate_down must be positive");
        m.income = ts;
    } else if (income == "ou") {
        check(ou.mean_reversion > 0.0, "model.mean_reversion must be positive");
        check(ou.diffusion > 0.0, "model.income_diffusion must be positive");
        check(ou.y_min > 0.0, "model.y_min must be positive");
        check(ou.y_max > ou.y_min, "model.y_max must exceed model.y_min");
        check(ou.n_y >= 3, "model.n_y needs at least 3 nodes");
        check(ou.long_run_mean > ou.y_min && ou.long_run_mean < ou.y_max,
              "model.long_run_mean must lie between model.y_min and model.y_max");
        m.income = ou;
    } else {
        throw ConfigError("model.income must be \"two_state\" or \"ou\"");
    }
    m.validate();
}

void read_discrete(SchemaReader& r, DiscreteConfig& d) {
    d.present = true;
    DiscreteModel& md = d.model;
    md.n_x = r.integer("discrete", "n_x", 0);
    check(md.n_x >= 1, "discrete.n_x must be at least 1");
    md.n_act = r.integer("discrete", "n_act", 0);
    check(md.n_act >= 1, "discrete.n_act must be at least 1");
    md.n_z = r.integer("discrete", "n_z", 0);
    check(md.n_z >= 1, "discrete.n_z must be at least 1");
    md.discount = r.number("discrete", "discount", 0.9);
    check(md.discount >= 0.0 && md.discount <= 1.0, "discrete.discount must lie in [0, 1]");
    md.horizon = r.integer("discrete", "horizon", 10);
    check(md.horizon >= 0, "discrete.horizon must be nonnegative");

    md.z_kernel = r.matrix("discrete", "z_kernel", true);
    check(md.z_kernel.rows() == md.n_z && md.z_kernel.cols() == md.n_z,
          "discrete.z_kernel must be n_z by n_z");
    check_stochastic(md.z_kernel, "discrete.z_kernel");

    const std::vector<Eigen::MatrixXd> mats =
        r.kernel_grid("discrete", "x_kernel", md.n_act, md.n_z);
    for (const Eigen::MatrixXd& k : mats) {
        check(k.rows() == md.n_x && k.cols() == md.n_x, "discrete.x_kernel must be n_x by n_x");
        check_stochastic(k, "discrete.x_kernel");
    }

    d.reward_base = r.matrix("discrete", "reward_base", true);
    check(d.reward_base.rows() == md.n_x && d.reward_base.cols() == md.n_act,
          "discrete.reward_base must be n_x by n_act");
    d.reward_price = r.matrix("discrete", "reward_price", false);
    if (d.reward_price.size() == 0) d.reward_price = Eigen::MatrixXd::Zero(md.n_x, md.n_act);
    check(d.reward_price.rows() == md.n_x && d.reward_price.cols() == md.n_act,
          "discrete.reward_price must be n_x by n_act");

    d.terminal_base = r.vector("discrete", "terminal_base");
    if (d.terminal_base.size() == 0) d.terminal_base = Eigen::VectorXd::Zero(md.n_x);
    check(d.terminal_base.size() == md.n_x, "discrete.terminal_base must have n_x entries");
    d.terminal_price = r.vector("discrete", "terminal_price");
    if (d.terminal_price.size() == 0) d.terminal_price = Eigen::VectorXd::Zero(md.n_x);
    check(d.terminal_price.size() == md.n_x, "discrete.terminal_price must have n_x entries");

    d.price_intercept = r.number("discrete", "price_intercept", 1.0);
    d.price_weights = r.vector("discrete", "price_weights");
    if (d.price_weights.size() == 0) d.price_weights = Eigen::VectorXd::Zero(md.n_x);
    check(d.price_weights.size() == md.n_x, "discrete.price_weights must have n_x entries");
    d.price_z_factor = r.vector("discrete", "price_z_factor");
    if (d.price_z_factor.size() == 0) d.price_z_factor = Eigen::VectorXd::Ones(md.n_z);
    check(d.price_z_factor.size() == md.n_z, "discrete.price_z_factor must have n_z entries");

    const Eigen::VectorXd m0 = r.vector("discrete", "m0");
    d.m0.w = m0.size() == 0 ? Eigen::VectorXd::Constant(md.n_x, 1.0 / md.n_x) : m0;
    check(d.m0.w.size() == md.n_x, "discrete.m0 must have n_x entries");
    check(d.m0.w.minCoeff() >= 0.0, "discrete.m0 has negative entries");
    check(std::abs(d.m0.w.sum() - 1.0) <= 1e-12, "discrete.m0 must sum to one");
    d.z0 = r.integer("discrete", "z0", 0);
    check(d.z0 >= 0 && d.z0 < md.n_z, "discrete.z0 must index an aggregate state");

    d.n_steps = r.integer("discrete", "n_steps", d.n_steps);
    check(d.n_steps >= 0, "discrete.n_steps must be nonnegative");
    d.rule.kind = discrete_rule_from(r.text("discrete", "rule", "constant_gain"));
    d.rule.gain = r.number("discrete", "gain", d.rule.gain);
    check(d.rule.gain >= 0.0 && d.rule.gain <= 1.0, "discrete.gain must lie in [0, 1]");
    d.rule.t0 = r.number("discrete", "t0", d.rule.t0);
    check(d.rule.t0 > 0.0, "discrete.t0 must be positive");
    d.rule.ridge = r.number("discrete", "ridge", d.rule.ridge);
    check(d.rule.ridge > 0.0, "discrete.ridge must be positive");
    d.theta0 = r.vector("discrete", "theta0");
    d.price_grid = r.vector("discrete", "price_grid");
    for (int i = 0; i + 1 < d.price_grid.size(); ++i) {
        check(d.price_grid[i] < d.price_grid[i + 1],
              "discrete.price_grid must be strictly increasing");
    }
    d.kernel_sd = r.number("discrete", "kernel_sd", d.kernel_sd);
    check(d.kernel_sd >= 0.0, "discrete.kernel_sd must be nonnegative");
    d.cache_threshold = r.number("discrete", "cache_threshold", d.cache_threshold);
    check(d.cache_threshold >= 0.0, "discrete.cache_threshold must be nonnegative");
    d.resolution = r.integer("discrete", "resolution", d.resolution);
    check(d.resolution >= 11, "discrete.resolution must be at least 11");
    d.target_accuracy = r.number("discrete", "target_accuracy", d.target_accuracy);
    check(d.target_accuracy >= 0.0, "discrete.target_accuracy must be nonnegative");

    const int n_z = md.n_z;
    md.x_kernel = [mats, n_z](int x, int z, int a, double) {
        return Eigen::VectorXd(mats[a * n_z + z].row(x).transpose());
    };
    const Eigen::MatrixXd rb = d.reward_base, rp = d.reward_price;
    md.reward = [rb, rp](int x, int, int a, double p) { return rb(x, a) + rp(x, a) * p; };
    const Eigen::VectorXd tb = d.terminal_base, tp = d.terminal_price;
    md.terminal = [tb, tp](int x, int, double p) { return tb[x] + tp[x] * p; };
    const double intercept = d.price_intercept;
    const Eigen::VectorXd pw = d.price_weights, zf = d.price_z_factor;
    md.price_map = [intercept, pw, zf](const Histogram& m, int z) {
        return (intercept + pw.dot(m.w)) * zf[z];
    };
    md.validate();
}

void read_mrp(SchemaReader& r, MrpConfig& c) {
    c.present = true;
    MrpModel& md = c.model;
    md.n_x = r.integer("mrp", "n_x", 0);
    check(md.n_x >= 1, "mrp.n_x must be at least 1");
    md.n_z = r.integer("mrp", "n_z", 0);
    check(md.n_z >= 1, "mrp.n_z must be at least 1");
    md.discount = r.number("mrp", "discount", 0.9);
    check(md.discount >= 0.0 && md.discount <= 1.0, "mrp.discount must lie in [0, 1]");
    md.horizon = r.integer("mrp", "horizon", 4);
    check(md.horizon >= 0, "mrp.horizon must be nonnegative");

    md.z_kernel = r.matrix("mrp", "z_kernel", true);
    check(md.z_kernel.rows() == md.n_z && md.z_kernel.cols() == md.n_z,
          "mrp.z_kernel must be n_z by n_z");
    check_stochastic(md.z_kernel, "mrp.z_kernel");
    md.x_kernel = r.matrix_list("mrp", "x_kernel");
    check(static_cast<int>(md.x_kernel.size()) == md.n_z,
          "mrp.x_kernel must hold one matrix per aggregate state");
    for (const Eigen::MatrixXd& k : md.x_kernel) {
        check(k.rows() == md.n_x && k.cols() == md.n_x, "mrp.x_kernel must be n_x by n_x");
        check_stochastic(k, "mrp.x_kernel");
    }

    const Eigen::VectorXd reward = r.vector("mrp", "reward");
    check(reward.size() == 2, "mrp.reward must be [intercept, price_slope]");
    const Eigen::VectorXd terminal = r.vector("mrp", "terminal");
    check(terminal.size() == 2, "mrp.terminal must be [intercept, price_slope]");
    const double intercept = r.number("mrp", "price_intercept", 1.0);
    Eigen::VectorXd pw = r.vector("mrp", "price_weights");
    if (pw.size() == 0) pw = Eigen::VectorXd::Zero(md.n_x);
    check(pw.size() == md.n_x, "mrp.price_weights must have n_x entries");
    Eigen::VectorXd zf = r.vector("mrp", "price_z_factor");
    if (zf.size() == 0) zf = Eigen::VectorXd::Ones(md.n_z);
    check(zf.size() == md.n_z, "mrp.price_z_factor must have n_z entries");

    const Eigen::VectorXd m0 = r.vector("mrp", "m0");
    c.m0.w = m0.size() == 0 ? Eigen::VectorXd::Constant(md.n_x, 1.0 / md.n_x) : m0;
    check(c.m0.w.size() == md.n_x, "mrp.m0 must have n_x entries");
    check(c.m0.w.minCoeff() >= 0.0, "mrp.m0 has negative entries");
    check(std::abs(c.m0.w.sum() - 1.0) <= 1e-12, "mrp.m0 must sum to one");
    c.z0 = r.integer("mrp", "z0", 0);
    check(c.z0 >= 0 && c.z0 < md.n_z, "mrp.z0 must index an aggregate state");
    c.resolution = r.integer("mrp", "resolution", c.resolution);
    check(c.resolution >= 11, "mrp.resolution must be at least 11");
    c.paths = r.integer("mrp", "paths", c.paths);
    check(c.paths >= 2, "mrp.paths must be at least 2");

    md.reward = [r0 = reward[0], r1 = reward[1]](double p) { return r0 + r1 * p; };
    md.terminal = [v0 = terminal[0], v1 = terminal[1]](double p) { return v0 + v1 * p; };
    md.price_map = [intercept, pw, zf](const Histogram& m, int z) {
        return (intercept + pw.dot(m.w)) * zf[z];
    };
    md.validate();
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return std::string(buf);
}

RunConfig config_from_table(const toml::Table& table) {
    SchemaReader r(table);
    RunConfig cfg;

    read_model(r, cfg.model);

    cfg.grid.n_a = r.integer("grid", "n_a", cfg.grid.n_a);
    check(cfg.grid.n_a >= 3, "grid.n_a needs at least 3 nodes");
    cfg.grid.a_max = r.number("grid", "a_max", cfg.grid.a_max);
    check(cfg.grid.a_max > 0.0, "grid.a_max must be positive");

    cfg.hjb.pseudo_dt = r.number("hjb", "pseudo_dt", cfg.hjb.pseudo_dt);
    check(cfg.hjb.pseudo_dt > 0.0, "hjb.pseudo_dt must be positive");
    cfg.hjb.max_iter = r.integer("hjb", "max_iter", cfg.hjb.max_iter);
    check(cfg.hjb.max_iter >= 1, "hjb.max_iter must be at least 1");
    cfg.hjb.tol = r.number("hjb", "tol", cfg.hjb.tol);
    check(cfg.hjb.tol > 0.0, "hjb.tol must be positive");
    cfg.hjb.residual_tol = r.number("hjb", "residual_tol", cfg.hjb.residual_tol);
    check(cfg.hjb.residual_tol > 0.0, "hjb.residual_tol must be positive");

    EquilibriumOptions& st = cfg.stationary.options;
    st.z = r.number("stationary", "z", st.z);
    st.k_rel_tol = r.number("stationary", "k_rel_tol", st.k_rel_tol);
    check(st.k_rel_tol > 0.0, "stationary.k_rel_tol must be positive");
    st.max_iter = r.integer("stationary", "max_iter", st.max_iter);
    check(st.max_iter >= 1, "stationary.max_iter must be at least 1");
    st.hjb = cfg.hjb;

    TransitionConfig& tr = cfg.transition;
    tr.n_steps = r.integer("transition", "n_steps", tr.n_steps);
    check(tr.n_steps >= 1, "transition.n_steps must be at least 1");
    tr.options.omega = r.number("transition", "omega", tr.options.omega);
    check(tr.options.omega > 0.0 && tr.options.omega <= 1.0,
          "transition.omega must lie in (0, 1]");
    tr.options.tol = r.number("transition", "tol", tr.options.tol);
    check(tr.options.tol > 0.0, "transition.tol must be positive");
    tr.options.max_iter = r.integer("transition", "max_iter", tr.options.max_iter);
    check(tr.options.max_iter >= 1, "transition.max_iter must be at least 1");
    tr.options.z = r.number("transition", "z", tr.options.z);
    tr.m0 = r.text("transition", "m0", tr.m0);
    check(tr.m0 == "distorted" || tr.m0 == "uniform" || tr.m0 == "point",
          "transition.m0 must be one of distorted, uniform, point");
    tr.distortion = r.number("transition", "distortion", tr.distortion);
    check(tr.distortion > 0.0, "transition.distortion must be positive");
    tr.m0_wealth = r.number("transition", "m0_wealth", tr.m0_wealth);
    check(tr.m0_wealth >= 0.0, "transition.m0_wealth must be nonnegative");
    tr.m0_income = r.number("transition", "m0_income", tr.m0_income);
    check(tr.m0_income > 0.0, "transition.m0_income must be positive");

    BeliefsConfig& be = cfg.beliefs;
    be.predictor = predictor_from(r.text("beliefs", "predictor", "adaptive_level"));
    be.rule.kind = learning_from(r.text("beliefs", "rule", "constant_gain"));
    be.rule.gain = r.number("beliefs", "gain", be.rule.gain);
    check(be.rule.gain >= 0.0, "beliefs.gain must be nonnegative");
    be.rule.t0 = r.number("beliefs", "t0", be.rule.t0);
    check(be.rule.t0 > 0.0, "beliefs.t0 must be positive");
    be.rule.ridge = r.number("beliefs", "ridge", be.rule.ridge);
    check(be.rule.ridge > 0.0, "beliefs.ridge must be positive");
    be.theta0 = r.vector("beliefs", "theta0");
    const double box_lo = r.number("beliefs", "box_lo", be.box.lo[0]);
    const double box_hi = r.number("beliefs", "box_hi", be.box.hi[0]);
    check(box_lo >= 0.0, "beliefs.box_lo must be nonnegative");
    check(box_hi > box_lo, "beliefs.box_hi must exceed beliefs.box_lo");
    be.box.lo.setConstant(box_lo);
    be.box.hi.setConstant(box_hi);

    TemporaryConfig& te = cfg.temporary;
    te.n_steps = r.integer("temporary", "n_steps", te.n_steps);
    check(te.n_steps >= 0, "temporary.n_steps must be nonnegative");
    te.options.inner_dt_multiple =
        r.integer("temporary", "inner_dt_multiple", te.options.inner_dt_multiple);
    check(te.options.inner_dt_multiple >= 1, "temporary.inner_dt_multiple must be at least 1");
    te.options.enforce_horizon =
        r.boolean("temporary", "enforce_horizon", te.options.enforce_horizon);
    te.options.z = r.number("temporary", "z", te.options.z);
    te.options.box = be.box;

    CommonNoiseConfig& cn = cfg.common_noise;
    cn.n_steps = r.integer("common_noise", "n_steps", cn.n_steps);
    check(cn.n_steps >= 1, "common_noise.n_steps must be at least 1");
    cn.z0 = r.number("common_noise", "z0", cn.z0);
    cn.n_z = r.integer("common_noise", "n_z", cn.n_z);
    check(cn.n_z >= 2, "common_noise.n_z needs at least 2 nodes");
    cn.z_half_width = r.number("common_noise", "z_half_width", cn.z_half_width);
    check(cn.z_half_width > 0.0, "common_noise.z_half_width must be positive");
    cn.n_p = r.integer("common_noise", "n_p", cn.n_p);
    check(cn.n_p >= 2, "common_noise.n_p needs at least 2 nodes");
    cn.p_half_width = r.number("common_noise", "p_half_width", cn.p_half_width);
    check(cn.p_half_width > 0.0, "common_noise.p_half_width must be positive");
    cn.family = family_from(r.text("common_noise", "family", "level_revert"));
    cn.revert_rate = r.number("common_noise", "revert_rate", cn.revert_rate);
    check(cn.revert_rate >= 0.0, "common_noise.revert_rate must be nonnegative");
    cn.sigma_p = r.number("common_noise", "sigma_p", cn.sigma_p);
    check(cn.sigma_p >= 0.0, "common_noise.sigma_p must be nonnegative");
    cn.theta_distortion = r.number("common_noise", "theta_distortion", cn.theta_distortion);
    cn.theta0 = r.vector("common_noise", "theta0");
    cn.options.cache_threshold =
        r.number("common_noise", "cache_threshold", cn.options.cache_threshold);
    check(cn.options.cache_threshold >= 0.0,
          "common_noise.cache_threshold must be nonnegative");
    cn.options.enforce_horizon =
        r.boolean("common_noise", "enforce_horizon", cn.options.enforce_horizon);

    cfg.density_every = r.integer("output", "density_every", cfg.density_every);
    check(cfg.density_every >= 0, "output.density_every must be nonnegative");

    const int seed = r.integer("run", "seed", 0);
    check(seed >= 0, "run.seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.label = r.text("run", "label", cfg.label);
    check(!cfg.label.empty(), "run.label must not be empty");

    if (r.has_section("discrete")) read_discrete(r, cfg.discrete);
    if (r.has_section("mrp")) read_mrp(r, cfg.mrp);

    r.finish();

    cfg.canonical = toml::serialize(table);
    cfg.hash = hash_hex(cfg.canonical);
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    if (path.empty()) return config_from_table(toml::Table{});
    return config_from_table(toml::parse_file(path));
}

}  // namespace mfg
