#include "mfg/beliefs.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace mfg {

namespace {

int tracked_dims_level(const Eigen::VectorXd& theta) {
    if (theta.size() != 1 && theta.size() != 2)
        throw ShapeError("level beliefs need 1 or 2 parameters");
    return static_cast<int>(theta.size());
}

// Regressor width per tracked price: (1, p) or (1, p, z).
struct PlmLayout {
    int dims = 1;
    int width = 2;
    bool with_z = false;
};

PlmLayout plm_layout(const Eigen::VectorXd& theta) {
    switch (theta.size()) {
        case 2: return {1, 2, false};
        case 3: return {1, 3, true};
        case 4: return {2, 2, false};
        default: throw ShapeError("parametric beliefs need 2, 3 or 4 parameters");
    }
}

Eigen::Vector2d clip_to_box(const Eigen::Vector2d& p, const PriceBox& box, bool& clipped) {
    Eigen::Vector2d q = p.cwiseMax(box.lo).cwiseMin(box.hi);
    if ((q - p).cwiseAbs().maxCoeff() > 0.0) clipped = true;
    return q;
}

}  // namespace

BeliefState BeliefState::levels(const Eigen::VectorXd& theta0) {
    BeliefState b;
    b.theta = theta0;
    tracked_dims_level(b.theta);
    return b;
}

BeliefState BeliefState::plm(const Eigen::VectorXd& theta0) {
    BeliefState b;
    b.theta = theta0;
    const PlmLayout lay = plm_layout(b.theta);
    b.moment = Eigen::MatrixXd::Zero(lay.dims * lay.width, lay.dims * lay.width);
    b.cross = Eigen::VectorXd::Zero(lay.dims * lay.width);
    b.identified = false;
    return b;
}

Eigen::Vector2d plm_drift(const PriceVector& p, const Eigen::VectorXd& theta) {
    if (theta.size() == 2) return {theta[0] + theta[1] * p.interest, 0.0};
    if (theta.size() == 4)
        return {theta[0] + theta[1] * p.interest, theta[2] + theta[3] * p.wage};
    throw ShapeError("linear price law needs 2 or 4 parameters");
}

Eigen::Vector2d plm_drift_noise(const PriceVector& p, double z, const Eigen::VectorXd& theta) {
    if (theta.size() != 3) throw ShapeError("noise price law needs 3 parameters");
    return {theta[0] + theta[1] * p.interest + theta[2] * z, 0.0};
}

Eigen::Vector2d PlmSpec::drift(const PriceVector& p, double z) const {
    switch (family) {
        case Family::linear: return plm_drift(p, theta);
        case Family::linear_noise: return plm_drift_noise(p, z, theta);
        case Family::level_revert: {
            const int d = tracked_dims_level(theta);
            Eigen::Vector2d out = Eigen::Vector2d::Zero();
            out[0] = revert_rate * (theta[0] - p.interest);
            if (d == 2) out[1] = revert_rate * (theta[1] - p.wage);
            return out;
        }
    }
    throw ShapeError("unknown price law family");
}

PricePath predict_price_path(const Predictor& predictor, const BeliefState& belief,
                             const PriceVector& p_now, int step_index, int n_steps, double dt,
                             const PriceBox& box) {
    if (n_steps < 1) throw ConfigError("prediction needs at least one step");
    if (dt <= 0.0) throw ConfigError("dt must be positive");
    PricePath out;
    out.values.resize(n_steps);
    out.values[0] = p_now;

    switch (predictor.kind) {
        case PredictorKind::constant_current: {
            for (int k = 1; k < n_steps; ++k) out.values[k] = p_now;
            break;
        }
        case PredictorKind::adaptive_level: {
            const int d = tracked_dims_level(belief.theta);
            PriceVector flat = p_now;
            flat.interest = belief.theta[0];
            if (d == 2) flat.wage = belief.theta[1];
            for (int k = 1; k < n_steps; ++k) out.values[k] = flat;
            break;
        }
        case PredictorKind::perfect_foresight: {
            if (predictor.external_path.empty())
                throw ConfigError("perfect-foresight predictor needs an external path");
            const int last = static_cast<int>(predictor.external_path.size()) - 1;
            for (int k = 1; k < n_steps; ++k)
                out.values[k] = predictor.external_path[std::min(step_index + k, last)];
            break;
        }
        case PredictorKind::parametric_plm: {
            if (belief.theta.size() != 2 && belief.theta.size() != 4)
                throw ShapeError("path integration needs the linear 2- or 4-parameter law");
            auto f = [&](const Eigen::Vector2d& p) {
                return plm_drift(PriceVector::from_vec(p), belief.theta);
            };
            Eigen::Vector2d p = p_now.vec();
            for (int k = 1; k < n_steps; ++k) {
                const Eigen::Vector2d k1 = f(p);
                const Eigen::Vector2d k2 = f(p + 0.5 * dt * k1);
                const Eigen::Vector2d k3 = f(p + 0.5 * dt * k2);
                const Eigen::Vector2d k4 = f(p + dt * k3);
                p += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                p = clip_to_box(p, box, out.clipped);
                out.values[k] = PriceVector::from_vec(p);
            }
            break;
        }
    }
    return out;
}

BeliefState update_beliefs(const LearningRule& rule, const BeliefState& belief,
                           const PriceVector& p, double dt, double z) {
    if (dt <= 0.0) throw ConfigError("dt must be positive");
    BeliefState next = belief;

    switch (rule.kind) {
        case LearningKind::decreasing_gain:
        case LearningKind::constant_gain: {
            const int d = tracked_dims_level(belief.theta);
            const double raw = rule.kind == LearningKind::constant_gain
                                   ? rule.gain * dt
                                   : dt / (belief.clock + rule.t0);
            const double g = std::min(1.0, raw);
            next.theta[0] += g * (p.interest - belief.theta[0]);
            if (d == 2) next.theta[1] += g * (p.wage - belief.theta[1]);
            break;
        }
        case LearningKind::recursive_least_squares: {
            const PlmLayout lay = plm_layout(belief.theta);
            if (belief.moment.rows() != lay.dims * lay.width)
                throw ShapeError("belief moment matrix does not match the parameter layout");
            if (!belief.has_last) break;  // need one observation to difference
            for (int k = 0; k < lay.dims; ++k) {
                const double p_prev = belief.last_price[k];
                const double p_cur = (k == 0) ? p.interest : p.wage;
                const double target = (p_cur - p_prev) / dt;
                Eigen::VectorXd phi(lay.width);
                phi[0] = 1.0;
                phi[1] = p_prev;
                if (lay.with_z) phi[2] = belief.last_z;
                const int off = k * lay.width;
                next.moment.block(off, off, lay.width, lay.width) += dt * phi * phi.transpose();
                next.cross.segment(off, lay.width) += dt * phi * target;
            }
            // regularized solve per block; beliefs stay at the prior until the
            // moment matrix has full rank
            bool all_ranked = true;
            Eigen::VectorXd theta_new = next.theta;
            for (int k = 0; k < lay.dims; ++k) {
                const int off = k * lay.width;
                Eigen::MatrixXd mk = next.moment.block(off, off, lay.width, lay.width);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mk);
                const double lead = es.eigenvalues().maxCoeff();
                if (es.eigenvalues().minCoeff() <= 1e-10 * std::max(1.0, lead)) {
                    all_ranked = false;
                    continue;
                }
                mk.diagonal().array() += rule.ridge * (1.0 + mk.trace());
                theta_new.segment(off, lay.width) =
                    mk.ldlt().solve(next.cross.segment(off, lay.width));
            }
            if (all_ranked) {
                next.theta = theta_new;
                next.identified = true;
            }
            break;
        }
    }

    next.last_price = p.vec();
    next.last_z = z;
    next.has_last = true;
    next.clock = belief.clock + dt;
    return next;
}

}  // namespace mfg
