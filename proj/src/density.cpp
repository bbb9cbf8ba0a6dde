#include "mfg/density.hpp"

#include <Eigen/SparseLU>
#include <cmath>

namespace mfg {

namespace {

// Zero out roundoff-scale negatives without changing the total.
void scrub_negatives(Eigen::VectorXd& m, double tol) {
    double moved = 0.0;
    for (int i = 0; i < m.size(); ++i) {
        if (m[i] < 0.0) {
            if (m[i] < -tol) throw NumericalError("density step produced a negative entry");
            moved += m[i];
            m[i] = 0.0;
        }
    }
    if (moved != 0.0) {
        int top = 0;
        m.maxCoeff(&top);
        m[top] += moved;
    }
}

}  // namespace

Density fp_forward_step(const Density& m, const TransitionOperator& op, double dt) {
    if (op.rows() != op.cols() || op.rows() != m.mass.size())
        throw ShapeError("operator shape does not match density");
    if (dt <= 0.0) throw ConfigError("dt must be positive");

    TransitionOperator lhs = TransitionOperator(op.transpose()) * (-dt);
    for (int i = 0; i < lhs.rows(); ++i) lhs.coeffRef(i, i) += 1.0;
    lhs.makeCompressed();

    Eigen::SparseLU<TransitionOperator> solver;
    solver.compute(lhs);
    if (solver.info() != Eigen::Success)
        throw NumericalError("forward step factorization failed");
    Density out;
    out.mass = solver.solve(m.mass);
    if (solver.info() != Eigen::Success) throw NumericalError("forward step solve failed");
    scrub_negatives(out.mass, 1e-12);
    return out;
}

Density stationary_density(const TransitionOperator& op) {
    const int n = static_cast<int>(op.rows());
    if (op.rows() != op.cols()) throw ShapeError("operator must be square");

    // A^T m = 0 rows 1..n-1, row 0 replaced by the normalization sum(m) = 1.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(op.nonZeros() + n);
    for (int i = 0; i < n; ++i) trip.emplace_back(0, i, 1.0);
    for (int k = 0; k < op.outerSize(); ++k)
        for (TransitionOperator::InnerIterator it(op, k); it; ++it)
            if (it.col() != 0) trip.emplace_back(static_cast<int>(it.col()),
                                                 static_cast<int>(it.row()), it.value());
    TransitionOperator lhs(n, n);
    lhs.setFromTriplets(trip.begin(), trip.end());
    lhs.makeCompressed();

    Eigen::SparseLU<TransitionOperator> solver;
    solver.compute(lhs);
    if (solver.info() != Eigen::Success)
        throw NonUniquenessError("stationary distribution is not unique (reducible chain)");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[0] = 1.0;
    Density out;
    out.mass = solver.solve(rhs);
    if (solver.info() != Eigen::Success)
        throw NonUniquenessError("stationary distribution solve failed");
    if (out.mass.minCoeff() < -1e-9)
        throw NonUniquenessError("stationary solve produced negative mass (reducible chain)");
    scrub_negatives(out.mass, 1e-9);
    return out;
}

}  // namespace mfg
