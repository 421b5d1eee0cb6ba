#include <doctest.h>

#include "support/oracles.hpp"
#include "tpc/errors.hpp"
#include "tpc/socp.hpp"

using namespace tpc;

namespace {

/// Random PSD objective with a strictly positive diagonal shift.
QuadraticObjective random_objective(int n, std::uint64_t seed) {
    tpc::GaussianSource g(seed);
    Eigen::MatrixXd R = oracles::random_matrix(n, n, g);
    QuadraticObjective obj;
    obj.P = R.transpose() * R + 0.5 * Eigen::MatrixXd::Identity(n, n);
    obj.c.resize(n);
    for (int i = 0; i < n; ++i) obj.c(i) = g.next();
    return obj;
}

double feasibility_violation(const Eigen::VectorXd& x,
                             const ConstraintSet& cons) {
    double v = 0.0;
    if (cons.box) {
        v = std::max(v, (cons.box->lower - x).maxCoeff());
        v = std::max(v, (x - cons.box->upper).maxCoeff());
    }
    for (const auto& soc : cons.socs)
        v = std::max(v, (soc.A * x + soc.b).norm() - soc.radius);
    return v;
}

}  // namespace

TEST_CASE("unconstrained solve matches the normal equations") {
    QuadraticObjective obj = random_objective(12, 1);
    Eigen::VectorXd x = solve_unconstrained(obj);
    Eigen::VectorXd expect = obj.P.ldlt().solve(-obj.c);
    CHECK((x - expect).cwiseAbs().maxCoeff() < 1e-10);

    ConstraintSet none;
    SolveReport rep = solve_socp(obj, none);
    CHECK(rep.status == SolveStatus::optimal);
    CHECK((rep.x_star - expect).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("disk projection has the known closed-form answer") {
    // min ||x - (2, 0)||^2 s.t. ||x|| <= 0.5 -> x* = (0.5, 0)
    QuadraticObjective obj;
    obj.P = 2.0 * Eigen::MatrixXd::Identity(2, 2);
    obj.c = Eigen::Vector2d(-4.0, 0.0);
    ConstraintSet cons;
    SocConstraint soc;
    soc.A = Eigen::MatrixXd::Identity(2, 2);
    soc.b.setZero();
    soc.radius = 0.5;
    cons.socs.push_back(soc);

    SolveReport rep = solve_socp(obj, cons);
    CHECK(rep.status == SolveStatus::optimal);
    CHECK(rep.x_star(0) == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(std::abs(rep.x_star(1)) < 1e-7);
}

TEST_CASE("inactive constraints do not perturb the unconstrained optimum") {
    QuadraticObjective obj = random_objective(6, 2);
    Eigen::VectorXd free = solve_unconstrained(obj);
    ConstraintSet cons;
    BoxBounds box;
    box.lower = Eigen::VectorXd::Constant(6, free.minCoeff() - 10.0);
    box.upper = Eigen::VectorXd::Constant(6, free.maxCoeff() + 10.0);
    cons.box = box;
    SolveReport rep = solve_socp(obj, cons);
    CHECK(rep.status == SolveStatus::optimal);
    CHECK((rep.x_star - free).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("randomized SOCPs match the projected-gradient oracle") {
    // 12 variables; cones on disjoint coordinate pairs so the oracle's
    // projection is exact
    for (std::uint64_t seed = 10; seed < 18; ++seed) {
        QuadraticObjective obj = random_objective(12, seed);
        ConstraintSet cons;
        BoxBounds box;
        box.lower = Eigen::VectorXd::Constant(12, -0.8);
        box.upper = Eigen::VectorXd::Constant(12, 0.8);
        cons.box = box;
        std::vector<oracles::PairCone> pair_cones;
        std::vector<bool> boxed(12, true);
        for (int k = 0; k < 3; ++k) {
            SocConstraint soc;
            soc.A = Eigen::MatrixXd::Zero(2, 12);
            soc.A(0, 4 * k) = 1.0;
            soc.A(1, 4 * k + 1) = 1.0;
            soc.b.setZero();
            soc.radius = 0.5;
            cons.socs.push_back(soc);
            pair_cones.push_back({4 * k, 4 * k + 1, 0.5});
        }

        SolveReport rep = solve_socp(obj, cons);
        CHECK(rep.status == SolveStatus::optimal);
        CHECK(feasibility_violation(rep.x_star, cons) < 1e-8);

        Eigen::VectorXd ref = oracles::projected_gradient_oracle(
            obj.P, obj.c, -0.8, 0.8, pair_cones, boxed, 60000);
        const double f_solver = obj.value(rep.x_star);
        const double f_oracle = obj.value(ref);
        CHECK(f_solver <= f_oracle + 1e-6 * (1.0 + std::abs(f_oracle)));
        CHECK((rep.x_star - ref).norm() < 1e-4 * (1.0 + ref.norm()));
    }
}

TEST_CASE("equality-constrained QP matches its KKT system") {
    const int n = 8, p = 3;
    QuadraticObjective obj = random_objective(n, 33);
    tpc::GaussianSource g(34);
    Eigen::MatrixXd Aeq = oracles::random_matrix(p, n, g);
    Eigen::VectorXd beq(p);
    for (int i = 0; i < p; ++i) beq(i) = g.next();

    ConeSolver solver(n, p, 0, 0);
    Eigen::MatrixXd G(0, n);
    Eigen::VectorXd h(0);
    SolveReport rep = solver.solve(obj, Aeq, beq, G, h, SolverOptions{});
    CHECK(rep.status == SolveStatus::optimal);

    Eigen::MatrixXd K(n + p, n + p);
    K.setZero();
    K.topLeftCorner(n, n) = obj.P;
    K.topRightCorner(n, p) = Aeq.transpose();
    K.bottomLeftCorner(p, n) = Aeq;
    Eigen::VectorXd rhs(n + p);
    rhs << -obj.c, beq;
    Eigen::VectorXd sol = K.partialPivLu().solve(rhs);
    CHECK((rep.x_star - sol.head(n)).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("tight iteration budgets surface a degraded status") {
    QuadraticObjective obj = random_objective(12, 77);
    ConstraintSet cons;
    SocConstraint soc;
    soc.A = Eigen::MatrixXd::Zero(2, 12);
    soc.A(0, 0) = 1.0;
    soc.A(1, 1) = 1.0;
    soc.b.setZero();
    soc.radius = 0.1;
    cons.socs.push_back(soc);
    SolveReport rep = solve_socp(obj, cons, 1e-8, /*max_iter=*/2);
    CHECK(rep.status == SolveStatus::max_iter);
    CHECK(rep.iterations <= 2);
    CHECK(rep.x_star.allFinite());
}

TEST_CASE("objective validation rejects asymmetric P") {
    QuadraticObjective obj;
    obj.P = Eigen::MatrixXd::Zero(2, 2);
    obj.P(0, 1) = 1.0;
    obj.c = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(obj.validate(), NumericalError);
}

TEST_CASE("timing probe reports ordered statistics") {
    TimingStats stats = timing_probe([] {
        volatile double acc = 0;
        for (int i = 0; i < 2000; ++i) acc = acc + 1.0 / (1.0 + i);
    }, 9);
    CHECK(stats.repeats == 9);
    CHECK(stats.min <= stats.median);
    CHECK(stats.median <= stats.max);
    CHECK(stats.min > 0.0);
}
