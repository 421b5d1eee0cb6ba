#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

namespace tpc {

struct QuadraticObjective {
    Eigen::MatrixXd P;  // symmetric positive semidefinite
    Eigen::VectorXd c;
    double constant = 0.0;

    double value(const Eigen::VectorXd& x) const {
        return 0.5 * x.dot(P * x) + c.dot(x) + constant;
    }
    void validate() const;
};

/// ||A x + b|| <= radius
struct SocConstraint {
    Eigen::MatrixXd A;  // 2 x n
    Eigen::Vector2d b;
    double radius = 0.0;
};

struct BoxBounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

struct ConstraintSet {
    std::optional<BoxBounds> box;
    std::vector<SocConstraint> socs;

    bool empty() const { return !box && socs.empty(); }
    void validate(int n) const;
};

enum class SolveStatus { optimal, max_iter, infeasible };

struct SolveReport {
    Eigen::VectorXd x_star;
    SolveStatus status = SolveStatus::max_iter;
    int iterations = 0;
    double solve_time = 0.0;  // seconds
    double kkt_residual = 0.0;
};

struct SolverOptions {
    double tol = 1e-8;
    int max_iter = 50;
    int dimension_cap = 512;
};

/// Solves P x = -c via LDLT; minimum-norm solution when P is singular.
Eigen::VectorXd solve_unconstrained(const QuadraticObjective& obj);

/// Reusable solver for  min 1/2 x'Px + c'x  s.t.  Aeq x = beq,
/// Gx + s = h with s in R+^l x SOC(3) x ... The large factorization and
/// iterate buffers are sized once at construction and reused across solves.
/// Single-threaded per instance.
class ConeSolver {
public:
    ConeSolver(int n, int n_eq, int n_orthant, int n_soc);

    SolveReport solve(const QuadraticObjective& obj, const Eigen::MatrixXd& Aeq,
                      const Eigen::VectorXd& beq, const Eigen::MatrixXd& G,
                      const Eigen::VectorXd& h, const SolverOptions& opts,
                      const Eigen::VectorXd* warm_start = nullptr);

    int n() const { return n_; }

private:
    int n_, p_, l_, nsoc_, dim_, nt_;
    Eigen::MatrixXd K_, W_, Winv_, Wsq_;
    Eigen::VectorXd s_, z_, lam_, rhs_, sol_, refine_;
    Eigen::VectorXd x_, y_, rx_, ry_, rz_, dtil_, ds_, e_;
    Eigen::VectorXd best_x_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;

    void nt_scaling();
    double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) const;
    double cone_margin(const Eigen::VectorXd& v) const;
    void jordan_prod(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                     Eigen::VectorXd& out) const;
    void jordan_div(const Eigen::VectorXd& lam, const Eigen::VectorXd& w,
                    Eigen::VectorXd& out) const;
    void kkt_solve(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Aeq,
                   const Eigen::MatrixXd& G);
};

/// One-shot convenience wrapper used by the TPC controller (no equalities).
SolveReport solve_socp(const QuadraticObjective& obj, const ConstraintSet& cons,
                       double tol = 1e-8, int max_iter = 50,
                       const Eigen::VectorXd* warm_start = nullptr);

/// Builds (G, h) rows from a ConstraintSet: orthant rows for the box first,
/// then one 3-row cone per SOC.
void build_cone_rows(const ConstraintSet& cons, int n, Eigen::MatrixXd& G,
                     Eigen::VectorXd& h, int& n_orthant, int& n_soc);

struct TimingStats {
    double median = 0.0, min = 0.0, max = 0.0;
    int repeats = 0;
};

/// Wall-clock statistics over `repeats` invocations; one warm-up call is
/// made first and excluded.
TimingStats timing_probe(const std::function<void()>& run, int repeats);

}  // namespace tpc
