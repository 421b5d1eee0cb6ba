#include "tpc/socp.hpp"

#include <cassert>
#include <chrono>
#include <cmath>

#include "tpc/errors.hpp"

namespace tpc {

void QuadraticObjective::validate() const {
    if (P.rows() != P.cols() || P.rows() != c.size())
        throw DimensionError("objective dimension mismatch");
    const double pn = P.norm();
    if ((P - P.transpose()).norm() > 1e-12 * std::max(1.0, pn))
        throw NumericalError("objective matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, pn))
        throw NumericalError("objective matrix is indefinite");
}

void ConstraintSet::validate(int n) const {
    if (box) {
        if (box->lower.size() != n || box->upper.size() != n)
            throw DimensionError("box bound size mismatch");
        if ((box->lower.array() > box->upper.array()).any())
            throw ConfigError("box lower bound exceeds upper bound");
    }
    for (const auto& s : socs) {
        if (s.A.rows() != 2 || s.A.cols() != n)
            throw DimensionError("SOC selector must be 2 x n");
        if (!(s.radius > 0)) throw ConfigError("SOC radius must be positive");
    }
}

Eigen::VectorXd solve_unconstrained(const QuadraticObjective& obj) {
    obj.validate();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(obj.P);
    const double dmax = std::max(1.0, ldlt.vectorD().cwiseAbs().maxCoeff());
    if (ldlt.vectorD().minCoeff() > 1e-12 * dmax) {
        return ldlt.solve(-obj.c);
    }
    // singular P: minimum-norm solution
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(obj.P);
    Eigen::VectorXd x = cod.solve(-obj.c);
    if ((obj.P * x + obj.c).norm() > 1e-8 * std::max(1.0, obj.c.norm()))
        throw NumericalError("solve_unconstrained: c not in range of singular P");
    return x;
}

void build_cone_rows(const ConstraintSet& cons, int n, Eigen::MatrixXd& G,
                     Eigen::VectorXd& h, int& n_orthant, int& n_soc) {
    n_orthant = cons.box ? 2 * n : 0;
    n_soc = static_cast<int>(cons.socs.size());
    const int rows = n_orthant + 3 * n_soc;
    G.setZero(rows, n);
    h.setZero(rows);
    int r = 0;
    if (cons.box) {
        // x <= upper, -x <= -lower
        G.block(0, 0, n, n) = Eigen::MatrixXd::Identity(n, n);
        h.head(n) = cons.box->upper;
        G.block(n, 0, n, n) = -Eigen::MatrixXd::Identity(n, n);
        h.segment(n, n) = -cons.box->lower;
        r = 2 * n;
    }
    for (const auto& s : cons.socs) {
        G.block(r + 1, 0, 2, n) = s.A;
        h(r) = s.radius;
        h.segment(r + 1, 2) = -s.b;
        r += 3;
    }
}

ConeSolver::ConeSolver(int n, int n_eq, int n_orthant, int n_soc)
    : n_(n),
      p_(n_eq),
      l_(n_orthant),
      nsoc_(n_soc),
      dim_(n_orthant + 3 * n_soc),
      nt_(n + n_eq + dim_),
      K_(nt_, nt_),
      W_(Eigen::MatrixXd::Zero(dim_, dim_)),
      Winv_(Eigen::MatrixXd::Zero(dim_, dim_)),
      Wsq_(dim_, dim_),
      s_(dim_),
      z_(dim_),
      lam_(dim_),
      rhs_(nt_),
      sol_(nt_),
      refine_(nt_),
      x_(n),
      y_(n_eq),
      rx_(n),
      ry_(n_eq),
      rz_(dim_),
      dtil_(dim_),
      ds_(dim_),
      e_(Eigen::VectorXd::Zero(dim_)),
      best_x_(n),
      lu_(nt_) {
    e_.head(l_).setOnes();
    for (int k = 0; k < nsoc_; ++k) e_(l_ + 3 * k) = 1.0;
}

double ConeSolver::cone_margin(const Eigen::VectorXd& v) const {
    double mg = std::numeric_limits<double>::infinity();
    if (l_) mg = v.head(l_).minCoeff();
    for (int k = 0; k < nsoc_; ++k) {
        const int off = l_ + 3 * k;
        mg = std::min(mg, v(off) - v.segment(off + 1, 2).norm());
    }
    return mg;
}

double ConeSolver::max_step(const Eigen::VectorXd& v,
                            const Eigen::VectorXd& dv) const {
    double alpha = std::numeric_limits<double>::infinity();
    for (int i = 0; i < l_; ++i)
        if (dv(i) < 0) alpha = std::min(alpha, -v(i) / dv(i));
    for (int k = 0; k < nsoc_; ++k) {
        const int off = l_ + 3 * k;
        const double s0 = v(off), d0 = dv(off);
        const Eigen::Vector2d s1 = v.segment(off + 1, 2);
        const Eigen::Vector2d d1 = dv.segment(off + 1, 2);
        const double a2 = d0 * d0 - d1.squaredNorm();
        const double a1 = s0 * d0 - s1.dot(d1);
        const double a0 = s0 * s0 - s1.squaredNorm();
        double roots[2];
        int nr = 0;
        if (std::abs(a2) > 1e-300) {
            const double disc = a1 * a1 - a2 * a0;
            if (disc >= 0) {
                const double sq = std::sqrt(disc);
                roots[nr++] = (-a1 - sq) / a2;
                roots[nr++] = (-a1 + sq) / a2;
                if (roots[0] > roots[1]) std::swap(roots[0], roots[1]);
            }
        } else if (std::abs(a1) > 1e-300) {
            roots[nr++] = -a0 / (2 * a1);
        }
        for (int i = 0; i < nr; ++i) {
            const double r = roots[i];
            if (r > 1e-14 && s0 + r * d0 >= -1e-12) {
                alpha = std::min(alpha, r);
                break;
            }
        }
        if (d0 < 0) alpha = std::min(alpha, -s0 / d0);
    }
    return alpha;
}

void ConeSolver::jordan_prod(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                             Eigen::VectorXd& out) const {
    out.head(l_).array() = u.head(l_).array() * v.head(l_).array();
    for (int k = 0; k < nsoc_; ++k) {
        const int off = l_ + 3 * k;
        const double u0 = u(off), v0 = v(off);
        const Eigen::Vector2d u1 = u.segment(off + 1, 2);
        const Eigen::Vector2d v1 = v.segment(off + 1, 2);
        out(off) = u0 * v0 + u1.dot(v1);
        out.segment(off + 1, 2) = u0 * v1 + v0 * u1;
    }
}

void ConeSolver::jordan_div(const Eigen::VectorXd& lam, const Eigen::VectorXd& w,
                            Eigen::VectorXd& out) const {
    out.head(l_).array() = w.head(l_).array() / lam.head(l_).array();
    for (int k = 0; k < nsoc_; ++k) {
        const int off = l_ + 3 * k;
        const double l0 = lam(off), w0 = w(off);
        const Eigen::Vector2d l1 = lam.segment(off + 1, 2);
        const Eigen::Vector2d w1 = w.segment(off + 1, 2);
        const double det = l0 * l0 - l1.squaredNorm();
        const double x0 = (l0 * w0 - l1.dot(w1)) / det;
        out(off) = x0;
        out.segment(off + 1, 2) = (w1 - x0 * l1) / l0;
    }
}

void ConeSolver::nt_scaling() {
    for (int i = 0; i < l_; ++i) {
        W_(i, i) = std::sqrt(s_(i) / z_(i));
        Winv_(i, i) = 1.0 / W_(i, i);
    }
    for (int k = 0; k < nsoc_; ++k) {
        const int off = l_ + 3 * k;
        const double sn =
            std::sqrt(s_(off) * s_(off) - s_.segment(off + 1, 2).squaredNorm());
        const double zn =
            std::sqrt(z_(off) * z_(off) - z_.segment(off + 1, 2).squaredNorm());
        Eigen::Vector3d sb = s_.segment(off, 3) / sn;
        Eigen::Vector3d zb = z_.segment(off, 3) / zn;
        const double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
        Eigen::Vector3d wb;
        wb(0) = (sb(0) + zb(0)) / (2 * gamma);
        wb.tail(2) = (sb.tail(2) - zb.tail(2)) / (2 * gamma);
        const double eta = std::sqrt(sn / zn);
        Eigen::Matrix3d Wk;
        Wk(0, 0) = wb(0);
        Wk.block<1, 2>(0, 1) = wb.tail(2).transpose();
        Wk.block<2, 1>(1, 0) = wb.tail(2);
        Wk.block<2, 2>(1, 1) = Eigen::Matrix2d::Identity() +
                               wb.tail(2) * wb.tail(2).transpose() / (1.0 + wb(0));
        W_.block<3, 3>(off, off) = eta * Wk;
        // hyperbolic inverse: flip the sign of the off-diagonal couplings
        Eigen::Matrix3d Wkinv = Wk;
        Wkinv.block<1, 2>(0, 1) = -Wk.block<1, 2>(0, 1);
        Wkinv.block<2, 1>(1, 0) = -Wk.block<2, 1>(1, 0);
        Winv_.block<3, 3>(off, off) = Wkinv / eta;
    }
    lam_.noalias() = W_ * z_;
}

void ConeSolver::kkt_solve(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Aeq,
                           const Eigen::MatrixXd& G) {
    (void)P;
    (void)Aeq;
    (void)G;
    lu_.compute(K_);
    sol_ = lu_.solve(rhs_);
    // one step of iterative refinement keeps late-stage residuals in check
    refine_.noalias() = rhs_ - K_ * sol_;
    sol_ += lu_.solve(refine_);
}

SolveReport ConeSolver::solve(const QuadraticObjective& obj,
                              const Eigen::MatrixXd& Aeq,
                              const Eigen::VectorXd& beq,
                              const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                              const SolverOptions& opts,
                              const Eigen::VectorXd* warm_start) {
    const auto t_start = std::chrono::steady_clock::now();
    if (obj.P.rows() != n_ || Aeq.rows() != p_ || G.rows() != dim_)
        throw DimensionError("ConeSolver: problem does not match workspace");
    if (n_ > opts.dimension_cap)
        throw DimensionError("ConeSolver: dimension exceeds configured cap");

    SolveReport rep;
    rep.x_star.resize(n_);

    auto finish = [&](SolveStatus st, int iters, double kkt_res,
                      const Eigen::VectorXd& xv) {
        rep.status = st;
        rep.iterations = iters;
        rep.kkt_residual = kkt_res;
        rep.x_star = xv;
        rep.solve_time = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t_start)
                             .count();
        return rep;
    };

    // no inequalities: a single symmetric-indefinite KKT solve
    if (dim_ == 0) {
        const int nt = n_ + p_;
        K_.topLeftCorner(n_, n_) = obj.P;
        if (p_) {
            K_.block(0, n_, n_, p_) = Aeq.transpose();
            K_.block(n_, 0, p_, n_) = Aeq;
            K_.block(n_, n_, p_, p_).setZero();
        }
        rhs_.head(n_) = -obj.c;
        if (p_) rhs_.segment(n_, p_) = beq;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(K_.topLeftCorner(nt, nt));
        Eigen::VectorXd sol = lu.solve(rhs_.head(nt));
        sol += lu.solve(rhs_.head(nt) - K_.topLeftCorner(nt, nt) * sol);
        const double res =
            (K_.topLeftCorner(nt, nt) * sol - rhs_.head(nt)).norm();
        if (!sol.allFinite())
            return finish(SolveStatus::infeasible, 0, res,
                          Eigen::VectorXd::Zero(n_));
        return finish(SolveStatus::optimal, 1, res, sol.head(n_));
    }

    // assemble the constant blocks of the KKT matrix once
    K_.setZero();
    K_.topLeftCorner(n_, n_) = obj.P;
    if (p_) {
        K_.block(0, n_, n_, p_) = Aeq.transpose();
        K_.block(n_, 0, p_, n_) = Aeq;
    }
    K_.block(0, n_ + p_, n_, dim_) = G.transpose();
    K_.block(n_ + p_, 0, dim_, n_) = G;

    // initialization: solve with W = I, then shift into the cone interior
    K_.bottomRightCorner(dim_, dim_) =
        -Eigen::MatrixXd::Identity(dim_, dim_);
    rhs_.head(n_) = -obj.c;
    if (p_) rhs_.segment(n_, p_) = beq;
    rhs_.tail(dim_) = h;
    kkt_solve(obj.P, Aeq, G);
    x_ = sol_.head(n_);
    if (p_) y_ = sol_.segment(n_, p_);
    z_ = sol_.tail(dim_);
    s_ = -z_;
    double mg = cone_margin(s_);
    if (mg <= 0) s_ += (1.0 - mg) * e_;
    mg = cone_margin(z_);
    if (mg <= 0) z_ += (1.0 - mg) * e_;
    if (warm_start && warm_start->size() == n_) x_ = *warm_start;

    const double nu = static_cast<double>(l_ + nsoc_);
    const double cnorm = std::max(1.0, obj.c.norm());
    const double bnorm = std::max(1.0, p_ ? beq.norm() : 0.0);
    const double hnorm = std::max(1.0, h.norm());

    double best_merit = std::numeric_limits<double>::infinity();
    double best_res = 0.0;
    best_x_ = x_;
    int it = 0;
    SolveStatus status = SolveStatus::max_iter;

    Eigen::VectorXd lamlam(dim_), ds_a(dim_), dz_a(dim_), corr(dim_),
        Winv_ds(dim_), W_dz(dim_);

    for (it = 0; it < opts.max_iter; ++it) {
        rx_.noalias() = obj.P * x_ + obj.c;
        rx_.noalias() += G.transpose() * z_;
        if (p_) {
            rx_.noalias() += Aeq.transpose() * y_;
            ry_.noalias() = Aeq * x_ - beq;
        }
        rz_.noalias() = G * x_ + s_ - h;
        const double mu = s_.dot(z_) / nu;
        // duality gap relative to the objective magnitude, so convergence
        // does not depend on how the caller scaled the cost
        const double pcost = 0.5 * x_.dot(obj.P * x_) + obj.c.dot(x_);
        const double gap = std::abs(s_.dot(z_)) / std::max(1.0, std::abs(pcost));
        const double dres = rx_.norm() / cnorm;
        const double pres =
            std::max(p_ ? ry_.norm() / bnorm : 0.0, rz_.norm() / hnorm);
        const double merit = std::max({pres, dres, gap});
        if (merit < best_merit) {
            best_merit = merit;
            best_res = std::max(pres, dres);
            best_x_ = x_;
        }
        if (pres < opts.tol && dres < opts.tol && gap < opts.tol) {
            status = SolveStatus::optimal;
            break;
        }
        if (mu < 1e-13 || !std::isfinite(mu)) {
            // complementarity exhausted without feasibility: infeasible problem
            if (best_res > 1e3 * opts.tol) status = SolveStatus::infeasible;
            break;
        }

        nt_scaling();
        Wsq_.noalias() = W_ * W_;
        K_.bottomRightCorner(dim_, dim_) = -Wsq_;
        jordan_prod(lam_, lam_, lamlam);

        // affine (predictor) direction
        jordan_div(lam_, -lamlam, dtil_);
        rhs_.head(n_) = -rx_;
        if (p_) rhs_.segment(n_, p_) = -ry_;
        rhs_.tail(dim_).noalias() = -rz_ - W_ * dtil_;
        kkt_solve(obj.P, Aeq, G);
        dz_a = sol_.tail(dim_);
        ds_a.noalias() = -W_ * (W_ * dz_a);
        ds_a.noalias() += W_ * dtil_;
        const double a_aff =
            std::min({1.0, max_step(s_, ds_a), max_step(z_, dz_a)});
        const double mu_aff =
            (s_ + a_aff * ds_a).dot(z_ + a_aff * dz_a) / nu;
        double sigma = std::clamp(mu_aff / mu, 0.0, 1.0);
        sigma = sigma * sigma * sigma;

        // combined (corrector) direction
        Winv_ds.noalias() = Winv_ * ds_a;
        W_dz.noalias() = W_ * dz_a;
        jordan_prod(Winv_ds, W_dz, corr);
        jordan_div(lam_, sigma * mu * e_ - lamlam - corr, dtil_);
        rhs_.head(n_) = -rx_;
        if (p_) rhs_.segment(n_, p_) = -ry_;
        rhs_.tail(dim_).noalias() = -rz_ - W_ * dtil_;
        kkt_solve(obj.P, Aeq, G);
        dz_a = sol_.tail(dim_);
        ds_a.noalias() = -W_ * (W_ * dz_a);
        ds_a.noalias() += W_ * dtil_;

        // the complementarity measure may rise transiently while the duals
        // grow toward a large-magnitude optimum, so no monotonicity guard
        const double alpha =
            std::min({1.0, 0.99 * max_step(s_, ds_a), 0.99 * max_step(z_, dz_a)});
        if (alpha < 1e-12) break;
        x_ += alpha * sol_.head(n_);
        if (p_) y_ += alpha * sol_.segment(n_, p_);
        z_ += alpha * dz_a;
        s_ += alpha * ds_a;
    }
    if (status == SolveStatus::optimal)
        return finish(status, it, best_res, x_);
    return finish(status, it, best_res, best_x_);
}

SolveReport solve_socp(const QuadraticObjective& obj, const ConstraintSet& cons,
                       double tol, int max_iter,
                       const Eigen::VectorXd* warm_start) {
    const int n = static_cast<int>(obj.c.size());
    cons.validate(n);
    SolverOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    if (cons.empty()) {
        SolveReport rep;
        const auto t0 = std::chrono::steady_clock::now();
        rep.x_star = solve_unconstrained(obj);
        rep.status = SolveStatus::optimal;
        rep.iterations = 1;
        rep.kkt_residual = (obj.P * rep.x_star + obj.c).norm();
        rep.solve_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        return rep;
    }
    Eigen::MatrixXd G;
    Eigen::VectorXd h;
    int l = 0, nsoc = 0;
    build_cone_rows(cons, n, G, h, l, nsoc);
    ConeSolver solver(n, 0, l, nsoc);
    SolveReport rep = solver.solve(obj, Eigen::MatrixXd(0, n), Eigen::VectorXd(0),
                                   G, h, opts, warm_start);
    if (cons.box && rep.status != SolveStatus::infeasible)
        rep.x_star =
            rep.x_star.cwiseMax(cons.box->lower).cwiseMin(cons.box->upper);
    return rep;
}

TimingStats timing_probe(const std::function<void()>& run, int repeats) {
    if (repeats < 1) throw ConfigError("timing_probe: repeats must be >= 1");
    run();  // warm-up, excluded
    std::vector<double> times(repeats);
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        run();
        times[i] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
    }
    std::sort(times.begin(), times.end());
    TimingStats st;
    st.repeats = repeats;
    st.min = times.front();
    st.max = times.back();
    st.median = repeats % 2 ? times[repeats / 2]
                            : 0.5 * (times[repeats / 2 - 1] + times[repeats / 2]);
    return st;
}

}  // namespace tpc
