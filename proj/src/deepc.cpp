#include "tpc/deepc.hpp"

#include "tpc/errors.hpp"

namespace tpc {

DeepcProblem DeepcProblem::from_hankel(const HankelStack& h, const TpcConfig& cfg,
                                       double gamma) {
    HankelParts parts = split_hankel(h);
    DeepcProblem p;
    p.Z_past = std::move(parts.Z_past);
    p.U_future = std::move(parts.U_future);
    p.Y_future = std::move(parts.Y_future);
    p.g_regularization = gamma;
    p.cfg = cfg;
    p.layout = h.layout;
    if (h.rho != cfg.rho || h.tau != cfg.tau)
        throw ConfigError("DeePC horizons do not match Hankel stack");
    return p;
}

DeepcSolution solve_deepc(const DeepcProblem& problem,
                          const Eigen::VectorXd& z_p,
                          const Eigen::VectorXd& y_r,
                          const Eigen::VectorXd& u_r, double tol,
                          const Eigen::VectorXd* warm_start) {
    const auto& cfg = problem.cfg;
    const int m = static_cast<int>(cfg.Lu_weights.size());
    const int q = static_cast<int>(cfg.Ly_weights.size());
    const int rho = cfg.rho, tau = cfg.tau;
    const long N = problem.N();
    const int n_uf = m * tau;
    const long n = N + n_uf;
    const int n_zp = (q + m) * rho;
    if (z_p.size() != n_zp) throw DimensionError("solve_deepc: z_p size mismatch");
    if (N < n_zp + n_uf)
        throw DimensionError("solve_deepc: N too small for interpolation");

    // lead-in interpolation feasibility: z_p must be reachable from the columns
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(problem.Z_past);
    {
        Eigen::VectorXd g0 = cod.solve(z_p);
        const double res = (problem.Z_past * g0 - z_p).norm();
        if (res > 1e-6 * std::max(1.0, z_p.norm())) {
            DeepcSolution sol;
            sol.report.status = SolveStatus::infeasible;
            sol.report.kkt_residual = res;
            sol.g_star = Eigen::VectorXd::Zero(N);
            sol.u_f_star = Eigen::VectorXd::Zero(n_uf);
            return sol;
        }
    }

    Eigen::VectorXd ly(q * tau), lu(n_uf);
    for (int k = 0; k < tau; ++k) {
        ly.segment(static_cast<long>(k) * q, q) = cfg.Ly_weights;
        lu.segment(static_cast<long>(k) * m, m) = cfg.Lu_weights;
    }

    QuadraticObjective obj;
    obj.P = Eigen::MatrixXd::Zero(n, n);
    obj.P.topLeftCorner(N, N).noalias() =
        2.0 * (problem.Y_future.transpose() * ly.asDiagonal() * problem.Y_future);
    obj.P.topLeftCorner(N, N).diagonal().array() +=
        2.0 * problem.g_regularization;
    obj.P.bottomRightCorner(n_uf, n_uf).diagonal() = 2.0 * lu;
    obj.c = Eigen::VectorXd::Zero(n);
    obj.c.head(N).noalias() =
        -2.0 * (problem.Y_future.transpose() * (ly.asDiagonal() * y_r));
    obj.c.tail(n_uf) = -2.0 * lu.asDiagonal() * u_r;

    // equalities: Z_past g = z_p,  U_future g - u_f = 0
    const int p_eq = n_zp + n_uf;
    Eigen::MatrixXd Aeq = Eigen::MatrixXd::Zero(p_eq, n);
    Eigen::VectorXd beq = Eigen::VectorXd::Zero(p_eq);
    Aeq.topLeftCorner(n_zp, N) = problem.Z_past;
    beq.head(n_zp) = z_p;
    Aeq.block(n_zp, 0, n_uf, N) = problem.U_future;
    Aeq.block(n_zp, N, n_uf, n_uf) =
        -Eigen::MatrixXd::Identity(n_uf, n_uf);

    // inequalities act on u_f (box) and on y_f = Y_future g (current cones)
    int l = 0, nsoc = 0;
    Eigen::MatrixXd G(0, n);
    Eigen::VectorXd h(0);
    if (cfg.input_box) {
        l = 2 * n_uf;
        G.conservativeResize(l, n);
        G.setZero();
        h.conservativeResize(l);
        G.block(0, N, n_uf, n_uf) = Eigen::MatrixXd::Identity(n_uf, n_uf);
        G.block(n_uf, N, n_uf, n_uf) =
            -Eigen::MatrixXd::Identity(n_uf, n_uf);
        for (int k = 0; k < tau; ++k) {
            h.segment(static_cast<long>(k) * m, m) = cfg.input_box->upper;
            h.segment(n_uf + static_cast<long>(k) * m, m) =
                -cfg.input_box->lower;
        }
    }
    if (cfg.current_limit) {
        if (!problem.layout.current_d_index || !problem.layout.current_q_index)
            throw ConfigError("current limit configured but layout lacks indices");
        nsoc = tau;
        const long base = G.rows();
        G.conservativeResize(base + 3 * tau, n);
        h.conservativeResize(base + 3 * tau);
        G.bottomRows(3 * tau).setZero();
        h.tail(3 * tau).setZero();
        const int cd = *problem.layout.current_d_index;
        const int cq = *problem.layout.current_q_index;
        for (int k = 0; k < tau; ++k) {
            const long r = base + 3 * k;
            h(r) = *cfg.current_limit;
            G.block(r + 1, 0, 1, N) =
                problem.Y_future.row(static_cast<long>(k) * q + cd);
            G.block(r + 2, 0, 1, N) =
                problem.Y_future.row(static_cast<long>(k) * q + cq);
        }
    }

    SolverOptions opts;
    opts.tol = tol;
    opts.max_iter = cfg.solver_max_iter;
    opts.dimension_cap = std::max<long>(512, n);
    ConeSolver solver(static_cast<int>(n), p_eq, l, nsoc);
    SolveReport rep = solver.solve(obj, Aeq, beq, G, h, opts, warm_start);

    DeepcSolution sol;
    sol.report = rep;
    sol.g_star = rep.x_star.head(N);
    sol.u_f_star = problem.U_future * sol.g_star;
    return sol;
}

Eigen::MatrixXd deepc_implied_predictor(const DeepcProblem& problem) {
    Eigen::MatrixXd W(problem.Z_past.rows() + problem.U_future.rows(),
                      problem.N());
    W << problem.Z_past, problem.U_future;
    // min-norm pseudoinverse via SVD with a relative threshold
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        W, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    Eigen::VectorXd sinv = Eigen::VectorXd::Zero(s.size());
    const double thresh = 1e-10 * s(0);
    for (long i = 0; i < s.size(); ++i)
        if (s(i) > thresh) sinv(i) = 1.0 / s(i);
    return problem.Y_future * svd.matrixV() * sinv.asDiagonal() *
           svd.matrixU().transpose();
}

std::size_t deepc_memory_estimate(long N, const PredictorDims& dims) {
    const std::size_t fixed = 64 * 1024;
    const long n = N + dims.uf_len();
    const long p = dims.zp_len() + dims.uf_len();
    const long i = 2 * dims.uf_len() + 3 * dims.tau;
    const std::size_t hankel =
        8ul * static_cast<std::size_t>(dims.window_rows()) * N;
    const std::size_t kkt =
        8ul * static_cast<std::size_t>(n + p + i) * (n + p + i);
    const std::size_t vectors = 8ul * 6 * n;
    return fixed + hankel + kkt + vectors;
}

DeepcController::DeepcController(DeepcProblem problem)
    : problem_(std::move(problem)),
      buffer_(problem_.cfg.rho, static_cast<int>(problem_.cfg.Ly_weights.size()),
              static_cast<int>(problem_.cfg.Lu_weights.size())),
      last_u_(Eigen::VectorXd::Zero(problem_.cfg.Lu_weights.size())),
      warm_(Eigen::VectorXd::Zero(problem_.N() +
                                  problem_.cfg.Lu_weights.size() *
                                      problem_.cfg.tau)) {
    problem_.cfg.validate(problem_.layout);
}

void DeepcController::reset() {
    buffer_.clear();
    last_u_.setZero();
    warm_.setZero();
    have_warm_ = false;
    tick_ = 0;
}

Eigen::VectorXd DeepcController::control_step(const Eigen::VectorXd& y_meas,
                                              const ReferencePoint& refs) {
    const int m = inputs();
    const int q = outputs();
    const int tau = problem_.cfg.tau;
    telemetry_ = TickTelemetry{};
    telemetry_.tick = tick_++;
    telemetry_.y = y_meas;
    telemetry_.P_r = refs.P_r;
    telemetry_.Q_r = refs.Q_r;

    buffer_.push(y_meas, last_u_);
    if (!buffer_.full()) {
        telemetry_.lead_in = true;
        last_u_.setZero();
        telemetry_.u = last_u_;
        telemetry_.y_pred = Eigen::VectorXd::Zero(q);
        return last_u_;
    }

    Eigen::VectorXd y_r = Eigen::VectorXd::Zero(static_cast<long>(q) * tau);
    const auto& pw = problem_.layout.power_indices;
    for (int k = 0; k < tau; ++k) {
        if (pw.size() > 0) y_r(static_cast<long>(k) * q + pw[0]) = refs.P_r;
        if (pw.size() > 1) y_r(static_cast<long>(k) * q + pw[1]) = refs.Q_r;
    }
    const Eigen::VectorXd u_r = Eigen::VectorXd::Zero(static_cast<long>(m) * tau);

    DeepcSolution sol =
        solve_deepc(problem_, buffer_.z_p(), y_r, u_r,
                    problem_.cfg.solver_tol, have_warm_ ? &warm_ : nullptr);
    telemetry_.status = sol.report.status;
    telemetry_.iterations = sol.report.iterations;
    telemetry_.solve_time = sol.report.solve_time;
    telemetry_.degraded = sol.report.status != SolveStatus::optimal;

    warm_ = sol.report.x_star;
    have_warm_ = true;

    telemetry_.y_pred = (problem_.Y_future * sol.g_star).head(q);
    last_u_ = sol.u_f_star.head(m);
    telemetry_.u = last_u_;
    return last_u_;
}

}  // namespace tpc
