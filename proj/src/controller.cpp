#include "tpc/controller.hpp"

#include "tpc/errors.hpp"

namespace tpc {

std::pair<double, double> dq_power(double v_d, double v_q, double i_d,
                                   double i_q) {
    return {v_d * i_d + v_q * i_q, v_q * i_d - v_d * i_q};
}

TpcConfig TpcConfig::experiment_defaults() {
    TpcConfig cfg;
    cfg.rho = cfg.tau = 6;
    cfg.Ly_weights = Eigen::Vector4d(4.5e5, 4.5e5, 0.0, 0.0);
    cfg.Lu_weights = Eigen::Vector2d(0.001, 0.001);
    return cfg;
}

void TpcConfig::validate(const SignalLayout& layout) const {
    if (rho < 1 || tau < 1) throw ConfigError("rho and tau must be >= 1");
    if (Ly_weights.size() != layout.outputs())
        throw ConfigError("Ly_weights length must equal output count");
    if (Lu_weights.size() != layout.inputs())
        throw ConfigError("Lu_weights length must equal input count");
    if ((Ly_weights.array() < 0).any() || (Lu_weights.array() < 0).any())
        throw ConfigError("weights must be nonnegative");
    if (Ly_weights.maxCoeff() <= 0 && Lu_weights.maxCoeff() <= 0)
        throw ConfigError("at least one weight must be positive");
    if (current_limit) {
        if (*current_limit <= 0) throw ConfigError("current limit must be positive");
        if (!layout.current_d_index || !layout.current_q_index)
            throw ConfigError(
                "current limit configured but layout lacks current indices");
    }
    if (reg.kind != RegularizationConfig::Kind::none && reg.weight < 0)
        throw ConfigError("regularization weight must be >= 0");
}

ReferencePoint ReferenceSchedule::at(double t) const {
    ReferencePoint out = points.front();
    for (const auto& p : points) {
        if (p.time <= t) out = p;
        else break;
    }
    out.time = t;
    return out;
}

void ReferenceSchedule::validate() const {
    if (points.empty()) throw ConfigError("reference schedule is empty");
    for (size_t i = 1; i < points.size(); ++i)
        if (points[i].time <= points[i - 1].time)
            throw ConfigError("reference breakpoints must be strictly increasing");
}

void LeadInBuffer::push(const Eigen::VectorXd& y, const Eigen::VectorXd& u) {
    if (y.size() != q_ || u.size() != m_)
        throw DimensionError("LeadInBuffer: sample size mismatch");
    Eigen::VectorXd z(q_ + m_);
    z << y, u;
    buf_.push_back(std::move(z));
    while (static_cast<int>(buf_.size()) > rho_) buf_.pop_front();
}

Eigen::VectorXd LeadInBuffer::z_p() const {
    Eigen::VectorXd zp(static_cast<long>(rho_) * (q_ + m_));
    long off = 0;
    for (const auto& z : buf_) {
        zp.segment(off, q_ + m_) = z;
        off += q_ + m_;
    }
    return zp;
}

std::pair<QuadraticObjective, ConstraintSet> build_tpc_problem(
    const MultistepPredictor& H, const Eigen::VectorXd& z_p,
    const Eigen::VectorXd& y_r, const Eigen::VectorXd& u_r,
    const TpcConfig& cfg) {
    const auto& d = H.dims;
    if (z_p.size() != d.zp_len() || y_r.size() != d.yf_len() ||
        u_r.size() != d.uf_len())
        throw DimensionError("build_tpc_problem: dimension mismatch");
    cfg.validate(H.layout);

    Eigen::VectorXd ly(d.yf_len()), lu(d.uf_len());
    for (int k = 0; k < d.tau; ++k) {
        ly.segment(static_cast<long>(k) * d.q, d.q) = cfg.Ly_weights;
        lu.segment(static_cast<long>(k) * d.m, d.m) = cfg.Lu_weights;
    }

    QuadraticObjective obj;
    obj.P = 2.0 * (H.H_u.transpose() * ly.asDiagonal() * H.H_u);
    obj.P.diagonal() += 2.0 * lu;
    const Eigen::VectorXd y_free = H.H_p * z_p;  // zero-input prediction
    obj.c = 2.0 * (H.H_u.transpose() * (ly.asDiagonal() * (y_free - y_r)));
    obj.c -= 2.0 * lu.asDiagonal() * u_r;
    obj.constant = (y_free - y_r).dot(ly.asDiagonal() * (y_free - y_r)) +
                   u_r.dot(lu.asDiagonal() * u_r);

    using Kind = RegularizationConfig::Kind;
    if (cfg.reg.kind != Kind::none && cfg.reg.weight > 0) {
        obj.P.diagonal().array() += 2.0 * cfg.reg.weight;
        if (cfg.reg.kind == Kind::leadin_coupled) {
            if (cfg.reg.coupling.rows() != d.uf_len() ||
                cfg.reg.coupling.cols() != d.zp_len())
                throw ConfigError("regularization coupling matrix size mismatch");
            obj.c -= 2.0 * cfg.reg.weight * (cfg.reg.coupling * z_p);
        }
    }

    ConstraintSet cons;
    if (cfg.input_box) {
        if (cfg.input_box->lower.size() != d.m ||
            cfg.input_box->upper.size() != d.m)
            throw ConfigError("input box must have one bound per input channel");
        BoxBounds box;
        box.lower.resize(d.uf_len());
        box.upper.resize(d.uf_len());
        for (int k = 0; k < d.tau; ++k) {
            box.lower.segment(static_cast<long>(k) * d.m, d.m) =
                cfg.input_box->lower;
            box.upper.segment(static_cast<long>(k) * d.m, d.m) =
                cfg.input_box->upper;
        }
        cons.box = box;
    }
    if (cfg.current_limit) {
        const int cd = *H.layout.current_d_index;
        const int cq = *H.layout.current_q_index;
        const double href = H.H_u.cwiseAbs().maxCoeff();
        for (int k = 0; k < d.tau; ++k) {
            SocConstraint soc;
            soc.A.resize(2, d.uf_len());
            soc.A.row(0) = H.H_u.row(static_cast<long>(k) * d.q + cd);
            soc.A.row(1) = H.H_u.row(static_cast<long>(k) * d.q + cq);
            soc.b(0) = y_free(static_cast<long>(k) * d.q + cd);
            soc.b(1) = y_free(static_cast<long>(k) * d.q + cq);
            soc.radius = *cfg.current_limit;
            // the first-step current does not depend on u_f (one-step input
            // delay); a constant cone would make the interior-point KKT
            // system singular, so check it here and drop it from the set
            if (soc.A.norm() <= 1e-10 * std::max(1.0, href)) {
                if (soc.b.norm() > soc.radius + 1e-9)
                    throw NumericalError(
                        "current limit infeasible at a step the input cannot "
                        "influence");
                continue;
            }
            cons.socs.push_back(std::move(soc));
        }
    }
    return {std::move(obj), std::move(cons)};
}

TpcController::TpcController(MultistepPredictor H, TpcConfig cfg)
    : H_(std::move(H)),
      cfg_(std::move(cfg)),
      buffer_(cfg_.rho, H_.dims.q, H_.dims.m),
      last_u_(Eigen::VectorXd::Zero(H_.dims.m)),
      warm_(Eigen::VectorXd::Zero(H_.dims.uf_len())) {
    if (cfg_.rho != H_.dims.rho || cfg_.tau != H_.dims.tau)
        throw ConfigError("controller horizons do not match predictor");
    cfg_.validate(H_.layout);
}

void TpcController::reset() {
    buffer_.clear();
    last_u_.setZero();
    warm_.setZero();
    have_warm_ = false;
    tick_ = 0;
}

Eigen::VectorXd TpcController::make_y_r(const ReferencePoint& refs) const {
    const auto& d = H_.dims;
    Eigen::VectorXd y_r = Eigen::VectorXd::Zero(d.yf_len());
    const auto& pw = H_.layout.power_indices;
    for (int k = 0; k < d.tau; ++k) {
        if (pw.size() > 0) y_r(static_cast<long>(k) * d.q + pw[0]) = refs.P_r;
        if (pw.size() > 1) y_r(static_cast<long>(k) * d.q + pw[1]) = refs.Q_r;
    }
    return y_r;
}

Eigen::VectorXd TpcController::control_step(const Eigen::VectorXd& y_meas,
                                            const ReferencePoint& refs) {
    const auto& d = H_.dims;
    telemetry_ = TickTelemetry{};
    telemetry_.tick = tick_++;
    telemetry_.y = y_meas;
    telemetry_.P_r = refs.P_r;
    telemetry_.Q_r = refs.Q_r;

    buffer_.push(y_meas, last_u_);
    if (!buffer_.full()) {
        telemetry_.lead_in = true;
        last_u_.setZero();  // configured safe input
        telemetry_.u = last_u_;
        telemetry_.y_pred = Eigen::VectorXd::Zero(d.q);
        return last_u_;
    }

    const Eigen::VectorXd z_p = buffer_.z_p();
    const Eigen::VectorXd y_r = make_y_r(refs);
    const Eigen::VectorXd u_r = Eigen::VectorXd::Zero(d.uf_len());
    auto [obj, cons] = build_tpc_problem(H_, z_p, y_r, u_r, cfg_);

    SolveReport rep =
        solve_socp(obj, cons, cfg_.solver_tol, cfg_.solver_max_iter,
                   have_warm_ ? &warm_ : nullptr);
    telemetry_.status = rep.status;
    telemetry_.iterations = rep.iterations;
    telemetry_.solve_time = rep.solve_time;
    telemetry_.degraded = rep.status != SolveStatus::optimal;

    // warm start for the next tick: shift one block, repeat the last block
    warm_.head(d.uf_len() - d.m) = rep.x_star.tail(d.uf_len() - d.m);
    warm_.tail(d.m) = rep.x_star.tail(d.m);
    have_warm_ = true;

    telemetry_.y_pred =
        (H_.H_p * z_p + H_.H_u * rep.x_star).head(d.q);
    last_u_ = rep.x_star.head(d.m);
    telemetry_.u = last_u_;
    return last_u_;
}

}  // namespace tpc
