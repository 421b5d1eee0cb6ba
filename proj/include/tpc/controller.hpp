#pragma once

#include <Eigen/Dense>
#include <deque>
#include <optional>
#include <vector>

#include "tpc/predictor.hpp"
#include "tpc/socp.hpp"

namespace tpc {

/// P = v_d i_d + v_q i_q,  Q = v_q i_d - v_d i_q  (per-unit convention)
std::pair<double, double> dq_power(double v_d, double v_q, double i_d,
                                   double i_q);

struct RegularizationConfig {
    enum class Kind { none, input_quadratic, leadin_coupled };
    Kind kind = Kind::none;
    double weight = 0.0;
    /// coupling K for the lead-in form: weight * ||u_f - K z_p||^2
    Eigen::MatrixXd coupling;  // m tau x (q+m) rho, used when leadin_coupled
};

struct TpcConfig {
    int rho = 6;
    int tau = 6;
    /// per-channel weights, replicated across the horizon
    Eigen::VectorXd Ly_weights;  // length q, default (4.5e5, 4.5e5, 0, 0)
    Eigen::VectorXd Lu_weights;  // length m, default (0.001, 0.001)
    RegularizationConfig reg;
    std::optional<BoxBounds> input_box;  // per-step bounds on (i_d*, i_q*)
    std::optional<double> current_limit;  // i_max in p.u.
    double solver_tol = 1e-8;
    int solver_max_iter = 50;

    static TpcConfig experiment_defaults();  // rho=tau=6 and the weights above
    void validate(const SignalLayout& layout) const;
};

struct ReferencePoint {
    double time = 0.0;
    double P_r = 0.0;
    double Q_r = 0.0;
};

/// Piecewise-constant (time, P_r, Q_r) schedule; u_r defaults to zero.
struct ReferenceSchedule {
    std::vector<ReferencePoint> points{{0.0, 0.0, 0.0}};

    ReferencePoint at(double t) const;
    void validate() const;
};

/// Ring buffer of the last rho samples of z(t) = [y(t); u(t)].
class LeadInBuffer {
public:
    LeadInBuffer(int rho, int q, int m) : rho_(rho), q_(q), m_(m) {}

    void push(const Eigen::VectorXd& y, const Eigen::VectorXd& u);
    bool full() const { return static_cast<int>(buf_.size()) == rho_; }
    Eigen::VectorXd z_p() const;  // stacked oldest..newest
    void clear() { buf_.clear(); }

private:
    int rho_, q_, m_;
    std::deque<Eigen::VectorXd> buf_;
};

struct TickTelemetry {
    long tick = 0;
    Eigen::VectorXd u;        // applied input
    Eigen::VectorXd y;        // measurement the tick acted on
    Eigen::VectorXd y_pred;   // first predicted output block
    double P_r = 0.0, Q_r = 0.0;
    SolveStatus status = SolveStatus::optimal;
    int iterations = 0;
    double solve_time = 0.0;
    bool degraded = false;
    bool lead_in = false;
};

/// Builds the condensed online problem in u_f only.
std::pair<QuadraticObjective, ConstraintSet> build_tpc_problem(
    const MultistepPredictor& H, const Eigen::VectorXd& z_p,
    const Eigen::VectorXd& y_r, const Eigen::VectorXd& u_r,
    const TpcConfig& cfg);

class Controller {
public:
    virtual ~Controller() = default;
    /// Returns the input to apply over the next tick.
    virtual Eigen::VectorXd control_step(const Eigen::VectorXd& y_meas,
                                         const ReferencePoint& refs) = 0;
    virtual const TickTelemetry& last_telemetry() const = 0;
    virtual int inputs() const = 0;
    virtual int outputs() const = 0;
    virtual void reset() = 0;
    /// Tell the controller which input was actually applied over the last
    /// tick when it differs from what control_step returned (e.g. an
    /// excitation signal was superimposed during data collection).
    virtual void notify_applied(const Eigen::VectorXd& /*u*/) {}
};

/// Receding-horizon controller around the multistep predictor. Builds one
/// small dense cone program per tick and warm-starts it from the previous
/// plan shifted by one step.
class TpcController : public Controller {
public:
    TpcController(MultistepPredictor H, TpcConfig cfg);

    Eigen::VectorXd control_step(const Eigen::VectorXd& y_meas,
                                 const ReferencePoint& refs) override;
    const TickTelemetry& last_telemetry() const override { return telemetry_; }
    int inputs() const override { return H_.dims.m; }
    int outputs() const override { return H_.dims.q; }
    void reset() override;
    void notify_applied(const Eigen::VectorXd& u) override { last_u_ = u; }

    const MultistepPredictor& predictor() const { return H_; }
    const TpcConfig& config() const { return cfg_; }

private:
    Eigen::VectorXd make_y_r(const ReferencePoint& refs) const;

    MultistepPredictor H_;
    TpcConfig cfg_;
    LeadInBuffer buffer_;
    Eigen::VectorXd last_u_;
    Eigen::VectorXd warm_;
    bool have_warm_ = false;
    long tick_ = 0;
    TickTelemetry telemetry_;
};

}  // namespace tpc
