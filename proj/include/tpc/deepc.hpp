#pragma once

#include <Eigen/Dense>

#include "tpc/controller.hpp"
#include "tpc/hankel.hpp"

namespace tpc {

/// Eq-coupled baseline problem over the trajectory-combination vector g.
struct DeepcProblem {
    Eigen::MatrixXd Z_past;    // (q+m)rho x N
    Eigen::MatrixXd U_future;  // m tau x N
    Eigen::MatrixXd Y_future;  // q tau x N
    double g_regularization = 1e-6;  // gamma in gamma*||g||^2
    TpcConfig cfg;                   // weights, constraints, horizons
    SignalLayout layout;

    long N() const { return Z_past.cols(); }

    static DeepcProblem from_hankel(const HankelStack& h, const TpcConfig& cfg,
                                    double gamma);
};

struct DeepcSolution {
    Eigen::VectorXd g_star;
    Eigen::VectorXd u_f_star;
    SolveReport report;
};

DeepcSolution solve_deepc(const DeepcProblem& problem,
                          const Eigen::VectorXd& z_p,
                          const Eigen::VectorXd& y_r,
                          const Eigen::VectorXd& u_r, double tol = 1e-8,
                          const Eigen::VectorXd* warm_start = nullptr);

/// The linear predictor DeePC implicitly applies: y_f = Y_f pinv([Z_p; U_f]) w.
/// Used by the bias experiments.
Eigen::MatrixXd deepc_implied_predictor(const DeepcProblem& problem);

/// Closed-form workspace estimate in bytes:
///   hankel = 8 (q+m)(rho+tau) N
///   kkt    = 8 (n + p + i)^2 with n = N + m tau, p = (q+m)rho + m tau,
///            i = 2 m tau + 3 tau
///   vectors = 8 * 6 n, plus a fixed 64 KiB overhead.
std::size_t deepc_memory_estimate(long N, const PredictorDims& dims);

/// Receding-horizon wrapper with the same tick contract as TpcController.
class DeepcController : public Controller {
public:
    DeepcController(DeepcProblem problem);

    Eigen::VectorXd control_step(const Eigen::VectorXd& y_meas,
                                 const ReferencePoint& refs) override;
    const TickTelemetry& last_telemetry() const override { return telemetry_; }
    int inputs() const override { return problem_.cfg.Lu_weights.size(); }
    int outputs() const override { return problem_.cfg.Ly_weights.size(); }
    void reset() override;
    void notify_applied(const Eigen::VectorXd& u) override { last_u_ = u; }

private:
    DeepcProblem problem_;
    LeadInBuffer buffer_;
    Eigen::VectorXd last_u_;
    Eigen::VectorXd warm_;
    bool have_warm_ = false;
    long tick_ = 0;
    TickTelemetry telemetry_;
};

}  // namespace tpc
