#include "tpc/sim.hpp"

#include <cmath>

#include "tpc/errors.hpp"

namespace tpc {

void GridSpec::validate() const {
    if (v_d * v_d + v_q * v_q <= 0)
        throw ConfigError("grid voltage magnitude must be positive");
    if (mode == Mode::thevenin && (R < 0 || X < 0))
        throw ConfigError("thevenin impedance must be nonnegative");
}

PlantModel::PlantModel(const PlantParams& params)
    : params_(params), state_(Eigen::Vector2d::Zero()), noise_(params.noise_seed) {
    params_.grid.validate();
    if (params_.nonlin.current_saturation && *params_.nonlin.current_saturation <= 0)
        throw ConfigError("current saturation limit must be positive");
    if (params_.nonlin.deadzone && *params_.nonlin.deadzone < 0)
        throw ConfigError("deadzone must be nonnegative");
    const double alpha = std::exp(-params_.dt / params_.current_lag_tau);
    A_ = alpha * Eigen::Matrix2d::Identity();
    B_ = (1.0 - alpha) * Eigen::Matrix2d::Identity();
    if (A_.norm() / std::sqrt(2.0) >= 1.0)
        throw NumericalError("plant A matrix is not stable");
    // infinite-bus output map: [P; Q; i_d; i_q] = C [i_d; i_q]
    C_ << params_.grid.v_d, params_.grid.v_q,  //
        params_.grid.v_q, -params_.grid.v_d,   //
        1.0, 0.0,                              //
        0.0, 1.0;
}

void PlantModel::reset() {
    state_.setZero();
    time_ = 0.0;
    noise_ = GaussianSource(params_.noise_seed);
}

Eigen::Vector2d PlantModel::grid_voltage() const {
    double vd = params_.grid.v_d;
    double vq = params_.grid.v_q;
    if (params_.grid.mode == GridSpec::Mode::thevenin) {
        if (params_.grid.drift_amplitude != 0.0)
            vd += params_.grid.drift_amplitude *
                  std::sin(2.0 * M_PI * time_ / params_.grid.drift_period);
        // voltage at the connection point sags with the injected current
        vd -= params_.grid.R * state_(0) - params_.grid.X * state_(1);
        vq -= params_.grid.R * state_(1) + params_.grid.X * state_(0);
    }
    return {vd, vq};
}

Eigen::Vector4d PlantModel::output() const {
    const Eigen::Vector2d v = grid_voltage();
    const auto [P, Q] = dq_power(v(0), v(1), state_(0), state_(1));
    return {P, Q, state_(0), state_(1)};
}

Eigen::Vector4d PlantModel::step(const Eigen::Vector2d& u) {
    if (!u.allFinite()) throw DataError("plant input is not finite");
    Eigen::Vector2d target = u;
    if (params_.nonlin.deadzone) {
        // the inner loop ignores setpoint changes smaller than the deadzone
        const double dz = *params_.nonlin.deadzone;
        for (int i = 0; i < 2; ++i)
            if (std::abs(target(i) - state_(i)) < dz) target(i) = state_(i);
    }
    state_ = A_ * state_ + B_ * target;
    if (params_.nonlin.current_saturation) {
        const double lim = *params_.nonlin.current_saturation;
        const double mag = state_.norm();
        if (mag > lim) state_ *= lim / mag;
    }
    time_ += params_.dt;
    Eigen::Vector4d y = output();
    for (int i = 0; i < 4; ++i)
        if (params_.noise_std(i) > 0) y(i) += params_.noise_std(i) * noise_.next();
    return y;
}

ClosedLoopResult run_closed_loop(PlantModel& model, Controller& controller,
                                 const ReferenceSchedule& schedule,
                                 double duration, const LoopRates& rates) {
    schedule.validate();
    if (controller.inputs() != 2 || controller.outputs() != 4)
        throw DimensionError("controller dims do not match the dq plant");
    if (rates.substeps_per_tick < 1)
        throw ConfigError("substeps_per_tick must be >= 1");
    const double tick_dt = model.dt() * rates.substeps_per_tick;
    const long n_ticks = static_cast<long>(duration / tick_dt + 0.5);

    ClosedLoopResult result;
    result.tick_trajectory.dt = tick_dt;
    result.tick_trajectory.u.resize(n_ticks, 2);
    result.tick_trajectory.y.resize(n_ticks, 4);
    result.plant_trajectory.dt = model.dt();
    result.plant_trajectory.u.resize(n_ticks * rates.substeps_per_tick, 2);
    result.plant_trajectory.y.resize(n_ticks * rates.substeps_per_tick, 4);
    result.telemetry.reserve(n_ticks);

    // The controller decides the input for the NEXT tick, so the input applied
    // over tick t is the one returned at tick t-1. This keeps the plant's
    // z(t) = [y(t); u(t)] pairing identical to the training-data convention.
    Eigen::Vector4d y_meas = model.output();
    Eigen::Vector2d u_apply = Eigen::Vector2d::Zero();
    for (long t = 0; t < n_ticks; ++t) {
        const double now = t * tick_dt;
        const ReferencePoint refs = schedule.at(now);
        const Eigen::VectorXd u_next = controller.control_step(y_meas, refs);
        result.tick_trajectory.u.row(t) = u_apply.transpose();
        result.tick_trajectory.y.row(t) = y_meas.transpose();
        result.telemetry.push_back(controller.last_telemetry());
        Eigen::Vector4d y_sub = y_meas;
        for (int s = 0; s < rates.substeps_per_tick; ++s) {
            y_sub = model.step(u_apply);
            const long r = t * rates.substeps_per_tick + s;
            result.plant_trajectory.u.row(r) = u_apply.transpose();
            result.plant_trajectory.y.row(r) = y_sub.transpose();
        }
        y_meas = y_sub;
        u_apply = u_next.head<2>();
    }
    return result;
}

Trajectory collect_training_data(PlantModel& model, const CollectionSpec& spec) {
    const Eigen::MatrixXd excitation =
        generate_excitation(spec.excitation, 2, spec.seed);
    Trajectory traj;
    traj.dt = model.dt() * spec.rates.substeps_per_tick;
    traj.u.resize(spec.excitation.length, 2);
    traj.y.resize(spec.excitation.length, 4);
    Eigen::Vector4d y_meas = model.output();
    for (long t = 0; t < spec.excitation.length; ++t) {
        const Eigen::Vector2d u = excitation.row(t).transpose();
        traj.u.row(t) = u.transpose();
        traj.y.row(t) = y_meas.transpose();
        for (int s = 0; s < spec.rates.substeps_per_tick; ++s)
            y_meas = model.step(u);
    }
    return traj;
}

Trajectory collect_training_data(PlantModel& model, const CollectionSpec& spec,
                                 Controller& controller,
                                 const ReferenceSchedule& schedule) {
    const Eigen::MatrixXd excitation =
        generate_excitation(spec.excitation, 2, spec.seed);
    Trajectory traj;
    traj.dt = model.dt() * spec.rates.substeps_per_tick;
    traj.u.resize(spec.excitation.length, 2);
    traj.y.resize(spec.excitation.length, 4);
    Eigen::Vector4d y_meas = model.output();
    Eigen::Vector2d u_ret = Eigen::Vector2d::Zero();
    for (long t = 0; t < spec.excitation.length; ++t) {
        const ReferencePoint refs = schedule.at(t * traj.dt);
        // same one-tick actuation delay as run_closed_loop, with the dither
        // added on top of the previously commanded input
        const Eigen::Vector2d u_apply =
            u_ret + excitation.row(t).transpose();
        controller.notify_applied(u_apply);
        u_ret = controller.control_step(y_meas, refs).head<2>();
        traj.u.row(t) = u_apply.transpose();
        traj.y.row(t) = y_meas.transpose();
        for (int s = 0; s < spec.rates.substeps_per_tick; ++s)
            y_meas = model.step(u_apply);
    }
    return traj;
}

}  // namespace tpc
