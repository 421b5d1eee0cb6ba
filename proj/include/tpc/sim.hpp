#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>

#include "tpc/controller.hpp"
#include "tpc/rng.hpp"
#include "tpc/trajectory.hpp"

namespace tpc {

struct GridSpec {
    enum class Mode { infinite_bus, thevenin };
    Mode mode = Mode::infinite_bus;
    double v_d = 1.0;
    double v_q = 0.0;
    double f = 50.0;  // Hz
    // thevenin only
    double R = 0.02;
    double X = 0.06;
    double drift_amplitude = 0.0;  // slow bus-voltage drift, p.u.
    double drift_period = 10.0;    // seconds

    void validate() const;
};

struct NonlinearitySpec {
    std::optional<double> current_saturation;  // hard |i| clamp
    std::optional<double> deadzone;            // small-signal tracking deadzone
};

struct PlantParams {
    double dt = 1.0 / 5000.0;            // plant substep
    double current_lag_tau = 2e-3;       // inner current-loop time constant
    GridSpec grid;
    NonlinearitySpec nonlin;
    Eigen::Vector4d noise_std = Eigen::Vector4d::Zero();  // per output channel
    std::uint64_t noise_seed = 0;
};

/// Discrete dq-frame plant: first-order-lag current tracking toward the
/// setpoints, grid voltage from GridSpec, outputs [P, Q, i_d, i_q].
class PlantModel {
public:
    explicit PlantModel(const PlantParams& params);

    /// Discrete state-space at plant rate. For the infinite-bus linear case
    /// the realized outputs obey y = C x + D u exactly (before noise).
    const Eigen::Matrix2d& A() const { return A_; }
    const Eigen::Matrix2d& B() const { return B_; }
    const Eigen::Matrix<double, 4, 2>& C() const { return C_; }

    Eigen::Vector4d step(const Eigen::Vector2d& u);

    /// Output at the current state without advancing (noise-free).
    Eigen::Vector4d output() const;

    const Eigen::Vector2d& state() const { return state_; }
    void reset();
    double dt() const { return params_.dt; }
    const PlantParams& params() const { return params_; }

private:
    Eigen::Vector2d grid_voltage() const;

    PlantParams params_;
    Eigen::Matrix2d A_, B_;
    Eigen::Matrix<double, 4, 2> C_;
    Eigen::Vector2d state_;  // realized (i_d, i_q)
    double time_ = 0.0;
    GaussianSource noise_;
};

struct ClosedLoopResult {
    Trajectory tick_trajectory;   // controller-rate u, y
    Trajectory plant_trajectory;  // substep-rate realized outputs
    std::vector<TickTelemetry> telemetry;
};

struct LoopRates {
    int substeps_per_tick = 50;  // 5 kHz plant, 100 Hz controller
};

/// Lock-step loop: `substeps_per_tick` plant substeps per controller tick.
/// Bit-reproducible for a fixed (config, seed).
ClosedLoopResult run_closed_loop(PlantModel& model, Controller& controller,
                                 const ReferenceSchedule& schedule,
                                 double duration, const LoopRates& rates = {});

struct CollectionSpec {
    ExcitationSpec excitation;
    std::uint64_t seed = 1;
    LoopRates rates;
};

/// Open-loop collection: excitation applied directly as (i_d*, i_q*).
Trajectory collect_training_data(PlantModel& model, const CollectionSpec& spec);

/// Closed-loop collection: excitation superimposed on a running controller.
Trajectory collect_training_data(PlantModel& model, const CollectionSpec& spec,
                                 Controller& controller,
                                 const ReferenceSchedule& schedule);

}  // namespace tpc
