#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace tpc {

/// Channel ordering shared by the Hankel builder, the predictor and the
/// controllers. Outputs come first within each timestep block, inputs after.
struct SignalLayout {
    std::vector<std::string> output_names;
    std::vector<std::string> input_names;
    std::optional<int> current_d_index;
    std::optional<int> current_q_index;
    std::vector<int> power_indices;

    int outputs() const { return static_cast<int>(output_names.size()); }
    int inputs() const { return static_cast<int>(input_names.size()); }

    /// y = [P, Q, i_d, i_q], u = [i_d*, i_q*]
    static SignalLayout inverter();

    void validate() const;
};

/// Time-indexed input/output record. Rows are samples: u is T x m, y is T x q.
struct Trajectory {
    double dt = 0.01;
    Eigen::MatrixXd u;
    Eigen::MatrixXd y;
    long t0 = 0;

    long length() const { return u.rows(); }
    int m() const { return static_cast<int>(u.cols()); }
    int q() const { return static_cast<int>(y.cols()); }

    /// z(t) = [y(t); u(t)]
    Eigen::VectorXd z_at(long t) const;

    void validate() const;
};

struct ExcitationSpec {
    double amplitude = 0.2;
    long length = 500;
};

/// Zero-mean white noise, entries ~ amplitude * N(0,1); reproducible from seed.
Eigen::MatrixXd generate_excitation(const ExcitationSpec& spec, int channels,
                                    std::uint64_t rng_seed);

/// CSV schema: header `t,u_0..u_{m-1},y_0..y_{q-1}`, one row per sample.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_csv(const std::string& path, double dt = 0.01);

}  // namespace tpc
