#pragma once

#include <Eigen/Dense>

#include "tpc/trajectory.hpp"

namespace tpc {

/// 1/sqrt(N)-scaled block-Hankel matrix of the interleaved signal
/// z(t) = [y(t); u(t)]. Column j stacks z(t0+j) .. z(t0+j+rho+tau-1).
struct HankelStack {
    Eigen::MatrixXd matrix;  // (q+m)(rho+tau) x N
    int rho = 0;
    int tau = 0;
    long N = 0;
    SignalLayout layout;

    int q() const { return layout.outputs(); }
    int m() const { return layout.inputs(); }
    int block_size() const { return q() + m(); }
    int blocks() const { return rho + tau; }
    long rows() const { return matrix.rows(); }
};

struct HankelParts {
    Eigen::MatrixXd Z_past;    // (q+m)rho x N
    Eigen::MatrixXd U_future;  // m tau x N
    Eigen::MatrixXd Y_future;  // q tau x N
};

struct RankReport {
    long rank = 0;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    bool deficient = true;
};

HankelStack build_hankel(const Trajectory& traj, int rho, int tau,
                         const SignalLayout& layout);

HankelParts split_hankel(const HankelStack& h);

/// Numerical rank with threshold sigma > 1e-8 * sigma_max. Advisory only.
RankReport excitation_rank_check(const HankelStack& h);

}  // namespace tpc
