#pragma once

// Independent reference implementations used to pin expected values in the
// tests. Everything here is deliberately written against first principles
// (covariances, rollouts, projections) rather than reusing library code.

#include <Eigen/Dense>
#include <vector>

#include "tpc/rng.hpp"
#include "tpc/trajectory.hpp"

namespace oracles {

/// Strictly proper discrete LTI system (D = 0 by construction: the
/// estimator's block-diagonal zeroing assumes no direct feedthrough).
struct LtiSystem {
    Eigen::MatrixXd A, B, C;

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
    int q() const { return static_cast<int>(C.rows()); }
};

inline Eigen::MatrixXd random_matrix(int rows, int cols, tpc::GaussianSource& g) {
    Eigen::MatrixXd M(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) M(i, j) = g.next();
    return M;
}

/// Random system with spectral radius scaled to `radius`.
inline LtiSystem random_stable_system(int n, int m, int q, std::uint64_t seed,
                                      double radius = 0.6) {
    tpc::GaussianSource g(seed);
    LtiSystem sys;
    sys.A = random_matrix(n, n, g);
    const double rho = sys.A.eigenvalues().cwiseAbs().maxCoeff();
    sys.A *= radius / rho;
    sys.B = random_matrix(n, m, g);
    sys.C = random_matrix(q, n, g);
    return sys;
}

/// Noise-free rollout from x0 = 0; y(t) is recorded before u(t) acts.
inline tpc::Trajectory simulate(const LtiSystem& sys, const Eigen::MatrixXd& U,
                                double dt = 0.01) {
    tpc::Trajectory traj;
    traj.dt = dt;
    const long T = U.rows();
    traj.u = U;
    traj.y.resize(T, sys.q());
    Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.n());
    for (long t = 0; t < T; ++t) {
        traj.y.row(t) = (sys.C * x).transpose();
        x = sys.A * x + sys.B * U.row(t).transpose();
    }
    return traj;
}

/// Stationary state covariance for white input with std `sigma_u`:
/// fixed point of S = A S A' + sigma_u^2 B B'.
inline Eigen::MatrixXd state_covariance(const LtiSystem& sys, double sigma_u) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(sys.n(), sys.n());
    const Eigen::MatrixXd Q = sigma_u * sigma_u * sys.B * sys.B.transpose();
    for (int it = 0; it < 20000; ++it) {
        Eigen::MatrixXd next = sys.A * S * sys.A.transpose() + Q;
        const double delta = (next - S).norm();
        S = std::move(next);
        if (delta < 1e-16 * (1.0 + S.norm())) break;
    }
    return S;
}

/// Population multistep predictor H* = Cov(y_f, w) Cov(w)^+ for the
/// stationary process, with w = [z_p; u_f] in the interleaved layout used
/// by the estimator. Exact min-norm predictor on the deterministic subspace.
inline Eigen::MatrixXd population_predictor(const LtiSystem& sys, int rho,
                                            int tau, double sigma_u,
                                            Eigen::MatrixXd* H_p = nullptr,
                                            Eigen::MatrixXd* H_u = nullptr) {
    const int n = sys.n(), m = sys.m(), q = sys.q();
    const int K = rho + tau;
    const int bs = q + m;
    // window = M xi with xi = [x(t); u(t); ...; u(t+K-1)]
    const int nxi = n + m * K;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(bs * K, nxi);
    std::vector<Eigen::MatrixXd> Apow(K);
    Apow[0] = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k < K; ++k) Apow[k] = sys.A * Apow[k - 1];
    for (int k = 0; k < K; ++k) {
        // y(t+k) = C A^k x + sum_{j<k} C A^{k-1-j} B u(t+j)
        M.block(k * bs, 0, q, n) = sys.C * Apow[k];
        for (int j = 0; j < k; ++j)
            M.block(k * bs, n + j * m, q, m) = sys.C * Apow[k - 1 - j] * sys.B;
        M.block(k * bs + q, n + k * m, m, m) =
            Eigen::MatrixXd::Identity(m, m);
    }
    Eigen::MatrixXd cov_xi = Eigen::MatrixXd::Zero(nxi, nxi);
    cov_xi.topLeftCorner(n, n) = state_covariance(sys, sigma_u);
    cov_xi.bottomRightCorner(m * K, m * K) =
        sigma_u * sigma_u * Eigen::MatrixXd::Identity(m * K, m * K);
    const Eigen::MatrixXd cov = M * cov_xi * M.transpose();

    // row selections: w = [z_p; u_f], target = y_f
    std::vector<int> w_rows, y_rows;
    for (int k = 0; k < rho; ++k)
        for (int i = 0; i < bs; ++i) w_rows.push_back(k * bs + i);
    for (int k = rho; k < K; ++k) {
        for (int i = 0; i < q; ++i) y_rows.push_back(k * bs + i);
        for (int i = 0; i < m; ++i) w_rows.push_back(k * bs + q + i);
    }
    const int nw = static_cast<int>(w_rows.size());
    const int ny = static_cast<int>(y_rows.size());
    Eigen::MatrixXd cov_w(nw, nw), cov_yw(ny, nw);
    for (int i = 0; i < nw; ++i)
        for (int j = 0; j < nw; ++j) cov_w(i, j) = cov(w_rows[i], w_rows[j]);
    for (int i = 0; i < ny; ++i)
        for (int j = 0; j < nw; ++j) cov_yw(i, j) = cov(y_rows[i], w_rows[j]);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        cov_w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    Eigen::VectorXd sinv = Eigen::VectorXd::Zero(s.size());
    for (long i = 0; i < s.size(); ++i)
        if (s(i) > 1e-10 * s(0)) sinv(i) = 1.0 / s(i);
    Eigen::MatrixXd H = cov_yw * svd.matrixV() * sinv.asDiagonal() *
                        svd.matrixU().transpose();
    if (H_p) *H_p = H.leftCols((q + m) * rho);
    if (H_u) *H_u = H.rightCols(m * tau);
    return H;
}

/// Projected gradient descent for 1/2 x'Px + c'x over a product of a box
/// and radial clamps on disjoint coordinate pairs. The projection is exact
/// because the sets act on disjoint coordinates.
struct PairCone {
    int i, j;
    double radius;
};

inline Eigen::VectorXd projected_gradient_oracle(
    const Eigen::MatrixXd& P, const Eigen::VectorXd& c, double box_lo,
    double box_hi, const std::vector<PairCone>& cones,
    const std::vector<bool>& boxed, int iters = 200000) {
    const long n = c.size();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    const double lmax =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(P).eigenvalues()
            .maxCoeff();
    const double eta = 1.0 / std::max(lmax, 1e-12);
    auto project = [&](Eigen::VectorXd& v) {
        for (long i = 0; i < n; ++i)
            if (boxed[i]) v(i) = std::clamp(v(i), box_lo, box_hi);
        for (const auto& cone : cones) {
            const double mag = std::hypot(v(cone.i), v(cone.j));
            if (mag > cone.radius) {
                v(cone.i) *= cone.radius / mag;
                v(cone.j) *= cone.radius / mag;
            }
        }
    };
    project(x);
    for (int it = 0; it < iters; ++it) {
        Eigen::VectorXd g = P * x + c;
        x -= eta * g;
        project(x);
    }
    return x;
}

}  // namespace oracles
