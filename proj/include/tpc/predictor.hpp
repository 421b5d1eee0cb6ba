#pragma once

#include <Eigen/Dense>
#include <string>

#include "tpc/hankel.hpp"

namespace tpc {

struct PredictorDims {
    int m = 0, q = 0, rho = 0, tau = 0;

    int zp_len() const { return (q + m) * rho; }
    int uf_len() const { return m * tau; }
    int yf_len() const { return q * tau; }
    int block_size() const { return q + m; }
    int window_rows() const { return (q + m) * (rho + tau); }
};

/// Estimated map from (z_p, u_f) to predicted y_f.
struct MultistepPredictor {
    Eigen::MatrixXd H_p;  // q tau x (q+m) rho
    Eigen::MatrixXd H_u;  // q tau x m tau
    PredictorDims dims;
    SignalLayout layout;

    Eigen::VectorXd predict(const Eigen::VectorXd& z_p,
                            const Eigen::VectorXd& u_f) const;
};

struct PhiDecomposition {
    Eigen::MatrixXd L;    // lower-triangular LQ factor of the Hankel stack
    Eigen::MatrixXd L0;   // L with per-timestep diagonal blocks zeroed
    Eigen::MatrixXd Phi;  // q tau x (q+m)(rho+tau)
    Eigen::MatrixXd Phi_p, Phi_u, Phi_y;
};

struct EstimationOptions {
    /// Relative diagonal threshold below which L counts as singular.
    double singular_tol = 1e-10;
    /// When L is rank deficient (noise-free data), fall back to the
    /// minimum-norm solve instead of erroring out.
    bool allow_rank_deficient = true;
};

/// L such that h.matrix = L Q, Q with orthonormal rows; diag(L) >= 0.
/// Throws SingularFactorizationError on row-rank deficiency.
Eigen::MatrixXd lq_factorize(const HankelStack& h);

/// Copy of L with its (q+m)x(q+m) diagonal blocks zeroed.
Eigen::MatrixXd zero_block_diagonal(const Eigen::MatrixXd& L, int block_size);

/// The q*tau rows of L0 at the y positions of the future timestep blocks.
Eigen::MatrixXd extract_y_rows(const Eigen::MatrixXd& L0, const PredictorDims& dims);

/// Phi = L0_y L^{-1} by back-substitution against the triangular factor.
Eigen::MatrixXd compute_phi(const Eigen::MatrixXd& L0_y, const Eigen::MatrixXd& L,
                            double singular_tol = 1e-10);

/// Minimum-norm Phi via truncated SVD; used when L is rank deficient.
Eigen::MatrixXd compute_phi_minnorm(const Eigen::MatrixXd& L0_y,
                                    const Eigen::MatrixXd& L,
                                    double rcond = 1e-10);

/// Partitions Phi and chains the one-step projections into
/// H = [(I-Phi_y)^{-1} Phi_p, (I-Phi_y)^{-1} Phi_u].
MultistepPredictor assemble_predictor(const Eigen::MatrixXd& Phi,
                                      const PredictorDims& dims,
                                      const SignalLayout& layout);

/// End-to-end Algorithm: LQ -> block-diagonal zeroing -> Phi -> H.
MultistepPredictor estimate_predictor(const HankelStack& h,
                                      const EstimationOptions& opts = {});

/// Same, returning the intermediate factorization for inspection.
MultistepPredictor estimate_predictor(const HankelStack& h,
                                      const EstimationOptions& opts,
                                      PhiDecomposition& decomp);

/// Frobenius norm of the upper block-triangle of H_u relative to ||H_u||_F.
double causality_violation(const MultistepPredictor& H);

/// Artifact: header `m,q,rho,tau`, then row-major H_p and H_u as CSV floats.
void save_predictor(const MultistepPredictor& H, const std::string& path);
MultistepPredictor load_predictor(const std::string& path,
                                  const SignalLayout& layout);

}  // namespace tpc
