#include <doctest.h>

#include <cstdio>

#include "support/oracles.hpp"
#include "tpc/errors.hpp"
#include "tpc/predictor.hpp"

using namespace tpc;

namespace {

HankelStack lti_hankel(const oracles::LtiSystem& sys, long T,
                       std::uint64_t seed, int rho = 6, int tau = 6) {
    ExcitationSpec spec;
    spec.amplitude = 1.0;
    spec.length = T;
    Trajectory traj = oracles::simulate(sys, generate_excitation(spec, 2, seed));
    return build_hankel(traj, rho, tau, SignalLayout::inverter());
}

}  // namespace

TEST_CASE("lq_factorize reproduces the Gram matrix") {
    auto sys = oracles::random_stable_system(4, 2, 4, 11);
    HankelStack h = lti_hankel(sys, 300, 11, 3, 3);
    // noise-free data is rank deficient; add a ridge of noise to make L full
    // rank so the triangular path is exercised
    tpc::GaussianSource g(5);
    for (long i = 0; i < h.matrix.rows(); ++i)
        for (long j = 0; j < h.matrix.cols(); ++j)
            h.matrix(i, j) += 1e-3 * g.next();

    Eigen::MatrixXd L = lq_factorize(h);
    REQUIRE(L.rows() == h.rows());
    REQUIRE(L.cols() == h.rows());
    // lower triangular with nonnegative diagonal
    for (long i = 0; i < L.rows(); ++i) {
        CHECK(L(i, i) >= 0.0);
        for (long j = i + 1; j < L.cols(); ++j)
            CHECK(std::abs(L(i, j)) < 1e-12);
    }
    // L L' = Z Z' since Q has orthonormal rows
    const Eigen::MatrixXd gram = h.matrix * h.matrix.transpose();
    CHECK((L * L.transpose() - gram).cwiseAbs().maxCoeff() <
          1e-12 * gram.cwiseAbs().maxCoeff());
}

TEST_CASE("zero_block_diagonal clears exactly the per-step blocks") {
    Eigen::MatrixXd L = Eigen::MatrixXd::Constant(9, 9, 1.0);
    Eigen::MatrixXd L0 = zero_block_diagonal(L, 3);
    int zeros = 0;
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j)
            if (L0(i, j) == 0.0) ++zeros;
    CHECK(zeros == 27);  // three 3x3 blocks
    CHECK(L0(0, 3) == 1.0);
    CHECK(L0(3, 0) == 1.0);
    CHECK(L0(4, 5) == 0.0);
}

TEST_CASE("estimated predictor matches the population oracle") {
    auto sys = oracles::random_stable_system(4, 2, 4, 21);
    HankelStack h = lti_hankel(sys, 3000, 21);
    MultistepPredictor H = estimate_predictor(h);

    Eigen::MatrixXd Hp_star, Hu_star;
    oracles::population_predictor(sys, 6, 6, 1.0, &Hp_star, &Hu_star);

    CHECK(H.H_p.rows() == 24);
    CHECK(H.H_p.cols() == 36);
    CHECK(H.H_u.rows() == 24);
    CHECK(H.H_u.cols() == 12);
    CHECK((H.H_p - Hp_star).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((H.H_u - Hu_star).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("predictions reproduce held-out noise-free rollouts") {
    auto sys = oracles::random_stable_system(4, 2, 4, 31);
    HankelStack h = lti_hankel(sys, 2000, 31);
    MultistepPredictor H = estimate_predictor(h);

    ExcitationSpec spec;
    spec.amplitude = 0.7;
    spec.length = 80;
    Trajectory held = oracles::simulate(sys, generate_excitation(spec, 2, 99));
    // window starting deep enough that the lead-in pins the state
    const long s = 40;
    Eigen::VectorXd z_p(36), u_f(12), y_true(24);
    for (int k = 0; k < 6; ++k) z_p.segment(6 * k, 6) = held.z_at(s + k);
    for (int k = 0; k < 6; ++k) {
        u_f.segment(2 * k, 2) = held.u.row(s + 6 + k).transpose();
        y_true.segment(4 * k, 4) = held.y.row(s + 6 + k).transpose();
    }
    Eigen::VectorXd y_hat = H.predict(z_p, u_f);
    CHECK((y_hat - y_true).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("causality: H_u has no upper block-triangle leakage") {
    auto sys = oracles::random_stable_system(4, 2, 4, 41);
    HankelStack h = lti_hankel(sys, 1500, 41);
    MultistepPredictor H = estimate_predictor(h);
    CHECK(causality_violation(H) < 1e-10);
    // the first predicted step cannot depend on any future input at all
    CHECK(H.H_u.topRows(4).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("rank-deficient data uses the min-norm fallback, or errors when disabled") {
    auto sys = oracles::random_stable_system(4, 2, 4, 51);
    HankelStack h = lti_hankel(sys, 600, 51);
    CHECK_NOTHROW(estimate_predictor(h));

    EstimationOptions strict;
    strict.allow_rank_deficient = false;
    CHECK_THROWS_AS(estimate_predictor(h, strict), SingularFactorizationError);
    try {
        estimate_predictor(h, strict);
    } catch (const SingularFactorizationError& e) {
        CHECK(e.row_index >= 0);
        CHECK(e.row_index < h.rows());
    }
}

TEST_CASE("predictor artifact round-trips exactly") {
    auto sys = oracles::random_stable_system(4, 2, 4, 61);
    HankelStack h = lti_hankel(sys, 700, 61);
    MultistepPredictor H = estimate_predictor(h);

    const std::string path = "predictor_roundtrip_test.csv";
    save_predictor(H, path);
    MultistepPredictor back = load_predictor(path, SignalLayout::inverter());
    std::remove(path.c_str());

    CHECK(back.dims.m == 2);
    CHECK(back.dims.q == 4);
    CHECK(back.dims.rho == 6);
    CHECK(back.dims.tau == 6);
    CHECK((back.H_p - H.H_p).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.H_u - H.H_u).cwiseAbs().maxCoeff() == 0.0);
}
