#include <doctest.h>

#include <cstdio>

#include "tpc/errors.hpp"
#include "tpc/trajectory.hpp"

using namespace tpc;

TEST_CASE("inverter layout is consistent") {
    SignalLayout layout = SignalLayout::inverter();
    CHECK(layout.outputs() == 4);
    CHECK(layout.inputs() == 2);
    REQUIRE(layout.current_d_index.has_value());
    REQUIRE(layout.current_q_index.has_value());
    CHECK(*layout.current_d_index == 2);
    CHECK(*layout.current_q_index == 3);
    REQUIRE(layout.power_indices.size() == 2);
    CHECK(layout.power_indices[0] == 0);
    CHECK(layout.power_indices[1] == 1);
    CHECK_NOTHROW(layout.validate());
}

TEST_CASE("layout validation rejects out-of-range indices") {
    SignalLayout layout = SignalLayout::inverter();
    layout.current_d_index = 7;
    CHECK_THROWS_AS(layout.validate(), ConfigError);
}

TEST_CASE("z_at interleaves outputs before inputs") {
    Trajectory traj;
    traj.u.resize(3, 2);
    traj.y.resize(3, 4);
    for (long t = 0; t < 3; ++t) {
        traj.u.row(t) << 10.0 + t, 20.0 + t;
        traj.y.row(t) << 1.0 + t, 2.0 + t, 3.0 + t, 4.0 + t;
    }
    Eigen::VectorXd z = traj.z_at(1);
    REQUIRE(z.size() == 6);
    CHECK(z(0) == doctest::Approx(2.0));
    CHECK(z(3) == doctest::Approx(5.0));
    CHECK(z(4) == doctest::Approx(11.0));
    CHECK(z(5) == doctest::Approx(21.0));
}

TEST_CASE("trajectory validation catches ragged data") {
    Trajectory traj;
    traj.u.resize(4, 2);
    traj.y.resize(3, 4);
    CHECK_THROWS_AS(traj.validate(), DimensionError);
}

TEST_CASE("excitation is reproducible and roughly white") {
    ExcitationSpec spec;
    spec.amplitude = 0.2;
    spec.length = 4000;
    Eigen::MatrixXd a = generate_excitation(spec, 2, 42);
    Eigen::MatrixXd b = generate_excitation(spec, 2, 42);
    CHECK(a == b);
    Eigen::MatrixXd c = generate_excitation(spec, 2, 43);
    CHECK(a != c);

    REQUIRE(a.rows() == 4000);
    REQUIRE(a.cols() == 2);
    const double mean = a.mean();
    const double var = (a.array() - mean).square().mean();
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(0.04).epsilon(0.05));
    // adjacent samples uncorrelated
    const double lag1 =
        (a.block(0, 0, 3999, 2).array() * a.block(1, 0, 3999, 2).array())
            .mean();
    CHECK(std::abs(lag1) < 0.005);
}

TEST_CASE("trajectory CSV round-trips exactly") {
    ExcitationSpec spec;
    spec.length = 25;
    Trajectory traj;
    traj.dt = 0.01;
    traj.u = generate_excitation(spec, 2, 7);
    traj.y = generate_excitation({1.5, 25}, 4, 8);

    const std::string path = "traj_roundtrip_test.csv";
    write_trajectory_csv(traj, path);
    Trajectory back = read_trajectory_csv(path, traj.dt);
    std::remove(path.c_str());

    REQUIRE(back.length() == traj.length());
    REQUIRE(back.m() == 2);
    REQUIRE(back.q() == 4);
    CHECK((back.u - traj.u).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.y - traj.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reading a missing trajectory file raises a data error") {
    CHECK_THROWS_AS(read_trajectory_csv("no_such_file.csv"), DataError);
}
