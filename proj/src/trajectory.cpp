#include "tpc/trajectory.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "tpc/errors.hpp"
#include "tpc/rng.hpp"

namespace tpc {

SignalLayout SignalLayout::inverter() {
    SignalLayout l;
    l.output_names = {"P", "Q", "i_d", "i_q"};
    l.input_names = {"i_d_ref", "i_q_ref"};
    l.current_d_index = 2;
    l.current_q_index = 3;
    l.power_indices = {0, 1};
    return l;
}

void SignalLayout::validate() const {
    const int q = outputs();
    auto in_range = [q](int i) { return i >= 0 && i < q; };
    if (current_d_index && !in_range(*current_d_index))
        throw ConfigError("current_d_index out of range");
    if (current_q_index && !in_range(*current_q_index))
        throw ConfigError("current_q_index out of range");
    if (current_d_index && current_q_index && *current_d_index == *current_q_index)
        throw ConfigError("current indices must be distinct");
    for (int p : power_indices)
        if (!in_range(p)) throw ConfigError("power index out of range");
}

Eigen::VectorXd Trajectory::z_at(long t) const {
    Eigen::VectorXd z(q() + m());
    z.head(q()) = y.row(t).transpose();
    z.tail(m()) = u.row(t).transpose();
    return z;
}

void Trajectory::validate() const {
    if (u.rows() != y.rows())
        throw DimensionError("trajectory u and y lengths differ");
    if (u.rows() < 1) throw DimensionError("empty trajectory");
    if (!u.allFinite() || !y.allFinite())
        throw DataError("trajectory contains non-finite samples");
}

Eigen::MatrixXd generate_excitation(const ExcitationSpec& spec, int channels,
                                    std::uint64_t rng_seed) {
    if (spec.length < 1) throw DimensionError("excitation length must be >= 1");
    if (spec.amplitude < 0) throw ConfigError("excitation amplitude must be >= 0");
    GaussianSource g(rng_seed);
    Eigen::MatrixXd out(spec.length, channels);
    for (long t = 0; t < spec.length; ++t)
        for (int c = 0; c < channels; ++c) out(t, c) = spec.amplitude * g.next();
    return out;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << "t";
    for (int j = 0; j < traj.m(); ++j) f << ",u_" << j;
    for (int j = 0; j < traj.q(); ++j) f << ",y_" << j;
    f << "\n";
    f.precision(17);
    for (long t = 0; t < traj.length(); ++t) {
        f << (traj.t0 + t);
        for (int j = 0; j < traj.m(); ++j) f << "," << traj.u(t, j);
        for (int j = 0; j < traj.q(); ++j) f << "," << traj.y(t, j);
        f << "\n";
    }
}

Trajectory read_trajectory_csv(const std::string& path, double dt) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line)) throw DataError("empty trajectory file: " + path);
    int m = 0, q = 0;
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.rfind("u_", 0) == 0) ++m;
            else if (tok.rfind("y_", 0) == 0) ++q;
            else if (tok != "t")
                throw DataError("unexpected column '" + tok + "' in " + path);
        }
    }
    if (m == 0 || q == 0) throw DataError("trajectory header lacks u/y columns");
    std::vector<double> vals;
    long rows = 0;
    long t0 = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        int col = 0;
        while (std::getline(ss, tok, ',')) {
            double v = std::stod(tok);
            if (col == 0 && rows == 0) t0 = static_cast<long>(v);
            if (col > 0) vals.push_back(v);
            ++col;
        }
        if (col != 1 + m + q)
            throw DataError("bad column count in " + path);
        ++rows;
    }
    Trajectory traj;
    traj.dt = dt;
    traj.t0 = t0;
    traj.u.resize(rows, m);
    traj.y.resize(rows, q);
    for (long t = 0; t < rows; ++t) {
        for (int j = 0; j < m; ++j) traj.u(t, j) = vals[t * (m + q) + j];
        for (int j = 0; j < q; ++j) traj.y(t, j) = vals[t * (m + q) + m + j];
    }
    traj.validate();
    return traj;
}

}  // namespace tpc
