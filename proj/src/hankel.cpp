#include "tpc/hankel.hpp"

#include <cmath>

#include "tpc/errors.hpp"

namespace tpc {

HankelStack build_hankel(const Trajectory& traj, int rho, int tau,
                         const SignalLayout& layout) {
    traj.validate();
    layout.validate();
    if (traj.m() != layout.inputs() || traj.q() != layout.outputs())
        throw DimensionError("trajectory channel counts do not match layout");
    if (rho < 1 || tau < 1) throw DimensionError("rho and tau must be >= 1");
    const long T = traj.length();
    const int L = rho + tau;
    if (T < L)
        throw DimensionError("trajectory too short: T=" + std::to_string(T) +
                             " < rho+tau=" + std::to_string(L));
    const long N = T - L + 1;
    const int B = layout.outputs() + layout.inputs();

    HankelStack h;
    h.rho = rho;
    h.tau = tau;
    h.N = N;
    h.layout = layout;
    h.matrix.resize(static_cast<long>(B) * L, N);
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));
    for (long j = 0; j < N; ++j)
        for (int i = 0; i < L; ++i)
            h.matrix.block(static_cast<long>(i) * B, j, B, 1) =
                scale * traj.z_at(j + i);
    return h;
}

HankelParts split_hankel(const HankelStack& h) {
    const int B = h.block_size();
    const int q = h.q(), m = h.m();
    HankelParts parts;
    parts.Z_past = h.matrix.topRows(static_cast<long>(B) * h.rho);
    parts.U_future.resize(static_cast<long>(m) * h.tau, h.N);
    parts.Y_future.resize(static_cast<long>(q) * h.tau, h.N);
    for (int k = 0; k < h.tau; ++k) {
        const long base = static_cast<long>(h.rho + k) * B;
        parts.Y_future.middleRows(static_cast<long>(k) * q, q) =
            h.matrix.middleRows(base, q);
        parts.U_future.middleRows(static_cast<long>(k) * m, m) =
            h.matrix.middleRows(base + q, m);
    }
    return parts;
}

RankReport excitation_rank_check(const HankelStack& h) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(h.matrix);
    const auto& s = svd.singularValues();
    RankReport r;
    r.sigma_max = s.size() ? s(0) : 0.0;
    r.sigma_min = s.size() ? s(s.size() - 1) : 0.0;
    const double thresh = 1e-8 * r.sigma_max;
    for (long i = 0; i < s.size(); ++i)
        if (s(i) > thresh) ++r.rank;
    r.deficient = r.rank < h.rows();
    return r;
}

}  // namespace tpc
