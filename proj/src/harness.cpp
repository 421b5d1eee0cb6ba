#include "tpc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "tpc/errors.hpp"
#include "tpc/svg.hpp"

#ifndef TPC_VERSION
#define TPC_VERSION "dev"
#endif

namespace tpc {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Normalized Frobenius prediction error of a stacked [H_p H_u] map on
/// held-out Hankel windows.
double heldout_error(const Eigen::MatrixXd& H_p, const Eigen::MatrixXd& H_u,
                     const HankelStack& holdout) {
    HankelParts parts = split_hankel(holdout);
    Eigen::MatrixXd pred = H_p * parts.Z_past + H_u * parts.U_future;
    return (pred - parts.Y_future).norm() / parts.Y_future.norm();
}

PlantParams noise_free(PlantParams p) {
    p.noise_std.setZero();
    return p;
}

}  // namespace

RunSummary summarize(const std::vector<TickTelemetry>& telemetry,
                     double tick_dt, double last_change, double settling_band) {
    RunSummary s;
    s.settling_band = settling_band;
    const long n = static_cast<long>(telemetry.size());
    if (n == 0) return s;
    if (telemetry.front().y.size() < 4)
        throw DimensionError("summarize expects the 4-output inverter layout");

    const long t0 =
        std::min<long>(n, static_cast<long>(std::ceil(last_change / tick_dt)));
    // settling: last tick at which either channel leaves the band
    long last_violation = t0 - 1;
    for (long t = t0; t < n; ++t) {
        const auto& r = telemetry[t];
        if (std::abs(r.y(0) - r.P_r) > settling_band ||
            std::abs(r.y(1) - r.Q_r) > settling_band)
            last_violation = t;
    }
    if (last_violation + 1 < n)
        s.settling_time = (last_violation + 1 - t0) * tick_dt;

    const double P_final = telemetry.back().P_r;
    std::vector<double> solve_times;
    for (long t = 0; t < n; ++t) {
        const auto& r = telemetry[t];
        s.max_current = std::max(s.max_current, std::hypot(r.y(2), r.y(3)));
        if (t >= t0) s.overshoot = std::max(s.overshoot, r.y(0) - P_final);
        if (!r.lead_in) solve_times.push_back(r.solve_time);
    }
    s.overshoot = std::max(0.0, s.overshoot);
    s.median_solve_time = median(std::move(solve_times));

    const long tail = std::max<long>(1, n / 10);
    for (long t = n - tail; t < n; ++t) {
        s.sse_P += std::abs(telemetry[t].y(0) - telemetry[t].P_r);
        s.sse_Q += std::abs(telemetry[t].y(1) - telemetry[t].Q_r);
    }
    s.sse_P /= tail;
    s.sse_Q /= tail;
    return s;
}

void write_telemetry_csv(const std::string& path,
                         const std::vector<TickTelemetry>& telemetry,
                         double tick_dt) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write telemetry file: " + path);
    out << std::setprecision(17);
    const int m = telemetry.empty() ? 2 : static_cast<int>(telemetry[0].u.size());
    const int q = telemetry.empty() ? 4 : static_cast<int>(telemetry[0].y.size());
    out << "tick,t";
    for (int i = 0; i < m; ++i) out << ",u_" << i;
    for (int i = 0; i < q; ++i) out << ",y_" << i;
    for (int i = 0; i < q; ++i) out << ",yp_" << i;
    out << ",P_r,Q_r,status,iterations,degraded,lead_in\n";
    for (const auto& r : telemetry) {
        out << r.tick << ',' << r.tick * tick_dt;
        for (int i = 0; i < m; ++i) out << ',' << r.u(i);
        for (int i = 0; i < q; ++i) out << ',' << r.y(i);
        for (int i = 0; i < q; ++i) out << ',' << r.y_pred(i);
        out << ',' << r.P_r << ',' << r.Q_r << ','
            << static_cast<int>(r.status) << ',' << r.iterations << ','
            << (r.degraded ? 1 : 0) << ',' << (r.lead_in ? 1 : 0) << '\n';
    }
}

std::vector<TickTelemetry> read_telemetry_csv(const std::string& path,
                                              double* tick_dt) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open telemetry file: " + path);
    std::string header;
    if (!std::getline(in, header))
        throw DataError("empty telemetry file: " + path);
    int m = 0, q = 0;
    {
        std::istringstream hs(header);
        std::string col;
        while (std::getline(hs, col, ',')) {
            if (col.rfind("u_", 0) == 0) ++m;
            if (col.rfind("y_", 0) == 0) ++q;
        }
    }
    if (m < 1 || q < 1) throw DataError("unrecognized telemetry header: " + path);

    std::vector<TickTelemetry> out;
    std::string line;
    double t_prev = 0.0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        auto next = [&]() -> double {
            if (!std::getline(ls, cell, ','))
                throw DataError("short telemetry row in " + path);
            return std::stod(cell);
        };
        TickTelemetry r;
        r.tick = static_cast<long>(next());
        const double t = next();
        if (tick_dt && r.tick > 0) *tick_dt = (t - t_prev);
        t_prev = t;
        r.u.resize(m);
        for (int i = 0; i < m; ++i) r.u(i) = next();
        r.y.resize(q);
        for (int i = 0; i < q; ++i) r.y(i) = next();
        r.y_pred.resize(q);
        for (int i = 0; i < q; ++i) r.y_pred(i) = next();
        r.P_r = next();
        r.Q_r = next();
        r.status = static_cast<SolveStatus>(static_cast<int>(next()));
        r.iterations = static_cast<int>(next());
        r.degraded = next() != 0;
        r.lead_in = next() != 0;
        out.push_back(std::move(r));
    }
    return out;
}

void write_timing_csv(const std::string& path,
                      const std::vector<TickTelemetry>& telemetry) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write timing file: " + path);
    out << std::setprecision(17) << "tick,solve_time\n";
    for (const auto& r : telemetry)
        out << r.tick << ',' << r.solve_time << '\n';
}

void write_run_report(const std::string& path, const RunReport& report) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report file: " + path);
    const auto& s = report.summary;
    out << "config_hash " << report.config_hash << '\n'
        << "seed " << report.seed << '\n'
        << "code_version " << report.code_version << '\n'
        << "ticks " << report.telemetry.size() << '\n'
        << "tick_dt " << report.tick_dt << '\n'
        << "settling_time_s " << s.settling_time << '\n'
        << "settling_band_pu " << s.settling_band << '\n'
        << "overshoot_pu " << s.overshoot << '\n'
        << "max_current_pu " << s.max_current << '\n'
        << "steady_state_error_P_pu " << s.sse_P << '\n'
        << "steady_state_error_Q_pu " << s.sse_Q << '\n'
        << "median_solve_time_s " << s.median_solve_time << '\n';
}

void write_run_plots(const std::string& directory, const RunReport& report) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    const long n = static_cast<long>(report.telemetry.size());
    std::vector<double> t(n), P(n), Q(n), Pr(n), Qr(n), imag(n), u0(n), u1(n);
    for (long i = 0; i < n; ++i) {
        const auto& r = report.telemetry[i];
        t[i] = r.tick * report.tick_dt;
        P[i] = r.y(0);
        Q[i] = r.y(1);
        Pr[i] = r.P_r;
        Qr[i] = r.Q_r;
        imag[i] = std::hypot(r.y(2), r.y(3));
        u0[i] = r.u(0);
        u1[i] = r.u(1);
    }
    {
        SvgPlot plot("Active power", "t [s]", "P [p.u.]");
        plot.add_series("P", t, P);
        plot.add_series("P_r", t, Pr, /*dashed=*/true);
        plot.write((fs::path(directory) / "power_P.svg").string());
    }
    {
        SvgPlot plot("Reactive power", "t [s]", "Q [p.u.]");
        plot.add_series("Q", t, Q);
        plot.add_series("Q_r", t, Qr, /*dashed=*/true);
        plot.write((fs::path(directory) / "power_Q.svg").string());
    }
    {
        SvgPlot plot("Current magnitude", "t [s]", "|i| [p.u.]");
        plot.add_series("|i|", t, imag);
        plot.write((fs::path(directory) / "current.svg").string());
    }
    {
        SvgPlot plot("Current setpoints", "t [s]", "u [p.u.]");
        plot.add_series("i_d*", t, u0);
        plot.add_series("i_q*", t, u1);
        plot.write((fs::path(directory) / "inputs.svg").string());
    }
}

Trajectory harness_collect(const ExperimentConfig& cfg, std::uint64_t seed) {
    PlantParams pp = cfg.plant;
    pp.noise_seed = seed + 0x9e3779b9u;  // decorrelate from the excitation
    CollectionSpec spec{cfg.training.excitation, seed, cfg.rates};
    if (!cfg.training.closed_loop) {
        PlantModel plant(pp);
        return collect_training_data(plant, spec);
    }
    // closed loop: bootstrap a controller from a short open-loop dataset
    ExperimentConfig boot = cfg;
    boot.training.closed_loop = false;
    Trajectory open = harness_collect(boot, seed + 1);
    MultistepPredictor H = harness_estimate(open, cfg);
    TpcController controller(std::move(H), cfg.controller.tpc);
    PlantModel plant(pp);
    return collect_training_data(plant, spec, controller,
                                 cfg.scenario.schedule);
}

MultistepPredictor harness_estimate(const Trajectory& traj,
                                    const ExperimentConfig& cfg) {
    const HankelStack h = build_hankel(traj, cfg.controller.tpc.rho,
                                       cfg.controller.tpc.tau,
                                       SignalLayout::inverter());
    return estimate_predictor(h);
}

RunReport harness_run(const ExperimentConfig& cfg, Controller& controller,
                      std::uint64_t seed) {
    PlantParams pp = cfg.plant;
    pp.noise_seed = seed;
    PlantModel plant(pp);
    ClosedLoopResult loop = run_closed_loop(
        plant, controller, cfg.scenario.schedule, cfg.scenario.duration,
        cfg.rates);
    RunReport report;
    report.telemetry = std::move(loop.telemetry);
    report.tick_dt = cfg.plant.dt * cfg.rates.substeps_per_tick;
    report.config_hash = fingerprint(cfg.source_text);
    report.seed = seed;
    report.code_version = TPC_VERSION;
    const double last_change = cfg.scenario.schedule.points.back().time;
    report.summary = summarize(report.telemetry, report.tick_dt, last_change);
    return report;
}

std::vector<BenchRow> harness_bench(const ExperimentConfig& cfg,
                                    const std::vector<long>& n_list,
                                    int ticks, long deepc_max_n) {
    if (n_list.empty()) throw ConfigError("bench needs a nonempty N list");
    std::vector<BenchRow> rows;
    for (long N : n_list) {
        ExperimentConfig c = cfg;
        c.training.excitation.length = N;
        c.training.closed_loop = false;
        c.scenario.duration =
            (c.controller.tpc.rho + ticks) * c.plant.dt *
            c.rates.substeps_per_tick;
        Trajectory traj = harness_collect(c, c.training.seed);
        const HankelStack h = build_hankel(traj, c.controller.tpc.rho,
                                           c.controller.tpc.tau,
                                           SignalLayout::inverter());
        MultistepPredictor H = estimate_predictor(h);
        const PredictorDims dims = H.dims;

        BenchRow tpc_row;
        tpc_row.N = N;
        tpc_row.method = "tpc";
        {
            TpcController controller(std::move(H), c.controller.tpc);
            RunReport r = harness_run(c, controller, c.training.seed + 2);
            std::vector<double> times;
            for (const auto& rec : r.telemetry)
                if (!rec.lead_in) times.push_back(rec.solve_time);
            tpc_row.min_solve = *std::min_element(times.begin(), times.end());
            tpc_row.median_solve = median(std::move(times));
            tpc_row.solves = ticks;
        }
        // predictor matrices + a fixed solver workspace; no N dependence
        tpc_row.memory_bytes =
            64 * 1024 +
            8ul * static_cast<std::size_t>(dims.yf_len()) *
                (dims.zp_len() + dims.uf_len()) +
            8ul * static_cast<std::size_t>(dims.uf_len()) * dims.uf_len();
        rows.push_back(tpc_row);

        BenchRow deepc_row;
        deepc_row.N = N;
        deepc_row.method = "deepc";
        deepc_row.memory_bytes = deepc_memory_estimate(h.N, dims);
        deepc_row.median_solve = -1.0;
        deepc_row.min_solve = -1.0;
        if (N <= deepc_max_n) {
            DeepcProblem problem = DeepcProblem::from_hankel(
                h, c.controller.tpc, c.controller.deepc_gamma);
            DeepcController controller(std::move(problem));
            RunReport r = harness_run(c, controller, c.training.seed + 2);
            std::vector<double> times;
            for (const auto& rec : r.telemetry)
                if (!rec.lead_in) times.push_back(rec.solve_time);
            deepc_row.min_solve =
                *std::min_element(times.begin(), times.end());
            deepc_row.median_solve = median(std::move(times));
            deepc_row.solves = ticks;
        }
        rows.push_back(deepc_row);
    }
    return rows;
}

std::vector<BiasRow> harness_bias(const ExperimentConfig& cfg,
                                  const std::vector<std::uint64_t>& seeds,
                                  const std::vector<long>& n_list) {
    if (seeds.size() < 5) throw ConfigError("bias experiment needs >= 5 seeds");
    if (n_list.empty()) throw ConfigError("bias experiment needs an N list");

    ExperimentConfig noisy = cfg;
    if (noisy.plant.noise_std.maxCoeff() <= 0)
        noisy.plant.noise_std = Eigen::Vector4d(0.02, 0.02, 0.01, 0.01);
    noisy.training.closed_loop = true;

    // held-out scoring windows from the noise-free plant, fresh excitation
    ExperimentConfig clean = cfg;
    clean.plant = noise_free(cfg.plant);
    clean.training.closed_loop = false;
    clean.training.excitation.length =
        std::max<long>(400, (cfg.controller.tpc.rho + cfg.controller.tpc.tau) * 8);

    std::vector<BiasRow> rows;
    for (long N : n_list) {
        ExperimentConfig c = noisy;
        c.training.excitation.length = N;
        for (std::uint64_t seed : seeds) {
            ExperimentConfig cc = clean;
            cc.training.seed = seed + 777;
            Trajectory holdout_traj = harness_collect(cc, seed + 777);
            const HankelStack holdout =
                build_hankel(holdout_traj, c.controller.tpc.rho,
                             c.controller.tpc.tau, SignalLayout::inverter());

            Trajectory traj = harness_collect(c, seed);
            const HankelStack h = build_hankel(traj, c.controller.tpc.rho,
                                               c.controller.tpc.tau,
                                               SignalLayout::inverter());
            MultistepPredictor H = estimate_predictor(h);

            DeepcProblem problem = DeepcProblem::from_hankel(
                h, c.controller.tpc, c.controller.deepc_gamma);
            const Eigen::MatrixXd implied = deepc_implied_predictor(problem);
            const PredictorDims& d = H.dims;

            BiasRow row;
            row.seed = seed;
            row.N = N;
            row.tpc_error = heldout_error(H.H_p, H.H_u, holdout);
            row.deepc_error =
                heldout_error(implied.leftCols(d.zp_len()),
                              implied.rightCols(d.uf_len()), holdout);
            rows.push_back(row);
        }
    }
    return rows;
}

int cmd_collect(const ExperimentConfig& cfg, std::uint64_t seed,
                const std::string& out_path) {
    Trajectory traj = harness_collect(cfg, seed);
    write_trajectory_csv(traj, out_path);
    std::ofstream meta(out_path + ".meta");
    if (meta)
        meta << "config_hash " << fingerprint(cfg.source_text) << '\n'
             << "seed " << seed << '\n'
             << "rows " << traj.length() << '\n'
             << "closed_loop " << (cfg.training.closed_loop ? 1 : 0) << '\n'
             << "code_version " << TPC_VERSION << '\n';
    return 0;
}

int cmd_estimate(const std::string& csv_path, int rho, int tau,
                 const std::string& out_path) {
    Trajectory traj = read_trajectory_csv(csv_path);
    const HankelStack h =
        build_hankel(traj, rho, tau, SignalLayout::inverter());
    const RankReport rank = excitation_rank_check(h);
    MultistepPredictor H = estimate_predictor(h);
    save_predictor(H, out_path);
    std::printf("estimated predictor: H_p %ldx%ld, H_u %ldx%ld, data rank %ld/%ld\n",
                H.H_p.rows(), H.H_p.cols(), H.H_u.rows(), H.H_u.cols(),
                rank.rank, h.rows());
    return 0;
}

int cmd_run(const ExperimentConfig& cfg, const std::string& artifact_path,
            std::uint64_t seed, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    Trajectory traj;
    bool have_traj = false;
    MultistepPredictor H;
    if (!artifact_path.empty()) {
        H = load_predictor(artifact_path, SignalLayout::inverter());
    } else {
        traj = harness_collect(cfg, cfg.training.seed);
        have_traj = true;
        H = harness_estimate(traj, cfg);
    }

    RunReport report;
    if (cfg.controller.kind == ControllerKind::tpc) {
        TpcController controller(std::move(H), cfg.controller.tpc);
        report = harness_run(cfg, controller, seed);
    } else {
        if (!have_traj) traj = harness_collect(cfg, cfg.training.seed);
        const HankelStack h = build_hankel(traj, cfg.controller.tpc.rho,
                                           cfg.controller.tpc.tau,
                                           SignalLayout::inverter());
        DeepcController controller(DeepcProblem::from_hankel(
            h, cfg.controller.tpc, cfg.controller.deepc_gamma));
        report = harness_run(cfg, controller, seed);
    }

    write_telemetry_csv((fs::path(out_dir) / "telemetry.csv").string(),
                        report.telemetry, report.tick_dt);
    write_timing_csv((fs::path(out_dir) / "timing.csv").string(),
                     report.telemetry);
    write_run_report((fs::path(out_dir) / "report.txt").string(), report);
    if (cfg.output.plots) write_run_plots(out_dir, report);
    std::printf("run complete: %zu ticks, settling %.3f s, max |i| %.3f p.u.\n",
                report.telemetry.size(), report.summary.settling_time,
                report.summary.max_current);
    return 0;
}

int cmd_bench(const ExperimentConfig& cfg, const std::vector<long>& n_list,
              int ticks, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<BenchRow> rows = harness_bench(cfg, n_list, ticks);

    std::ofstream csv((fs::path(out_dir) / "bench.csv").string());
    csv << "N,method,median_solve_s,min_solve_s,memory_bytes,solves\n";
    for (const auto& r : rows)
        csv << r.N << ',' << r.method << ',' << r.median_solve << ','
            << r.min_solve << ',' << r.memory_bytes << ',' << r.solves << '\n';

    std::ofstream txt((fs::path(out_dir) / "bench.txt").string());
    txt << std::left << std::setw(8) << "N" << std::setw(8) << "method"
        << std::setw(18) << "median_solve_s" << std::setw(14) << "memory_MB"
        << '\n';
    for (const auto& r : rows) {
        txt << std::left << std::setw(8) << r.N << std::setw(8) << r.method
            << std::setw(18);
        if (r.median_solve < 0) txt << "skipped";
        else txt << r.median_solve;
        txt << std::setw(14) << r.memory_bytes / (1024.0 * 1024.0) << '\n';
    }
    std::printf("bench complete: %zu rows -> %s\n", rows.size(),
                out_dir.c_str());
    return 0;
}

int cmd_bias(const ExperimentConfig& cfg,
             const std::vector<std::uint64_t>& seeds,
             const std::vector<long>& n_list, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<BiasRow> rows = harness_bias(cfg, seeds, n_list);

    std::ofstream csv((fs::path(out_dir) / "bias.csv").string());
    csv << std::setprecision(17) << "seed,N,tpc_error,deepc_error\n";
    for (const auto& r : rows)
        csv << r.seed << ',' << r.N << ',' << r.tpc_error << ','
            << r.deepc_error << '\n';

    std::ofstream txt((fs::path(out_dir) / "bias.txt").string());
    for (long N : n_list) {
        std::vector<double> te, de;
        for (const auto& r : rows)
            if (r.N == N) {
                te.push_back(r.tpc_error);
                de.push_back(r.deepc_error);
            }
        txt << "N " << N << "  median_tpc_error " << median(te)
            << "  median_deepc_error " << median(de) << '\n';
    }
    std::printf("bias experiment complete: %zu rows -> %s\n", rows.size(),
                out_dir.c_str());
    return 0;
}

}  // namespace tpc
