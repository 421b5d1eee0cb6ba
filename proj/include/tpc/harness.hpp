#pragma once

#include <string>
#include <vector>

#include "tpc/config.hpp"
#include "tpc/deepc.hpp"
#include "tpc/sim.hpp"

namespace tpc {

/// Summary metrics, all recomputable from the telemetry table alone.
struct RunSummary {
    double settling_time = -1.0;  // s after the last reference change; -1 = never
    double overshoot = 0.0;       // peak P excess over final P_r, p.u.
    double max_current = 0.0;     // max ||(i_d, i_q)|| over ticks
    double sse_P = 0.0;           // mean |P - P_r| over the last 10% of ticks
    double sse_Q = 0.0;
    double median_solve_time = 0.0;  // s, lead-in ticks excluded
    double settling_band = 0.03;     // p.u. band used for settling_time
};

struct RunReport {
    std::vector<TickTelemetry> telemetry;
    double tick_dt = 0.01;
    RunSummary summary;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string code_version;
};

/// Metrics from a telemetry table. `last_change` is the time of the last
/// reference breakpoint; settling is measured from there.
RunSummary summarize(const std::vector<TickTelemetry>& telemetry,
                     double tick_dt, double last_change,
                     double settling_band = 0.03);

/// Telemetry CSV. Deliberately excludes wall-clock solve times so the file
/// is byte-identical across runs of the same (config, seed); timings go to
/// a separate file via write_timing_csv.
void write_telemetry_csv(const std::string& path,
                         const std::vector<TickTelemetry>& telemetry,
                         double tick_dt);
std::vector<TickTelemetry> read_telemetry_csv(const std::string& path,
                                              double* tick_dt = nullptr);

void write_timing_csv(const std::string& path,
                      const std::vector<TickTelemetry>& telemetry);

void write_run_report(const std::string& path, const RunReport& report);

/// P, Q, ||i||, and input plots with reference overlays.
void write_run_plots(const std::string& directory, const RunReport& report);

/// End-to-end pipeline pieces shared by the CLI commands and tests.
Trajectory harness_collect(const ExperimentConfig& cfg, std::uint64_t seed);
MultistepPredictor harness_estimate(const Trajectory& traj,
                                    const ExperimentConfig& cfg);
RunReport harness_run(const ExperimentConfig& cfg, Controller& controller,
                      std::uint64_t seed);

struct BenchRow {
    long N = 0;
    std::string method;       // "tpc" or "deepc"
    double median_solve = 0;  // s; negative = not measured
    double min_solve = 0;     // s; robust to scheduler noise, negative = n/a
    std::size_t memory_bytes = 0;
    int solves = 0;
};

/// One row per (N, method). DeePC timing is skipped above deepc_max_n
/// because its dense per-tick factorization grows cubically with N; the
/// memory estimate is still reported.
std::vector<BenchRow> harness_bench(const ExperimentConfig& cfg,
                                    const std::vector<long>& n_list,
                                    int ticks, long deepc_max_n = 1200);

struct BiasRow {
    std::uint64_t seed = 0;
    long N = 0;
    double tpc_error = 0.0;    // held-out normalized RMS prediction error
    double deepc_error = 0.0;  // same metric for the implied predictor
};

/// Closed-loop-bias experiment on the configured plant: per seed, collect a
/// noisy closed-loop dataset, estimate both predictors, and score them on
/// noise-free held-out windows.
std::vector<BiasRow> harness_bias(const ExperimentConfig& cfg,
                                  const std::vector<std::uint64_t>& seeds,
                                  const std::vector<long>& n_list);

// CLI command bodies; return process exit codes (0 ok; exceptions are
// mapped to 1/2/3 by the caller).
int cmd_collect(const ExperimentConfig& cfg, std::uint64_t seed,
                const std::string& out_path);
int cmd_estimate(const std::string& csv_path, int rho, int tau,
                 const std::string& out_path);
int cmd_run(const ExperimentConfig& cfg, const std::string& artifact_path,
            std::uint64_t seed, const std::string& out_dir);
int cmd_bench(const ExperimentConfig& cfg, const std::vector<long>& n_list,
              int ticks, const std::string& out_dir);
int cmd_bias(const ExperimentConfig& cfg,
             const std::vector<std::uint64_t>& seeds,
             const std::vector<long>& n_list, const std::string& out_dir);

}  // namespace tpc
