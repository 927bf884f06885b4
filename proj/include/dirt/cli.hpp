#pragma once

#include <cstdint>
#include <string>

#include "dirt/dirt.hpp"
#include "dirt/models.hpp"

namespace dirt {

/// Fully resolved run description: model, reference, schedule, cross
/// controls, preconditioner spec, seeds, and output directory.
struct RunConfig {
    std::string model_name = "sir";
    // model parameters
    int lg_d_y = 3, lg_d_theta = 4;
    double lg_scale = 0.4;
    std::uint64_t lg_gseed = 7;
    int df_n_theta = 8, df_n_obs = 4;
    double df_gamma = 1.0;
    double banana_sigma = 0.3;
    double sir_ode_rtol = 1e-6;

    ReferenceMeasure::Kind ref_kind = ReferenceMeasure::Kind::truncated_gaussian;
    double ref_bound = 3.0;
    TemperingSchedule schedule;
    DirtBuildOptions opts;

    std::string precond_mode = "none"; // none | reorder | rotate
    PrecondSelection precond_sel;
    int precond_samples = 10000;
    double reduced_y_halfwidth = 6.0;
    double reduced_theta_halfwidth = 6.0;

    std::uint64_t seed = 1;
    int threads = 0;
    std::string out_dir = "out";
};

/// Parses and validates a JSON config; error messages carry line:column.
RunConfig load_config(const std::string& path);

/// Builds the configured model's target density.
TargetDensity make_target(const RunConfig& cfg);

/// Offline phase: build the transport, save <out>/transport.dirt and
/// <out>/build_report.json.
void cmd_build(const RunConfig& cfg);

/// Online phase: conditional samples for each observation row of y_file.
void cmd_condition(const std::string& dirt_path, const std::string& y_file, int n_samples,
                   std::uint64_t seed, const std::string& out_dir);

/// Accuracy sweep over synthetic observations; writes hellinger_hist.csv and
/// summary.json.
void cmd_diagnose(const std::string& dirt_path, const RunConfig& cfg, int realizations,
                  int n_per_y, std::uint64_t seed);

/// Scaled replication of the SIR study: 32 synthetic data sets plus the
/// multimodal case theta = (0.1, 1); writes report.json.
void cmd_reproduce_sir(std::uint64_t seed, const std::string& out_dir, int realizations,
                       int n_per_y);

/// Argument dispatch; returns the process exit code
/// (0 ok, 2 config, 3 build, 4 I/O).
int run_cli(int argc, char** argv);

} // namespace dirt
