#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nfbt/baselines.hpp"
#include "nfbt/gp_lse.hpp"
#include "nfbt/phase_retrieval.hpp"

namespace nfbt {

enum class Method {
    LseRSparta,        // proposed two-stage pipeline
    RSparta,           // full-beamspace Rician-SPARTA
    RSwf,              // full-beamspace Rician-SWF
    ExhaustiveDft,
    LseSpartaNoRician,   // ablation: no debias, no pseudo-amplitude denoising
    LseRSpartaLaplace,   // ablation: product Laplace kernel (alpha = 0)
};

std::string method_name(Method m);
Method method_from_name(const std::string& name);

enum class SweepAxis { Snr, Paths, Distance };
std::string axis_name(SweepAxis a);

struct LseParams {
    double tau_quantile = 0.7;
    double tau_floor_sigma_mult = 3.0;
    double epsilon_frac = 0.1;
    std::string beta_mode = "constant";
    double beta = 9.0;
    double b_f = 1.0;
    double beta_delta = 0.05;
    double alpha = 0.5;
    double kappa_u = 1.0;
    double kappa_v = 1.0;
    double warmup_fraction = 0.1;
    double delta_bd = 0.05;
    double c1 = 1.0;
    int k_cap = 0;  // 0 = auto from the sparsity law (see support_cap_rule)
    double stage2_snr_floor = 4.5;
    bool conservative_regularization = false;
};

struct SpartaParams {
    int k = 0;  // 0 = auto from the sparsity law (see sparsity_rule)
    double mu = 0.0;
    double trunc_gamma = 0.7;
    int init_card = 0;
    int max_iters = 400;
    double tol = 1e-7;
};

struct SwfParams {
    double mu = 0.2;
    int max_iters = 400;
    double tol = 1e-7;
};

struct AblationFlags {
    bool disable_rician = false;
    std::string kernel = "cross";  // "cross" | "laplace_product"
};

struct SimConfig {
    ArrayConfig array{32, 8, 28e9};
    ScenarioPrior prior{-0.5, 0.5, -0.5, 0.5, 0.0, 0.0, 6};
    bool r_range_auto = true;  // [fresnel, rayleigh] from the array

    std::vector<Method> methods{Method::LseRSparta, Method::RSparta, Method::RSwf,
                                Method::ExhaustiveDft};
    std::vector<double> snr_grid_db{-15, -10, -5, 0, 5, 10, 15};
    std::vector<int> path_grid{2, 4, 6, 8, 10, 12};
    std::vector<double> distance_grid_m;  // empty = auto inside the near field
    double fixed_snr_db = 10.0;           // SNR for path/distance sweeps

    int trials = 100;
    std::uint64_t global_seed = 1;
    int t1 = 0;  // 0 = N
    int m2 = 0;  // 0 = N

    LseParams lse;
    SpartaParams sparta;
    SwfParams swf;
    AblationFlags ablation;
    int threads = 0;  // 0 = hardware concurrency

    void finalize();  // resolves auto fields; validates
};

/// sigma^2 = ||h||^2 / (N * 10^(snr_db/10)).
double snr_to_noise_power(const CVec& h, double snr_db);

struct Correlation {
    double rho = 0.0;
    bool degenerate = false;
};

/// rho = |h^H h_hat| / (||h|| ||h_hat||); zero inputs are flagged and
/// recorded as rho = 0.
Correlation correlation(const CVec& h, const CVec& h_hat);

struct TrialResult {
    Method method = Method::LseRSparta;
    double rho = 0.0;
    bool degenerate = false;
    int probes_used = 0;
    int support_size = 0;
    int stage1_steps = 0;
    int stage2_iters = 0;
    double wall_time_s = 0.0;
    bool failed = false;
    std::string error;
};

struct TrialTraces {
    std::vector<StageOneTraceRow> stage1;
    std::vector<StageTwoTraceRow> stage2;
};

TrialResult run_trial(const SimConfig& cfg, Method method, SweepAxis axis, double axis_value,
                      int trial_idx, TrialTraces* traces = nullptr);

/// The channel realization a trial sees; identical for every method at a
/// given (axis_value, trial_idx).
Channel trial_channel(const SimConfig& cfg, SweepAxis axis, double axis_value, int trial_idx);

struct SweepCell {
    double axis_value = 0.0;
    Method method = Method::LseRSparta;
    double mean_rho = 0.0;
    double stderr_rho = 0.0;
    int n = 0;
};

struct SweepReport {
    SweepAxis axis = SweepAxis::Snr;
    std::vector<double> axis_values;
    std::vector<SweepCell> cells;               // axis-major, then method order
    std::vector<TrialResult> trials;            // same ordering, trial-minor
    int trials_per_cell = 0;
    std::uint64_t seed = 0;
    int failed_trials = 0;
};

SweepReport run_sweep(const SimConfig& cfg, SweepAxis axis);

/// Writes report.csv (axis,method,mean_rho,stderr,n) and config_echo.json;
/// optionally trials.csv. Throws on I/O failure.
void persist(const SweepReport& report, const SimConfig& cfg, const std::string& out_dir,
             bool write_trials = false);

std::string report_csv(const SweepReport& report);
std::string trials_csv(const SweepReport& report);

/// Effective Stage II sparsity level: the closed-form expectation floored at
/// four cells per path (the DFT leakage of a sub-cell lobe), clamped to [1, K].
int sparsity_rule(const ArrayConfig& cfg, const ScenarioPrior& prior, int k_support);

/// Stage I support cap for the Top-K patch.
int support_cap_rule(const ArrayConfig& cfg, const ScenarioPrior& prior);

// Config file I/O (strict JSON; unknown keys are errors).
SimConfig load_config(const std::string& path);
std::string config_echo_json(const SimConfig& cfg);

}  // namespace nfbt
