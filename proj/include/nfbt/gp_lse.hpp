#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nfbt/beamspace.hpp"
#include "nfbt/channel.hpp"

namespace nfbt {

/// Cross-pattern kernel on the 2D DFT grid:
/// k = alpha (k_u + k_v)/2 + (1 - alpha) k_u k_v with 1D Laplace factors
/// k_u = exp(-|u_n - u_n'| / ell_u).
struct KernelParams {
    double alpha = 0.5;
    double ell_u = 0.1;
    double ell_v = 0.1;

    void validate() const;
};

double kernel_eval(const KernelParams& kp, const ArrayConfig& cfg, const BeamIndex& a,
                   const BeamIndex& b);

/// Physics-guided lengthscales ell_u = kappa_u N_y d E[(1-u^2)/r] (closed form
/// under the independent uniform prior) and the z-axis analogue.
std::pair<double, double> lengthscales_from_prior(const ArrayConfig& cfg,
                                                  const ScenarioPrior& prior, double kappa_u,
                                                  double kappa_v);
/// Monte-Carlo version of the same expectations; oracle for tests.
std::pair<double, double> lengthscales_from_prior_mc(const ArrayConfig& cfg,
                                                     const ScenarioPrior& prior, double kappa_u,
                                                     double kappa_v, Rng& rng,
                                                     int samples = 100000);

struct NoiseModel {
    double sigma_sq = 0.0;  // complex-noise variance
    double f_max = 1.0;     // power-map bound
    double delta_bd = 0.05;
    double c1 = 1.0;

    void validate() const;
};

/// Debiased power feedback z = |y|^2 - sigma^2; may be negative.
double debias_power(const std::complex<double>& y, const NoiseModel& noise);

/// Deterministic bounded-noise threshold
/// B_t = c1 (sigma^2 log(pi^2 t^2 / (12 delta)) + sqrt((sigma^4 + 2 sigma^2 f_max) log(...))).
/// The log factor is clamped at zero for failure probabilities large enough
/// to make it negative.
double bounded_noise_threshold(const NoiseModel& noise, int t);

/// GP posterior over the full DFT grid under the Gaussian-likelihood update
/// with regularization sigma_eps^2. Probes extend a Cholesky factor of
/// K_t + sigma_eps^2 I by one row; the per-grid mean/variance caches are
/// updated in O(grid) per probe, so queries are O(1).
class GpPosterior {
public:
    GpPosterior(const ArrayConfig& cfg, const KernelParams& kp, double sigma_eps_sq);

    /// Appends one probe (rank-1 extension). Repeat indices are allowed.
    /// Throws if the factor cannot be extended even after jitter boosting.
    void add_probe(const BeamIndex& idx, double z);

    int count() const { return static_cast<int>(probes_.size()); }
    int grid_size() const { return cfg_.n; }
    const ArrayConfig& config() const { return cfg_; }
    double sigma_eps_sq() const { return sigma_eps_sq_; }

    double mean_lin(int lin) const { return mu_(lin); }
    double var_lin(int lin) const { return var_(lin); }
    double sd_lin(int lin) const { return std::sqrt(std::max(var_(lin), 0.0)); }
    double mean(const BeamIndex& i) const { return mu_(beam_linear_index(cfg_, i)); }
    double var(const BeamIndex& i) const { return var_(beam_linear_index(cfg_, i)); }

    const Eigen::VectorXd& mean_all() const { return mu_; }
    const Eigen::VectorXd& var_all() const { return var_; }
    const std::vector<std::pair<BeamIndex, double>>& probes() const { return probes_; }

private:
    double kernel_lin(int a, int b) const;

    ArrayConfig cfg_;
    KernelParams kp_;
    double sigma_eps_sq_;
    Eigen::VectorXd coord_u_, coord_v_;   // grid coordinates per linear index
    std::vector<double> chol_;            // packed rows of L
    std::vector<double> cvec_;            // L^{-1} z
    std::vector<Eigen::VectorXd> w_rows_; // rows of L^{-1} K(X_t, grid)
    Eigen::VectorXd mu_, var_;
    std::vector<std::pair<BeamIndex, double>> probes_;
};

/// Nondecreasing exploration schedule beta_t.
struct BetaSchedule {
    enum class Mode { Constant, RkhsBounded };
    Mode mode = Mode::Constant;
    double beta_const = 9.0;
    double b_f = 1.0;
    double delta = 0.05;
    std::function<double(int)> gamma;  // information-gain estimate by probe count

    double operator()(int t) const;

    static BetaSchedule constant(double beta);
    /// Bounded-noise RKHS confidence schedule,
    /// beta_t = 2 B_f^2 + 300 gamma_{t-1} log^3(t / delta).
    static BetaSchedule rkhs(double b_f, double delta, std::function<double(int)> gamma);
};

/// Greedy estimate of the maximum information gain
/// gamma_t = max_{|A|=t} 1/2 logdet(I + sigma_eps^{-2} K_A); the greedy value
/// is a (1 - 1/e) approximation, reported as an estimate only.
double info_gain_greedy(const KernelParams& kp, const ArrayConfig& cfg, double sigma_eps_sq,
                        int t);

/// Memoized greedy gamma estimator for the RKHS schedule; saturates at
/// the grid size.
std::function<double(int)> make_greedy_gamma(const KernelParams& kp, const ArrayConfig& cfg,
                                             double sigma_eps_sq);

enum class BeamClass { High, Low, Undecided };

/// Monotone LSE bookkeeping: intersected confidence bounds, the grown H/L
/// partitions and the undecided remainder.
struct LseState {
    double tau = 0.0;
    double epsilon = 0.0;
    BetaSchedule beta;
    int t = 0;  // probes incorporated so far
    Eigen::VectorXd lower, upper;
    std::vector<BeamClass> cls;
    int n_high = 0, n_low = 0, n_undecided = 0;
    double max_ambiguity = std::numeric_limits<double>::infinity();

    static LseState init(const ArrayConfig& cfg, double tau, double epsilon, BetaSchedule beta);
};

struct LseStepResult {
    bool done = false;
    BeamIndex next;  // valid when !done
};

/// One LSE round: shrink intervals with the current posterior, migrate
/// undecided indices into H/L, then select the most ambiguous undecided
/// index (ties broken by lowest linear index). Done when U is empty or the
/// max ambiguity drops to epsilon.
LseStepResult lse_step(LseState& state, const GpPosterior& post);

struct SupportResult {
    std::vector<BeamIndex> support;  // ascending linear order
    bool used_topk = false;          // fixed-budget Top-K patch was applied
    bool fallback_singleton = false; // H and U empty; argmax-mean index taken
    bool h_capped = false;           // completed H exceeded the hard cap
};

/// Stage I output: S = H when classification completed, otherwise the Top-K
/// posterior-mean patch over H u U with K = k_cap. |S| >= 1 is enforced.
/// h_cap > 0 bounds a completed H by posterior-mean ranking (the measurement
/// budget downstream fixes how many support beams are recoverable).
SupportResult finalize_support(const LseState& state, const GpPosterior& post, int k_cap,
                               int h_cap = 0);

// ---------------------------------------------------------------------------
// Stage I driver

/// Probing is restricted to DFT codewords by construction: the callback
/// receives a BeamIndex and returns the complex observation y = h^H f_i + w.
using ProbeFn = std::function<std::complex<double>(const BeamIndex&)>;

struct StageOneConfig {
    int budget = 1;  // T1
    double warmup_fraction = 0.1;
    double tau_quantile = 0.7;
    double tau_floor_sigma_mult = 3.0;
    double epsilon_frac = 0.1;
    KernelParams kernel;
    std::string beta_mode = "constant";  // "constant" | "rkhs"
    double beta_const = 9.0;
    double b_f = 1.0;
    double beta_delta = 0.05;
    double sigma_sq = 0.0;
    double delta_bd = 0.05;
    double c1 = 1.0;
    int k_cap = 1;
    int support_hard_cap = 0;  // bound on |S| even when classification completes
    // The Top-K patch shrinks K below k_cap until the estimated per-probe
    // Stage II SNR, sum of the top-K posterior power estimates over K sigma^2,
    // clears this floor. 0 disables the adaptation.
    double stage2_snr_floor = 4.5;
    bool debias = true;  // false: feed raw |y|^2 (ablation)
    // sigma_eps^2 rule: variance proxy sigma^4 + 2 sigma^2 f_max, optionally
    // lifted to max(B_T1^2, variance).
    bool conservative_regularization = false;
    std::optional<double> sigma_eps_sq_override;
};

struct StageOneTraceRow {
    int step = 0;
    int probe_lin = -1;  // -1 for the classification-only final step
    double z = 0.0;      // debiased power fed to the GP (raw units)
    int n_high = 0, n_low = 0, n_undecided = 0;
    double max_ambiguity = 0.0;
};

struct StageOneResult {
    SupportResult support;
    int probes_used = 0;
    int steps = 0;
    double tau_raw = 0.0, epsilon_raw = 0.0;
    double scale = 1.0;        // power normalization fed to the GP
    double sigma_eps_sq = 0.0; // normalized units
    int n_high = 0, n_low = 0, n_undecided = 0;
};

/// Runs warm-up probing on a coarse uniform sub-grid, sets tau as a quantile
/// of the debiased warm-up powers (floored at tau_floor_sigma_mult * sigma^2),
/// then iterates GP-LSE until Done or the budget T1 is exhausted.
StageOneResult run_stage_one(const ArrayConfig& cfg, const ProbeFn& probe,
                             const StageOneConfig& s1, std::vector<StageOneTraceRow>* trace = nullptr);

}  // namespace nfbt
