#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nfbt/beamspace.hpp"
#include "nfbt/channel.hpp"

namespace nfbt {

/// Discovered support with its Gaussian masks g_p ~ CN(0, I/K); the probing
/// beams v_p = F_S^H g_p live in the span of the support codewords and are
/// materialized lazily.
struct SensingSet {
    std::vector<BeamIndex> support;  // ordered
    Eigen::MatrixXcd masks;          // K x M2, column p = g_p

    int k() const { return static_cast<int>(support.size()); }
    int m2() const { return static_cast<int>(masks.cols()); }
};

SensingSet build_sensing(const std::vector<BeamIndex>& support, int m2, Rng& rng);

/// Materialized probing beam v_p = sum_k f_{S[k]} g_{p,k} (length N).
CVec sensing_beam(const Codebook& cb, const SensingSet& set, int p);

/// Beamspace coefficients of h restricted to the support.
Eigen::VectorXcd support_coefficients(const Codebook& cb, const SensingSet& set, const CVec& h);

/// Amplitude-only observations y_p = |h^H v_p + w_p|, w_p ~ CN(0, sigma^2).
/// Computed through the equivalent low-dimensional model |s_S^H g_p + w_p|.
Eigen::VectorXd observe(const Channel& ch, const Codebook& cb, const SensingSet& set,
                        double sigma_sq, Rng& rng);

struct PseudoAmplitudes {
    Eigen::VectorXd y;    // raw amplitudes, >= 0
    Eigen::VectorXd psi;  // sqrt([y^2 - sigma^2]_+)
    double sigma_sq = 0.0;
};

PseudoAmplitudes rician_denoise(const Eigen::VectorXd& y, double sigma_sq);

struct SpartaConfig {
    int k = 1;               // sparsity level, 1 <= k <= K
    double mu = 0.0;         // stepsize in the gradient update; 0 selects K,
                             // the scale matching a unit-step on unit-covariance masks
    double trunc_gamma = 0.7;
    int init_card = 0;       // spectral-init sample count; 0 selects ceil(M2/6)
    int max_iters = 400;
    double tol = 1e-7;       // relative iterate-change stop
};

struct Estimate {
    Eigen::VectorXcd s_hat;  // K-vector, ||s_hat||_0 <= k
    CVec h_hat;              // F_S^H s_hat
    int iters_used = 0;
    bool converged = false;
    bool no_signal = false;  // all-zero pseudo-amplitudes
    bool empty_truncation = false;
};

/// Keeps the k largest-magnitude entries (ties to the lowest index).
Eigen::VectorXcd hard_threshold(const Eigen::VectorXcd& z, int k);

/// Scaled principal eigenvector of the sample covariance over the init_card
/// largest pseudo-amplitudes, hard-thresholded to k entries. The scale
/// sqrt(K * mean(psi^2)) is the unbiased norm estimate under CN(0, I/K) masks.
Eigen::VectorXcd spectral_init(const SensingSet& set, const Eigen::VectorXd& psi,
                               const SpartaConfig& cfg, bool* no_signal = nullptr);

struct SpartaIter {
    Eigen::VectorXcd z;
    int truncation_size = 0;
    bool empty_truncation = false;  // z returned unchanged
};

/// One truncated amplitude-flow step followed by hard thresholding. The
/// truncation set keeps p with |g_p^H z| >= psi_p / (1 + trunc_gamma).
SpartaIter sparta_iterate(const Eigen::VectorXcd& z, const SensingSet& set,
                          const Eigen::VectorXd& psi, const SpartaConfig& cfg, double mu);

/// Amplitude loss (1/M2) sum (psi_p - |g_p^H z|)^2.
double amplitude_loss(const Eigen::VectorXcd& z, const SensingSet& set,
                      const Eigen::VectorXd& psi);

struct StageTwoTraceRow {
    int iter = 0;
    double loss = 0.0;
    int truncation_size = 0;
};

/// Spectral init plus SPARTA iterations until the relative change drops
/// below tol or max_iters is hit. The amplitude loss is non-increasing
/// across accepted iterations; a rise triggers stepsize halving.
Estimate solve(const Codebook& cb, const SensingSet& set, const Eigen::VectorXd& psi,
               const SpartaConfig& cfg, std::vector<StageTwoTraceRow>* trace = nullptr);

/// Mean-value-theorem bound for the pseudo-amplitude map: whenever |eps| <= a^2/2,
/// |sqrt([a^2 + eps]_+) - a| <= |eps| / a. Returns true when the bound holds
/// (vacuously true if the hypothesis fails). Property-test helper; not used
/// in the solve path.
bool pseudo_amplitude_bound_check(double a, double eps);

/// Phase-aligned relative distance min_phi ||a - e^{j phi} b|| / ||b||.
double phase_aligned_dist(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);

}  // namespace nfbt
