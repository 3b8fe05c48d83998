#pragma once

#include "nfbt/phase_retrieval.hpp"

namespace nfbt {

struct BaselineResult {
    std::string method;
    CVec h_hat;
    int probes_used = 0;
    int best_index = -1;  // exhaustive search only
    int iters = 0;
    bool degenerate = false;
};

/// Probes all N DFT beams once, |h^H f_i + w_i|, and returns the
/// highest-power codeword (ties to the lowest linear index).
BaselineResult exhaustive_dft(const Channel& ch, const Codebook& cb, double sigma_sq, Rng& rng);

/// Gaussian-masked sensing and Rician-SPARTA over the full DFT beamspace
/// (support = the whole grid); identical pipeline to phase_retrieval::solve.
BaselineResult r_sparta_full(const Channel& ch, const Codebook& cb, double sigma_sq, int budget,
                             Rng& rng, const SpartaConfig& cfg);

struct SwfConfig {
    int k = 1;
    double mu = 0.2;     // stepsize in units of the ||z0||^2-normalized step
    int init_card = 0;   // 0 selects ceil(M/6)
    int max_iters = 400;
    double tol = 1e-7;
};

/// One intensity-loss gradient step followed by hard thresholding:
/// z <- H_k(z - mu (1/M) sum (|g_p^H z|^2 - psi_p^2) g_p g_p^H z).
Eigen::VectorXcd swf_iterate(const Eigen::VectorXcd& z, const SensingSet& set,
                             const Eigen::VectorXd& psi, int k, double mu);

/// Intensity-loss gradient descent with hard thresholding on the full grid,
/// sharing the sensing model, Rician pseudo-amplitudes and spectral init
/// with SPARTA.
BaselineResult r_swf_full(const Channel& ch, const Codebook& cb, double sigma_sq, int budget,
                          Rng& rng, const SwfConfig& cfg);

}  // namespace nfbt
