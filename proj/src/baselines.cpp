#include "nfbt/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace nfbt {

namespace {
std::vector<BeamIndex> full_grid(const ArrayConfig& cfg) {
    std::vector<BeamIndex> all;
    all.reserve(cfg.n);
    for (int lin = 0; lin < cfg.n; ++lin) all.push_back(beam_from_linear(cfg, lin));
    return all;
}
}  // namespace

BaselineResult exhaustive_dft(const Channel& ch, const Codebook& cb, double sigma_sq, Rng& rng) {
    const ArrayConfig& cfg = cb.config();
    BaselineResult out;
    out.method = "exhaustive_dft";
    out.degenerate = ch.h.norm() == 0.0;

    BeamspaceVector s = cb.to_beamspace(ch.h);
    Rng noise = rng.derive(stream::kNoise);
    int best = 0;
    double best_amp = -1.0;
    for (int lin = 0; lin < cfg.n; ++lin) {
        // h^H f_i = conj(s_i)
        double amp = std::abs(std::conj(s(lin)) + noise.cnormal(sigma_sq));
        if (amp > best_amp) {
            best_amp = amp;
            best = lin;
        }
    }
    out.best_index = best;
    out.h_hat = cb.codeword(best);
    out.probes_used = cfg.n;
    return out;
}

BaselineResult r_sparta_full(const Channel& ch, const Codebook& cb, double sigma_sq, int budget,
                             Rng& rng, const SpartaConfig& cfg) {
    if (budget < 1) throw std::invalid_argument("r_sparta_full: budget must be >= 1");
    Rng masks_rng = rng.derive(stream::kMasks);
    Rng noise_rng = rng.derive(stream::kNoise);

    SensingSet set = build_sensing(full_grid(cb.config()), budget, masks_rng);
    Eigen::VectorXd y = observe(ch, cb, set, sigma_sq, noise_rng);
    PseudoAmplitudes pa = rician_denoise(y, sigma_sq);
    Estimate est = solve(cb, set, pa.psi, cfg);

    BaselineResult out;
    out.method = "r_sparta";
    out.h_hat = est.h_hat;
    out.probes_used = budget;
    out.iters = est.iters_used;
    out.degenerate = est.no_signal;
    return out;
}

Eigen::VectorXcd swf_iterate(const Eigen::VectorXcd& z, const SensingSet& set,
                             const Eigen::VectorXd& psi, int k, double mu) {
    Eigen::VectorXcd c = set.masks.adjoint() * z;
    Eigen::VectorXcd grad = Eigen::VectorXcd::Zero(set.k());
    for (int p = 0; p < set.m2(); ++p) {
        double resid = std::norm(c(p)) - psi(p) * psi(p);
        grad.noalias() += resid * c(p) * set.masks.col(p);
    }
    grad /= static_cast<double>(set.m2());
    return hard_threshold(z - mu * grad, k);
}

BaselineResult r_swf_full(const Channel& ch, const Codebook& cb, double sigma_sq, int budget,
                          Rng& rng, const SwfConfig& cfg) {
    if (budget < 1) throw std::invalid_argument("r_swf_full: budget must be >= 1");
    const int k_dim = cb.size();
    if (cfg.k < 1 || cfg.k > k_dim) throw std::invalid_argument("r_swf_full: need 1 <= k <= N");

    Rng masks_rng = rng.derive(stream::kMasks);
    Rng noise_rng = rng.derive(stream::kNoise);
    SensingSet set = build_sensing(full_grid(cb.config()), budget, masks_rng);
    Eigen::VectorXd y = observe(ch, cb, set, sigma_sq, noise_rng);
    PseudoAmplitudes pa = rician_denoise(y, sigma_sq);

    BaselineResult out;
    out.method = "r_swf";
    out.probes_used = budget;

    SpartaConfig init_cfg;
    init_cfg.k = cfg.k;
    init_cfg.init_card = cfg.init_card;
    bool no_signal = false;
    Eigen::VectorXcd z = spectral_init(set, pa.psi, init_cfg, &no_signal);
    if (no_signal) {
        out.h_hat = CVec::Zero(k_dim);
        out.degenerate = true;
        return out;
    }

    // Wirtinger-flow convention: the raw intensity gradient is scaled by
    // 1/||z0||^2; the extra K^2 compensates the CN(0, I/K) mask covariance so
    // cfg.mu is comparable to the unit-covariance stepsize.
    double z0_sq = std::max(z.squaredNorm(), 1e-300);
    double mu_eff = cfg.mu * static_cast<double>(k_dim) * k_dim / z0_sq;

    auto intensity_loss = [&](const Eigen::VectorXcd& zz) {
        Eigen::VectorXd amp_sq = (set.masks.adjoint() * zz).cwiseAbs2();
        return (pa.psi.array().square() - amp_sq.array()).square().mean();
    };

    double loss = intensity_loss(z);
    for (int it = 0; it < cfg.max_iters; ++it) {
        Eigen::VectorXcd next = swf_iterate(z, set, pa.psi, cfg.k, mu_eff);
        double new_loss = intensity_loss(next);
        int halvings = 0;
        while (new_loss > loss && halvings < 30) {
            mu_eff *= 0.5;
            ++halvings;
            next = swf_iterate(z, set, pa.psi, cfg.k, mu_eff);
            new_loss = intensity_loss(next);
        }
        if (new_loss > loss) break;

        double rel = (next - z).norm() / std::max(z.norm(), 1e-300);
        z = next;
        loss = new_loss;
        out.iters = it + 1;
        if (rel < cfg.tol) break;
    }

    BeamspaceVector padded = BeamspaceVector::Zero(k_dim);
    for (int i = 0; i < k_dim; ++i) padded(i) = z(i);
    out.h_hat = cb.from_beamspace(padded);
    return out;
}

}  // namespace nfbt
