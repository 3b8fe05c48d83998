#include "nfbt/phase_retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nfbt {

SensingSet build_sensing(const std::vector<BeamIndex>& support, int m2, Rng& rng) {
    if (support.empty()) throw std::invalid_argument("build_sensing: empty support");
    if (m2 < 1) throw std::invalid_argument("build_sensing: m2 must be >= 1");
    SensingSet set;
    set.support = support;
    int k = set.k();
    set.masks.resize(k, m2);
    for (int p = 0; p < m2; ++p)
        for (int i = 0; i < k; ++i) set.masks(i, p) = rng.cnormal(1.0 / k);
    return set;
}

CVec sensing_beam(const Codebook& cb, const SensingSet& set, int p) {
    if (p < 0 || p >= set.m2()) throw std::out_of_range("sensing_beam: p out of range");
    CVec v = CVec::Zero(cb.size());
    for (int i = 0; i < set.k(); ++i) v += set.masks(i, p) * cb.codeword(set.support[i]);
    return v;
}

Eigen::VectorXcd support_coefficients(const Codebook& cb, const SensingSet& set, const CVec& h) {
    BeamspaceVector s = cb.to_beamspace(h);
    Eigen::VectorXcd out(set.k());
    for (int i = 0; i < set.k(); ++i) out(i) = s(beam_linear_index(cb.config(), set.support[i]));
    return out;
}

Eigen::VectorXd observe(const Channel& ch, const Codebook& cb, const SensingSet& set,
                        double sigma_sq, Rng& rng) {
    if (sigma_sq < 0.0) throw std::invalid_argument("observe: sigma_sq must be >= 0");
    if (ch.h.size() != cb.size()) throw std::invalid_argument("observe: dimension mismatch");
    Eigen::VectorXcd s_s = support_coefficients(cb, set, ch.h);
    Eigen::VectorXd y(set.m2());
    for (int p = 0; p < set.m2(); ++p) {
        // h^H v_p = s_S^H g_p exactly; energy outside the support never enters.
        std::complex<double> clean = s_s.dot(set.masks.col(p));
        y(p) = std::abs(clean + rng.cnormal(sigma_sq));
    }
    return y;
}

PseudoAmplitudes rician_denoise(const Eigen::VectorXd& y, double sigma_sq) {
    if (sigma_sq < 0.0) throw std::invalid_argument("rician_denoise: sigma_sq must be >= 0");
    PseudoAmplitudes out;
    out.y = y;
    out.sigma_sq = sigma_sq;
    out.psi = (y.array().square() - sigma_sq).max(0.0).sqrt();
    return out;
}

Eigen::VectorXcd hard_threshold(const Eigen::VectorXcd& z, int k) {
    int n = static_cast<int>(z.size());
    if (k >= n) return z;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        double ma = std::abs(z(a)), mb = std::abs(z(b));
        if (ma != mb) return ma > mb;
        return a < b;
    });
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
    for (int i = 0; i < k; ++i) out(order[i]) = z(order[i]);
    return out;
}

Eigen::VectorXcd spectral_init(const SensingSet& set, const Eigen::VectorXd& psi,
                               const SpartaConfig& cfg, bool* no_signal) {
    const int k_dim = set.k();
    const int m2 = set.m2();
    if (psi.size() != m2) throw std::invalid_argument("spectral_init: psi length mismatch");
    int card = cfg.init_card > 0 ? cfg.init_card : (m2 + 5) / 6;
    if (card > m2) throw std::invalid_argument("spectral_init: init_card exceeds M2");
    card = std::max(card, 1);

    if (no_signal) *no_signal = false;
    if (psi.maxCoeff() <= 0.0) {
        if (no_signal) *no_signal = true;
        return Eigen::VectorXcd::Zero(k_dim);
    }

    std::vector<int> order(m2);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (psi(a) != psi(b)) return psi(a) > psi(b);
        return a < b;
    });

    Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(k_dim, k_dim);
    for (int i = 0; i < card; ++i) {
        const auto& g = set.masks.col(order[i]);
        cov.noalias() += g * g.adjoint();
    }
    cov /= static_cast<double>(card);

    // Power iteration; start from the largest-norm column for a deterministic
    // direction with guaranteed overlap.
    int c0 = 0;
    double best = -1.0;
    for (int c = 0; c < k_dim; ++c) {
        double nc = cov.col(c).norm();
        if (nc > best) {
            best = nc;
            c0 = c;
        }
    }
    Eigen::VectorXcd v = cov.col(c0);
    if (v.norm() == 0.0) v = Eigen::VectorXcd::Ones(k_dim);
    v.normalize();
    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXcd nv = cov * v;
        double nn = nv.norm();
        if (nn == 0.0) break;
        nv /= nn;
        // cov is PSD, so successive iterates keep a real nonnegative overlap
        // and the plain difference is a valid convergence measure.
        double change = (nv - v).norm();
        v = nv;
        if (change < 1e-8) break;
    }

    double norm_est = std::sqrt(k_dim * psi.array().square().mean());
    return hard_threshold(v * norm_est, std::clamp(cfg.k, 1, k_dim));
}

SpartaIter sparta_iterate(const Eigen::VectorXcd& z, const SensingSet& set,
                          const Eigen::VectorXd& psi, const SpartaConfig& cfg, double mu) {
    const int k_dim = set.k();
    const int m2 = set.m2();
    if (z.size() != k_dim) throw std::invalid_argument("sparta_iterate: z dimension mismatch");

    SpartaIter out;
    Eigen::VectorXcd c = set.masks.adjoint() * z;  // c_p = g_p^H z
    double thresh_scale = 1.0 / (1.0 + cfg.trunc_gamma);

    Eigen::VectorXcd grad = Eigen::VectorXcd::Zero(k_dim);
    int kept = 0;
    for (int p = 0; p < m2; ++p) {
        double amp = std::abs(c(p));
        if (amp < psi(p) * thresh_scale) continue;
        ++kept;
        if (amp == 0.0) continue;  // zero-residual direction dropped by convention
        grad.noalias() += (amp - psi(p)) / amp * c(p) * set.masks.col(p);
    }
    out.truncation_size = kept;
    if (kept == 0) {
        out.empty_truncation = true;
        out.z = z;
        return out;
    }
    out.z = hard_threshold(z - (mu / kept) * grad, std::clamp(cfg.k, 1, k_dim));
    return out;
}

double amplitude_loss(const Eigen::VectorXcd& z, const SensingSet& set,
                      const Eigen::VectorXd& psi) {
    Eigen::VectorXd amp = (set.masks.adjoint() * z).cwiseAbs();
    return (psi - amp).squaredNorm() / set.m2();
}

Estimate solve(const Codebook& cb, const SensingSet& set, const Eigen::VectorXd& psi,
               const SpartaConfig& cfg, std::vector<StageTwoTraceRow>* trace) {
    const int k_dim = set.k();
    if (cfg.k < 1 || cfg.k > k_dim) throw std::invalid_argument("solve: need 1 <= k <= K");
    if (cfg.max_iters < 0 || cfg.tol < 0.0) throw std::invalid_argument("solve: bad stopping rule");

    Estimate est;
    bool no_signal = false;
    Eigen::VectorXcd z = spectral_init(set, psi, cfg, &no_signal);
    if (no_signal) {
        est.s_hat = Eigen::VectorXcd::Zero(k_dim);
        est.no_signal = true;
        est.converged = true;
        est.h_hat = CVec::Zero(cb.size());
        return est;
    }

    double mu = cfg.mu > 0.0 ? cfg.mu : static_cast<double>(k_dim);
    double loss = amplitude_loss(z, set, psi);
    for (int it = 0; it < cfg.max_iters; ++it) {
        SpartaIter step = sparta_iterate(z, set, psi, cfg, mu);
        if (step.empty_truncation) {
            est.empty_truncation = true;
            break;
        }
        double new_loss = amplitude_loss(step.z, set, psi);
        int halvings = 0;
        while (new_loss > loss && halvings < 30) {
            mu *= 0.5;
            ++halvings;
            step = sparta_iterate(z, set, psi, cfg, mu);
            new_loss = amplitude_loss(step.z, set, psi);
        }
        if (new_loss > loss) break;  // cannot make progress at the minimum step

        double denom = std::max(z.norm(), 1e-300);
        double rel_change = (step.z - z).norm() / denom;
        z = step.z;
        loss = new_loss;
        est.iters_used = it + 1;
        if (trace) trace->push_back({it + 1, loss, step.truncation_size});
        if (rel_change < cfg.tol) {
            est.converged = true;
            break;
        }
    }

    est.s_hat = z;
    BeamspaceVector padded = BeamspaceVector::Zero(cb.size());
    for (int i = 0; i < k_dim; ++i)
        padded(beam_linear_index(cb.config(), set.support[i])) = z(i);
    est.h_hat = cb.from_beamspace(padded);
    return est;
}

bool pseudo_amplitude_bound_check(double a, double eps) {
    if (a <= 0.0) throw std::invalid_argument("pseudo_amplitude_bound_check: a must be positive");
    if (std::abs(eps) > a * a / 2.0) return true;  // outside the hypothesis
    double psi = std::sqrt(std::max(a * a + eps, 0.0));
    return std::abs(psi - a) <= std::abs(eps) / a + 1e-15;
}

double phase_aligned_dist(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    double nb = b.norm();
    if (nb == 0.0) throw std::invalid_argument("phase_aligned_dist: reference is zero");
    double cross = std::abs(a.dot(b));
    double d_sq = a.squaredNorm() + b.squaredNorm() - 2.0 * cross;
    return std::sqrt(std::max(d_sq, 0.0)) / nb;
}

}  // namespace nfbt
