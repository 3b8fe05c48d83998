#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nfbt/channel.hpp"

namespace nfbt {

using BeamspaceVector = Eigen::VectorXcd;

/// 2D DFT grid coordinate (n, m) with angular grid points
/// u_n = (2n - n_y + 1)/n_y and v_m = (2m - n_z + 1)/n_z.
struct BeamIndex {
    int n = 0;  // y-axis DFT index in [0, n_y)
    int m = 0;  // z-axis DFT index in [0, n_z)

    bool operator==(const BeamIndex&) const = default;
};

inline double grid_u(const ArrayConfig& cfg, int n) { return (2.0 * n - cfg.n_y + 1.0) / cfg.n_y; }
inline double grid_v(const ArrayConfig& cfg, int m) { return (2.0 * m - cfg.n_z + 1.0) / cfg.n_z; }
inline int beam_linear_index(const ArrayConfig& cfg, const BeamIndex& idx) {
    return idx.n * cfg.n_z + idx.m;
}
inline BeamIndex beam_from_linear(const ArrayConfig& cfg, int lin) {
    return {lin / cfg.n_z, lin % cfg.n_z};
}

/// 1D unit-norm DFT vectors at arbitrary spatial cosine, entries
/// exp(-j 2pi/lambda d u delta_i) / sqrt(N_axis).
CVec dft_axis_y(const ArrayConfig& cfg, double u);
CVec dft_axis_z(const ArrayConfig& cfg, double v);

/// Axis-wise separable Fresnel steering vectors b_y(u, r), b_z(v, r).
CVec fresnel_axis_y(const ArrayConfig& cfg, double u, double r);
CVec fresnel_axis_z(const ArrayConfig& cfg, double v, double r);

/// 2D codeword a_y(u) (x) a_z(v) at an arbitrary off-grid point.
CVec dft_codeword_at(const ArrayConfig& cfg, double u, double v);

CVec dft_codeword(const ArrayConfig& cfg, const BeamIndex& idx);

/// Unitary beamspace transform F with rows f_i^H in BeamIndex order,
/// s = F h. Codewords are evaluated lazily from cached 1D factors; the
/// transform itself uses the separable fast path. dense() exists for tests.
class Codebook {
public:
    explicit Codebook(const ArrayConfig& cfg);

    const ArrayConfig& config() const { return cfg_; }
    int size() const { return cfg_.n; }

    CVec codeword(const BeamIndex& idx) const;
    CVec codeword(int linear) const { return codeword(beam_from_linear(cfg_, linear)); }

    BeamspaceVector to_beamspace(const CVec& h) const;
    CVec from_beamspace(const BeamspaceVector& s) const;

    Eigen::MatrixXcd dense() const;  // F, N x N

private:
    ArrayConfig cfg_;
    Eigen::MatrixXcd ay_;  // columns a_y(u_n)
    Eigen::MatrixXcd az_;  // columns a_z(v_m)
};

struct LobeWidthReport {
    char axis = 'y';
    double b_measured = 0.0;    // superlevel-set width in u/v units
    double b_predicted = 0.0;   // N_axis d (1 - xi0^2) / r
    int grid_resolution = 0;    // samples over [-1, 1]
    bool disconnected = false;  // 6-dB superlevel set had gaps
    bool far_field = false;     // predicted width below the DFT-limited floor
};

/// Samples the axis-wise normalized Fresnel response on a uniform grid over
/// [-1, 1], thresholds at 1/2 and returns max - min of the superlevel set.
LobeWidthReport measure_lobe_width(const ArrayConfig& cfg, const SphericalPoint& p, char axis,
                                   int resolution = 4096);

struct SparsityEstimate {
    double expected_k = 0.0;
    double xi_r = 0.0;
    double xi_vs = 0.0;
    double mu2 = 0.0;
    double mu4 = 0.0;
    double nu2 = 0.0;
};

/// Closed-form expected number of active 2D DFT indices,
/// E[K] = L N_y N_z d^2 Xi_{v,s} Xi_r / (Delta_y Delta_z).
SparsityEstimate expected_sparsity(const ArrayConfig& cfg, const ScenarioPrior& prior);

double beam_gain(const ArrayConfig& cfg, const SphericalPoint& p, const BeamIndex& idx);

}  // namespace nfbt
