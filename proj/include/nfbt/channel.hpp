#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "nfbt/rng.hpp"

namespace nfbt {

using Vec3 = Eigen::Vector3d;
using CVec = Eigen::VectorXcd;

inline constexpr double kSpeedOfLight = 299792458.0;

/// UPA geometry and carrier. Element (i, j) sits at (0, delta_i * d, delta_j * d)
/// with centered offsets delta_i = (2i - n_y + 1)/2; flattening is row-major
/// with the y index outer and the z index inner, matching a_y (x) a_z.
struct ArrayConfig {
    int n_y = 1;
    int n_z = 1;
    double f_c = 28e9;  // carrier [Hz]
    double d = 0.0;     // element spacing [m]; 0 selects lambda/2

    ArrayConfig() = default;
    ArrayConfig(int ny, int nz, double fc, double spacing = 0.0);

    double lambda_m = 0.0;
    int n = 1;                    // n_y * n_z
    double aperture_m = 0.0;      // UPA diagonal
    double fresnel_distance = 0.0;
    double rayleigh_distance = 0.0;

    int flat_index(int i, int j) const { return i * n_z + j; }
};

/// BS-relative point in spherical coordinates; u = sin(theta) sin(phi),
/// v = cos(theta) are the beamspace angular variables.
struct SphericalPoint {
    double r = 1.0;       // range [m] > 0
    double theta = 0.0;   // elevation [rad] in [0, pi]
    double phi = 0.0;     // azimuth [rad] in [-pi, pi]

    double u() const { return std::sin(theta) * std::sin(phi); }
    double v() const { return std::cos(theta); }

    // Inverse parameterization from (v, s = sin(phi), r); phi in [-pi/2, pi/2].
    static SphericalPoint from_vs(double v, double s, double r);
};

struct PathSpec {
    enum class Kind { LoS, NLoS };
    Kind kind = Kind::LoS;
    SphericalPoint point;                         // user (LoS) or scatterer (NLoS)
    double scatter_to_user_distance = 0.0;        // r_{l,1}, NLoS only
    std::complex<double> reflection_coeff = 1.0;  // p_l ~ CN(0,1), NLoS only
};

struct Channel {
    CVec h;                       // length N
    std::vector<PathSpec> paths;
};

/// Independent uniform priors on v = cos(theta), s = sin(phi), r.
struct ScenarioPrior {
    double v_lo = -0.5, v_hi = 0.5;
    double s_lo = -0.5, s_hi = 0.5;
    double r_lo = 1.0, r_hi = 10.0;  // [m]
    int num_paths = 1;

    void validate() const;
};

Vec3 element_position(const ArrayConfig& cfg, int i, int j);

/// Unit-norm near-field steering vector b(theta, phi, r), entries
/// exp(j 2pi/lambda (||r q - r_ij|| - r)) / sqrt(N) in flat order. The
/// far-field limit at fixed (u, v) is the 2D DFT codeword at (u, v).
CVec steering_vector(const ArrayConfig& cfg, const SphericalPoint& p);

/// Sums the per-path contributions: LoS uses sqrt(N) g0 e^{-j2pi r0/lambda} b,
/// NLoS uses the two-hop gain lambda/(4 pi r0 r1) |p| and phase over r0 + r1.
Channel generate_channel(const ArrayConfig& cfg, const std::vector<PathSpec>& paths);

/// Draws L paths: the first is the LoS user, the rest are single-bounce
/// scatterers from the same (v, s, r) prior with p_l ~ CN(0,1).
std::vector<PathSpec> sample_scenario(const ScenarioPrior& prior, Rng& rng);

/// Variant with separate priors for the user and the scatterers (the
/// distance sweep pins the user range); num_paths comes from los_prior.
std::vector<PathSpec> sample_scenario(const ScenarioPrior& los_prior,
                                      const ScenarioPrior& scatter_prior, Rng& rng);

}  // namespace nfbt
