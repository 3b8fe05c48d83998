#include "nfbt/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nfbt {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPi = 4.0 * std::numbers::pi;
}  // namespace

ArrayConfig::ArrayConfig(int ny, int nz, double fc, double spacing)
    : n_y(ny), n_z(nz), f_c(fc), d(spacing) {
    if (n_y < 1 || n_z < 1) throw std::invalid_argument("ArrayConfig: antenna counts must be >= 1");
    if (f_c <= 0.0) throw std::invalid_argument("ArrayConfig: carrier frequency must be positive");
    lambda_m = kSpeedOfLight / f_c;
    if (d == 0.0) d = 0.5 * lambda_m;
    if (d <= 0.0) throw std::invalid_argument("ArrayConfig: element spacing must be positive");
    n = n_y * n_z;
    double ay = (n_y - 1) * d;
    double az = (n_z - 1) * d;
    aperture_m = std::sqrt(ay * ay + az * az);
    fresnel_distance = 0.62 * std::sqrt(aperture_m * aperture_m * aperture_m / lambda_m);
    rayleigh_distance = 2.0 * aperture_m * aperture_m / lambda_m;
}

SphericalPoint SphericalPoint::from_vs(double v, double s, double r) {
    if (std::abs(v) > 1.0 || std::abs(s) > 1.0)
        throw std::invalid_argument("SphericalPoint: |v| and |s| must be <= 1");
    if (r <= 0.0) throw std::invalid_argument("SphericalPoint: range must be positive");
    SphericalPoint p;
    p.r = r;
    p.theta = std::acos(v);
    p.phi = std::asin(s);
    return p;
}

void ScenarioPrior::validate() const {
    if (v_lo > v_hi || v_lo < -1.0 || v_hi > 1.0)
        throw std::invalid_argument("ScenarioPrior: v range must be within [-1, 1]");
    if (s_lo > s_hi || s_lo < -1.0 || s_hi > 1.0)
        throw std::invalid_argument("ScenarioPrior: s range must be within [-1, 1]");
    if (!(r_lo > 0.0) || r_lo > r_hi)
        throw std::invalid_argument("ScenarioPrior: need 0 < r_lo <= r_hi");
    if (num_paths < 1) throw std::invalid_argument("ScenarioPrior: num_paths must be >= 1");
}

Vec3 element_position(const ArrayConfig& cfg, int i, int j) {
    if (i < 0 || i >= cfg.n_y || j < 0 || j >= cfg.n_z)
        throw std::out_of_range("element_position: index out of range");
    double delta_i = (2.0 * i - cfg.n_y + 1.0) / 2.0;
    double delta_j = (2.0 * j - cfg.n_z + 1.0) / 2.0;
    return {0.0, delta_i * cfg.d, delta_j * cfg.d};
}

CVec steering_vector(const ArrayConfig& cfg, const SphericalPoint& p) {
    if (p.r <= 0.0) throw std::invalid_argument("steering_vector: range must be positive");
    double st = std::sin(p.theta);
    Vec3 q{st * std::cos(p.phi), st * std::sin(p.phi), std::cos(p.theta)};
    Vec3 src = p.r * q;
    double scale = 1.0 / std::sqrt(static_cast<double>(cfg.n));
    double k = kTwoPi / cfg.lambda_m;
    CVec b(cfg.n);
    // Phase sign chosen so the far-field limit coincides with the DFT
    // codeword at the same (u, v): dist - r -> -d (u delta_i + v delta_j).
    for (int i = 0; i < cfg.n_y; ++i) {
        for (int j = 0; j < cfg.n_z; ++j) {
            double dist = (src - element_position(cfg, i, j)).norm();
            double phase = k * (dist - p.r);
            b(cfg.flat_index(i, j)) = std::polar(scale, phase);
        }
    }
    return b;
}

Channel generate_channel(const ArrayConfig& cfg, const std::vector<PathSpec>& paths) {
    if (paths.empty()) throw std::invalid_argument("generate_channel: path list is empty");
    Channel ch;
    ch.paths = paths;
    ch.h = CVec::Zero(cfg.n);
    double sqrt_n = std::sqrt(static_cast<double>(cfg.n));
    for (const PathSpec& path : paths) {
        CVec b = steering_vector(cfg, path.point);
        double r0 = path.point.r;
        if (path.kind == PathSpec::Kind::LoS) {
            double g0 = cfg.lambda_m / (kFourPi * r0);
            ch.h += sqrt_n * g0 * std::polar(1.0, -kTwoPi * r0 / cfg.lambda_m) * b;
        } else {
            double r1 = path.scatter_to_user_distance;
            if (r1 <= 0.0)
                throw std::invalid_argument("generate_channel: NLoS path needs positive r_{l,1}");
            std::complex<double> g = cfg.lambda_m / (kFourPi * r0 * r1) * path.reflection_coeff;
            ch.h += sqrt_n * g * std::polar(1.0, -kTwoPi * (r0 + r1) / cfg.lambda_m) * b;
        }
    }
    return ch;
}

std::vector<PathSpec> sample_scenario(const ScenarioPrior& prior, Rng& rng) {
    return sample_scenario(prior, prior, rng);
}

std::vector<PathSpec> sample_scenario(const ScenarioPrior& los_prior,
                                      const ScenarioPrior& scatter_prior, Rng& rng) {
    los_prior.validate();
    scatter_prior.validate();
    auto draw_point = [&](const ScenarioPrior& prior) {
        double v = rng.uniform(prior.v_lo, prior.v_hi);
        double s = rng.uniform(prior.s_lo, prior.s_hi);
        double r = rng.uniform(prior.r_lo, prior.r_hi);
        return SphericalPoint::from_vs(v, s, r);
    };

    std::vector<PathSpec> paths;
    paths.reserve(los_prior.num_paths);

    PathSpec los;
    los.kind = PathSpec::Kind::LoS;
    los.point = draw_point(los_prior);
    paths.push_back(los);

    double st0 = std::sin(los.point.theta);
    Vec3 user = los.point.r * Vec3{st0 * std::cos(los.point.phi),
                                   st0 * std::sin(los.point.phi), std::cos(los.point.theta)};

    for (int l = 1; l < los_prior.num_paths; ++l) {
        PathSpec sc;
        sc.kind = PathSpec::Kind::NLoS;
        sc.point = draw_point(scatter_prior);
        double st = std::sin(sc.point.theta);
        Vec3 pos = sc.point.r * Vec3{st * std::cos(sc.point.phi), st * std::sin(sc.point.phi),
                                     std::cos(sc.point.theta)};
        sc.scatter_to_user_distance = (user - pos).norm();
        // Coincident scatterer/user gives r1 = 0; nudge to keep the two-hop
        // gain finite (measure-zero under the continuous prior).
        if (sc.scatter_to_user_distance <= 0.0) sc.scatter_to_user_distance = 1e-9;
        sc.reflection_coeff = rng.cnormal(1.0);
        paths.push_back(sc);
    }
    return paths;
}

}  // namespace nfbt
