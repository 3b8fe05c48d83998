#include "nfbt/beamspace.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nfbt {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

CVec dft_axis(int count, double spacing, double lambda, double xi) {
    CVec a(count);
    double scale = 1.0 / std::sqrt(static_cast<double>(count));
    for (int i = 0; i < count; ++i) {
        double delta = (2.0 * i - count + 1.0) / 2.0;
        a(i) = std::polar(scale, -kTwoPi / lambda * spacing * xi * delta);
    }
    return a;
}

CVec fresnel_axis(int count, double spacing, double lambda, double xi, double r) {
    if (r <= 0.0) throw std::invalid_argument("fresnel_axis: range must be positive");
    CVec b(count);
    double scale = 1.0 / std::sqrt(static_cast<double>(count));
    double quad = spacing * spacing / (2.0 * r) * (1.0 - xi * xi);
    // Same sign convention as steering_vector: the r -> inf limit equals the
    // 1D DFT vector at xi.
    for (int i = 0; i < count; ++i) {
        double delta = (2.0 * i - count + 1.0) / 2.0;
        double phase = kTwoPi / lambda * (-spacing * xi * delta + quad * delta * delta);
        b(i) = std::polar(scale, phase);
    }
    return b;
}

void check_index(const ArrayConfig& cfg, const BeamIndex& idx) {
    if (idx.n < 0 || idx.n >= cfg.n_y || idx.m < 0 || idx.m >= cfg.n_z)
        throw std::out_of_range("BeamIndex out of range");
}
}  // namespace

CVec dft_axis_y(const ArrayConfig& cfg, double u) {
    return dft_axis(cfg.n_y, cfg.d, cfg.lambda_m, u);
}
CVec dft_axis_z(const ArrayConfig& cfg, double v) {
    return dft_axis(cfg.n_z, cfg.d, cfg.lambda_m, v);
}
CVec fresnel_axis_y(const ArrayConfig& cfg, double u, double r) {
    return fresnel_axis(cfg.n_y, cfg.d, cfg.lambda_m, u, r);
}
CVec fresnel_axis_z(const ArrayConfig& cfg, double v, double r) {
    return fresnel_axis(cfg.n_z, cfg.d, cfg.lambda_m, v, r);
}

CVec dft_codeword_at(const ArrayConfig& cfg, double u, double v) {
    CVec ay = dft_axis_y(cfg, u);
    CVec az = dft_axis_z(cfg, v);
    CVec f(cfg.n);
    for (int i = 0; i < cfg.n_y; ++i)
        for (int j = 0; j < cfg.n_z; ++j) f(cfg.flat_index(i, j)) = ay(i) * az(j);
    return f;
}

CVec dft_codeword(const ArrayConfig& cfg, const BeamIndex& idx) {
    check_index(cfg, idx);
    return dft_codeword_at(cfg, grid_u(cfg, idx.n), grid_v(cfg, idx.m));
}

Codebook::Codebook(const ArrayConfig& cfg) : cfg_(cfg) {
    ay_.resize(cfg.n_y, cfg.n_y);
    for (int n = 0; n < cfg.n_y; ++n) ay_.col(n) = dft_axis_y(cfg, grid_u(cfg, n));
    az_.resize(cfg.n_z, cfg.n_z);
    for (int m = 0; m < cfg.n_z; ++m) az_.col(m) = dft_axis_z(cfg, grid_v(cfg, m));
}

CVec Codebook::codeword(const BeamIndex& idx) const {
    check_index(cfg_, idx);
    CVec f(cfg_.n);
    for (int i = 0; i < cfg_.n_y; ++i)
        for (int j = 0; j < cfg_.n_z; ++j)
            f(cfg_.flat_index(i, j)) = ay_(i, idx.n) * az_(j, idx.m);
    return f;
}

BeamspaceVector Codebook::to_beamspace(const CVec& h) const {
    if (h.size() != cfg_.n) throw std::invalid_argument("to_beamspace: length mismatch");
    // s(n,m) = a_y(u_n)^H H conj(a_z(v_m)) with H the n_y x n_z reshape of h.
    Eigen::Map<const Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        hm(h.data(), cfg_.n_y, cfg_.n_z);
    Eigen::MatrixXcd tmp = ay_.adjoint() * hm;            // n_y x n_z
    Eigen::MatrixXcd s2 = tmp * az_.conjugate();          // n_y x n_z
    BeamspaceVector s(cfg_.n);
    for (int n = 0; n < cfg_.n_y; ++n)
        for (int m = 0; m < cfg_.n_z; ++m) s(n * cfg_.n_z + m) = s2(n, m);
    return s;
}

CVec Codebook::from_beamspace(const BeamspaceVector& s) const {
    if (s.size() != cfg_.n) throw std::invalid_argument("from_beamspace: length mismatch");
    Eigen::Map<const Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        sm(s.data(), cfg_.n_y, cfg_.n_z);
    Eigen::MatrixXcd tmp = ay_ * sm;                      // n_y x n_z
    Eigen::MatrixXcd hm = tmp * az_.transpose();          // n_y x n_z
    CVec h(cfg_.n);
    for (int i = 0; i < cfg_.n_y; ++i)
        for (int j = 0; j < cfg_.n_z; ++j) h(cfg_.flat_index(i, j)) = hm(i, j);
    return h;
}

Eigen::MatrixXcd Codebook::dense() const {
    Eigen::MatrixXcd f(cfg_.n, cfg_.n);
    for (int lin = 0; lin < cfg_.n; ++lin) f.row(lin) = codeword(lin).adjoint();
    return f;
}

double beam_gain(const ArrayConfig& cfg, const SphericalPoint& p, const BeamIndex& idx) {
    check_index(cfg, idx);
    CVec b = steering_vector(cfg, p);
    CVec a = dft_codeword(cfg, idx);
    return std::abs(b.dot(a));  // Eigen dot conjugates the left argument
}

LobeWidthReport measure_lobe_width(const ArrayConfig& cfg, const SphericalPoint& p, char axis,
                                   int resolution) {
    if (axis != 'y' && axis != 'z') throw std::invalid_argument("measure_lobe_width: axis must be 'y' or 'z'");
    if (resolution < 256) throw std::invalid_argument("measure_lobe_width: resolution must be >= 256");

    bool y_axis = (axis == 'y');
    double xi0 = y_axis ? p.u() : p.v();
    int count = y_axis ? cfg.n_y : cfg.n_z;
    CVec ref = y_axis ? fresnel_axis_y(cfg, xi0, p.r) : fresnel_axis_z(cfg, xi0, p.r);

    double peak = std::abs(ref.dot(y_axis ? dft_axis_y(cfg, xi0) : dft_axis_z(cfg, xi0)));
    if (peak <= 0.0) throw std::runtime_error("measure_lobe_width: degenerate geometry, zero peak response");

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    bool inside_prev = false;
    int segments = 0;
    for (int k = 0; k < resolution; ++k) {
        double xi = -1.0 + 2.0 * (k + 0.5) / resolution;
        CVec a = y_axis ? dft_axis_y(cfg, xi) : dft_axis_z(cfg, xi);
        double g = std::abs(ref.dot(a)) / peak;
        bool inside = g >= 0.5;
        if (inside) {
            lo = std::min(lo, xi);
            hi = std::max(hi, xi);
            if (!inside_prev) ++segments;
        }
        inside_prev = inside;
    }
    if (segments == 0) throw std::runtime_error("measure_lobe_width: empty 6-dB superlevel set");

    LobeWidthReport rep;
    rep.axis = axis;
    rep.grid_resolution = resolution;
    rep.b_measured = hi - lo;
    rep.b_predicted = count * cfg.d * (1.0 - xi0 * xi0) / p.r;
    rep.disconnected = segments > 1;
    // Below the intrinsic DFT main-lobe width the 1/r law no longer governs
    // the measured set; 1.21 * (2/N) is the far-field Dirichlet 6-dB width.
    rep.far_field = rep.b_predicted < 1.21 * 2.0 / count;
    return rep;
}

SparsityEstimate expected_sparsity(const ArrayConfig& cfg, const ScenarioPrior& prior) {
    prior.validate();
    SparsityEstimate est;

    auto third_moment = [](double a, double b) {
        if (a == b) return a * a;
        return (b * b * b - a * a * a) / (3.0 * (b - a));
    };
    auto fifth_moment = [](double a, double b) {
        if (a == b) return a * a * a * a;
        return (b * b * b * b * b - a * a * a * a * a) / (5.0 * (b - a));
    };

    est.mu2 = third_moment(prior.v_lo, prior.v_hi);
    est.mu4 = fifth_moment(prior.v_lo, prior.v_hi);
    est.nu2 = third_moment(prior.s_lo, prior.s_hi);
    est.xi_vs = (1.0 - est.mu2) - est.nu2 * (1.0 - 2.0 * est.mu2 + est.mu4);

    if (prior.r_lo == prior.r_hi) {
        est.xi_r = 1.0 / (prior.r_lo * prior.r_lo);  // pointwise limit of E[1/r^2]
    } else {
        est.xi_r = (1.0 / prior.r_lo - 1.0 / prior.r_hi) / (prior.r_hi - prior.r_lo);
    }

    double delta_y = 2.0 / cfg.n_y;
    double delta_z = 2.0 / cfg.n_z;
    est.expected_k = prior.num_paths * cfg.n_y * cfg.n_z * cfg.d * cfg.d * est.xi_vs * est.xi_r /
                     (delta_y * delta_z);
    return est;
}

}  // namespace nfbt
