#include "nfbt/gp_lse.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace nfbt {

namespace {
constexpr double kDiagFloor = 1e-12;
constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-6;
}  // namespace

void KernelParams::validate() const {
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("KernelParams: alpha must be in [0, 1]");
    if (ell_u <= 0.0 || ell_v <= 0.0)
        throw std::invalid_argument("KernelParams: lengthscales must be positive");
}

double kernel_eval(const KernelParams& kp, const ArrayConfig& cfg, const BeamIndex& a,
                   const BeamIndex& b) {
    kp.validate();
    double ku = std::exp(-std::abs(grid_u(cfg, a.n) - grid_u(cfg, b.n)) / kp.ell_u);
    double kv = std::exp(-std::abs(grid_v(cfg, a.m) - grid_v(cfg, b.m)) / kp.ell_v);
    return kp.alpha * 0.5 * (ku + kv) + (1.0 - kp.alpha) * ku * kv;
}

std::pair<double, double> lengthscales_from_prior(const ArrayConfig& cfg,
                                                  const ScenarioPrior& prior, double kappa_u,
                                                  double kappa_v) {
    prior.validate();
    auto third_moment = [](double a, double b) {
        return (a == b) ? a * a : (b * b * b - a * a * a) / (3.0 * (b - a));
    };
    double mu2 = third_moment(prior.v_lo, prior.v_hi);
    double nu2 = third_moment(prior.s_lo, prior.s_hi);
    double e_one_minus_u2 = 1.0 - (1.0 - mu2) * nu2;  // u^2 = (1 - v^2) s^2
    double e_one_minus_v2 = 1.0 - mu2;
    double e_inv_r = (prior.r_lo == prior.r_hi)
                         ? 1.0 / prior.r_lo
                         : std::log(prior.r_hi / prior.r_lo) / (prior.r_hi - prior.r_lo);
    double ell_u = kappa_u * cfg.n_y * cfg.d * e_one_minus_u2 * e_inv_r;
    double ell_v = kappa_v * cfg.n_z * cfg.d * e_one_minus_v2 * e_inv_r;
    if (ell_u <= 0.0 || ell_v <= 0.0)
        throw std::invalid_argument("lengthscales_from_prior: nonpositive lengthscale");
    return {ell_u, ell_v};
}

std::pair<double, double> lengthscales_from_prior_mc(const ArrayConfig& cfg,
                                                     const ScenarioPrior& prior, double kappa_u,
                                                     double kappa_v, Rng& rng, int samples) {
    prior.validate();
    double acc_u = 0.0, acc_v = 0.0;
    for (int i = 0; i < samples; ++i) {
        double v = rng.uniform(prior.v_lo, prior.v_hi);
        double s = rng.uniform(prior.s_lo, prior.s_hi);
        double r = rng.uniform(prior.r_lo, prior.r_hi);
        double u = std::sqrt(std::max(0.0, 1.0 - v * v)) * s;
        acc_u += (1.0 - u * u) / r;
        acc_v += (1.0 - v * v) / r;
    }
    double ell_u = kappa_u * cfg.n_y * cfg.d * acc_u / samples;
    double ell_v = kappa_v * cfg.n_z * cfg.d * acc_v / samples;
    if (ell_u <= 0.0 || ell_v <= 0.0)
        throw std::invalid_argument("lengthscales_from_prior_mc: nonpositive lengthscale");
    return {ell_u, ell_v};
}

void NoiseModel::validate() const {
    if (sigma_sq < 0.0) throw std::invalid_argument("NoiseModel: sigma_sq must be >= 0");
    if (f_max < 0.0) throw std::invalid_argument("NoiseModel: f_max must be >= 0");
    if (delta_bd <= 0.0 || delta_bd >= 1.0)
        throw std::invalid_argument("NoiseModel: delta_bd must be in (0, 1)");
    if (c1 <= 0.0) throw std::invalid_argument("NoiseModel: c1 must be positive");
}

double debias_power(const std::complex<double>& y, const NoiseModel& noise) {
    return std::norm(y) - noise.sigma_sq;
}

double bounded_noise_threshold(const NoiseModel& noise, int t) {
    noise.validate();
    if (t < 1) throw std::invalid_argument("bounded_noise_threshold: t must be >= 1");
    double pi_sq = std::numbers::pi * std::numbers::pi;
    double logf = std::max(0.0, std::log(pi_sq * t * static_cast<double>(t) / (12.0 * noise.delta_bd)));
    double var = noise.sigma_sq * noise.sigma_sq + 2.0 * noise.sigma_sq * noise.f_max;
    return noise.c1 * (noise.sigma_sq * logf + std::sqrt(var * logf));
}

// ---------------------------------------------------------------------------
// GP posterior

GpPosterior::GpPosterior(const ArrayConfig& cfg, const KernelParams& kp, double sigma_eps_sq)
    : cfg_(cfg), kp_(kp), sigma_eps_sq_(sigma_eps_sq) {
    kp_.validate();
    if (sigma_eps_sq_ < 0.0) throw std::invalid_argument("GpPosterior: sigma_eps_sq must be >= 0");
    coord_u_.resize(cfg_.n);
    coord_v_.resize(cfg_.n);
    for (int lin = 0; lin < cfg_.n; ++lin) {
        BeamIndex b = beam_from_linear(cfg_, lin);
        coord_u_(lin) = grid_u(cfg_, b.n);
        coord_v_(lin) = grid_v(cfg_, b.m);
    }
    mu_ = Eigen::VectorXd::Zero(cfg_.n);
    var_ = Eigen::VectorXd::Ones(cfg_.n);  // k(i, i) = 1
}

double GpPosterior::kernel_lin(int a, int b) const {
    double ku = std::exp(-std::abs(coord_u_(a) - coord_u_(b)) / kp_.ell_u);
    double kv = std::exp(-std::abs(coord_v_(a) - coord_v_(b)) / kp_.ell_v);
    return kp_.alpha * 0.5 * (ku + kv) + (1.0 - kp_.alpha) * ku * kv;
}

void GpPosterior::add_probe(const BeamIndex& idx, double z) {
    int lin = beam_linear_index(cfg_, idx);
    if (lin < 0 || lin >= cfg_.n) throw std::out_of_range("GpPosterior::add_probe: index out of range");
    const int t = count();

    // New row of L from forward substitution against the existing factor.
    std::vector<double> row(t + 1, 0.0);
    double norm_sq = 0.0;
    for (int s = 0; s < t; ++s) {
        const double* ls = chol_.data() + static_cast<std::size_t>(s) * (s + 1) / 2;
        double acc = kernel_lin(lin, beam_linear_index(cfg_, probes_[s].first));
        for (int r = 0; r < s; ++r) acc -= ls[r] * row[r];
        row[s] = acc / ls[s];
        norm_sq += row[s] * row[s];
    }
    double diag_arg = 1.0 + sigma_eps_sq_ - norm_sq;
    if (diag_arg < kDiagFloor) {
        double jitter = kJitterStart;
        while (jitter <= kJitterMax && diag_arg + jitter < kDiagFloor) jitter *= 2.0;
        if (diag_arg + jitter < kDiagFloor)
            throw std::runtime_error("GpPosterior: factorization failed, insufficient jitter");
        diag_arg += jitter;
    }
    row[t] = std::sqrt(diag_arg);

    double c_acc = z;
    for (int s = 0; s < t; ++s) c_acc -= row[s] * cvec_[s];
    double c_new = c_acc / row[t];

    Eigen::VectorXd w(cfg_.n);
    for (int g = 0; g < cfg_.n; ++g) w(g) = kernel_lin(lin, g);
    for (int s = 0; s < t; ++s) w.noalias() -= row[s] * w_rows_[s];
    w /= row[t];

    mu_.noalias() += c_new * w;
    var_.array() -= w.array().square();

    chol_.insert(chol_.end(), row.begin(), row.end());
    cvec_.push_back(c_new);
    w_rows_.push_back(std::move(w));
    probes_.emplace_back(idx, z);
}

// ---------------------------------------------------------------------------
// Exploration schedule and information gain

double BetaSchedule::operator()(int t) const {
    if (t < 1) throw std::invalid_argument("BetaSchedule: round index must be >= 1");
    if (mode == Mode::Constant) return beta_const;
    double lg = std::log(static_cast<double>(t) / delta);
    return 2.0 * b_f * b_f + 300.0 * gamma(t - 1) * lg * lg * lg;
}

BetaSchedule BetaSchedule::constant(double beta) {
    if (beta <= 0.0) throw std::invalid_argument("BetaSchedule: beta must be positive");
    BetaSchedule b;
    b.mode = Mode::Constant;
    b.beta_const = beta;
    return b;
}

BetaSchedule BetaSchedule::rkhs(double b_f, double delta, std::function<double(int)> gamma) {
    if (b_f <= 0.0 || delta <= 0.0 || delta >= 1.0)
        throw std::invalid_argument("BetaSchedule: need b_f > 0 and delta in (0, 1)");
    if (!gamma) throw std::invalid_argument("BetaSchedule: gamma estimator required");
    BetaSchedule b;
    b.mode = Mode::RkhsBounded;
    b.b_f = b_f;
    b.delta = delta;
    b.gamma = std::move(gamma);
    return b;
}

namespace {
struct GreedyGammaState {
    GreedyGammaState(const KernelParams& kp, const ArrayConfig& cfg, double se)
        : post(cfg, kp, se), sigma_eps_sq(se) {
        values.push_back(0.0);
    }
    GpPosterior post;
    double sigma_eps_sq;
    std::vector<double> values;  // greedy prefix values, values[t] = gamma_hat_t

    double value_at(int t) {
        int cap = std::min(t, post.grid_size());
        while (static_cast<int>(values.size()) <= cap) {
            int best = 0;
            double best_var = -1.0;
            for (int g = 0; g < post.grid_size(); ++g) {
                if (post.var_lin(g) > best_var) {
                    best_var = post.var_lin(g);
                    best = g;
                }
            }
            values.push_back(values.back() +
                             0.5 * std::log1p(std::max(best_var, 0.0) / sigma_eps_sq));
            post.add_probe(beam_from_linear(post.config(), best), 0.0);
        }
        return values[cap];
    }
};
}  // namespace

double info_gain_greedy(const KernelParams& kp, const ArrayConfig& cfg, double sigma_eps_sq,
                        int t) {
    if (sigma_eps_sq <= 0.0)
        throw std::invalid_argument("info_gain_greedy: sigma_eps_sq must be positive");
    if (t < 0 || t > cfg.n) throw std::invalid_argument("info_gain_greedy: need 0 <= t <= grid size");
    GreedyGammaState st(kp, cfg, sigma_eps_sq);
    return st.value_at(t);
}

std::function<double(int)> make_greedy_gamma(const KernelParams& kp, const ArrayConfig& cfg,
                                             double sigma_eps_sq) {
    if (sigma_eps_sq <= 0.0)
        throw std::invalid_argument("make_greedy_gamma: sigma_eps_sq must be positive");
    auto st = std::make_shared<GreedyGammaState>(kp, cfg, sigma_eps_sq);
    return [st](int t) { return st->value_at(std::max(t, 0)); };
}

// ---------------------------------------------------------------------------
// LSE

LseState LseState::init(const ArrayConfig& cfg, double tau, double epsilon, BetaSchedule beta) {
    LseState s;
    s.tau = tau;
    s.epsilon = epsilon;
    s.beta = std::move(beta);
    s.lower = Eigen::VectorXd::Constant(cfg.n, -std::numeric_limits<double>::infinity());
    s.upper = Eigen::VectorXd::Constant(cfg.n, std::numeric_limits<double>::infinity());
    s.cls.assign(cfg.n, BeamClass::Undecided);
    s.n_undecided = cfg.n;
    return s;
}

LseStepResult lse_step(LseState& state, const GpPosterior& post) {
    const int grid = post.grid_size();
    const int round = post.count() + 1;
    const double sb = std::sqrt(state.beta(round));

    for (int g = 0; g < grid; ++g) {
        double mu = post.mean_lin(g);
        double sd = post.sd_lin(g);
        state.lower(g) = std::max(state.lower(g), mu - sb * sd);
        state.upper(g) = std::min(state.upper(g), mu + sb * sd);
    }
    for (int g = 0; g < grid; ++g) {
        if (state.cls[g] != BeamClass::Undecided) continue;
        if (state.lower(g) > state.tau - state.epsilon) {
            state.cls[g] = BeamClass::High;
            ++state.n_high;
            --state.n_undecided;
        } else if (state.upper(g) <= state.tau + state.epsilon) {
            state.cls[g] = BeamClass::Low;
            ++state.n_low;
            --state.n_undecided;
        }
    }
    state.t = post.count();

    LseStepResult res;
    if (state.n_undecided == 0) {
        state.max_ambiguity = 0.0;
        res.done = true;
        return res;
    }
    int best = -1;
    double best_amb = -std::numeric_limits<double>::infinity();
    for (int g = 0; g < grid; ++g) {
        if (state.cls[g] != BeamClass::Undecided) continue;
        double amb = std::min(state.upper(g) - state.tau, state.tau - state.lower(g));
        if (amb > best_amb) {
            best_amb = amb;
            best = g;
        }
    }
    state.max_ambiguity = best_amb;
    if (best_amb <= state.epsilon) {
        res.done = true;
        return res;
    }
    res.next = beam_from_linear(post.config(), best);
    return res;
}

SupportResult finalize_support(const LseState& state, const GpPosterior& post, int k_cap,
                               int h_cap) {
    const ArrayConfig& cfg = post.config();
    SupportResult out;

    std::vector<int> pool;
    if (state.n_undecided == 0) {
        for (int g = 0; g < cfg.n; ++g)
            if (state.cls[g] == BeamClass::High) pool.push_back(g);
        if (h_cap > 0 && static_cast<int>(pool.size()) > h_cap) {
            std::stable_sort(pool.begin(), pool.end(), [&](int a, int b) {
                double ma = post.mean_lin(a), mb = post.mean_lin(b);
                if (ma != mb) return ma > mb;
                return a < b;
            });
            pool.resize(h_cap);
            std::sort(pool.begin(), pool.end());
            out.h_capped = true;
        }
        out.support.reserve(pool.size());
        for (int g : pool) out.support.push_back(beam_from_linear(cfg, g));
    } else {
        for (int g = 0; g < cfg.n; ++g)
            if (state.cls[g] != BeamClass::Low) pool.push_back(g);
        int k = std::min<int>(std::max(k_cap, 1), static_cast<int>(pool.size()));
        std::stable_sort(pool.begin(), pool.end(), [&](int a, int b) {
            double ma = post.mean_lin(a), mb = post.mean_lin(b);
            if (ma != mb) return ma > mb;
            return a < b;
        });
        pool.resize(k);
        std::sort(pool.begin(), pool.end());
        out.used_topk = true;
        for (int g : pool) out.support.push_back(beam_from_linear(cfg, g));
    }

    if (out.support.empty()) {
        int best = 0;
        for (int g = 1; g < cfg.n; ++g)
            if (post.mean_lin(g) > post.mean_lin(best)) best = g;
        out.support.push_back(beam_from_linear(cfg, best));
        out.fallback_singleton = true;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stage I driver

namespace {
std::vector<int> warmup_grid(const ArrayConfig& cfg, int want) {
    want = std::min(want, cfg.n);
    int wy = std::max(1, static_cast<int>(std::lround(
                             std::sqrt(static_cast<double>(want) * cfg.n_y / cfg.n_z))));
    wy = std::min(wy, cfg.n_y);
    int wz = std::max(1, (want + wy - 1) / wy);
    wz = std::min(wz, cfg.n_z);

    std::vector<char> used(cfg.n, 0);
    std::vector<int> picks;
    for (int a = 0; a < wy && static_cast<int>(picks.size()) < want; ++a) {
        int i = static_cast<int>((a + 0.5) * cfg.n_y / wy);
        for (int b = 0; b < wz && static_cast<int>(picks.size()) < want; ++b) {
            int j = static_cast<int>((b + 0.5) * cfg.n_z / wz);
            int lin = i * cfg.n_z + j;
            if (!used[lin]) {
                used[lin] = 1;
                picks.push_back(lin);
            }
        }
    }
    for (int lin = 0; static_cast<int>(picks.size()) < want && lin < cfg.n; ++lin) {
        if (!used[lin]) {
            used[lin] = 1;
            picks.push_back(lin);
        }
    }
    return picks;
}

double nearest_rank_quantile(std::vector<double> xs, double q) {
    std::sort(xs.begin(), xs.end());
    int idx = static_cast<int>(std::lround(q * (xs.size() - 1)));
    idx = std::clamp<int>(idx, 0, static_cast<int>(xs.size()) - 1);
    return xs[idx];
}
}  // namespace

StageOneResult run_stage_one(const ArrayConfig& cfg, const ProbeFn& probe,
                             const StageOneConfig& s1, std::vector<StageOneTraceRow>* trace) {
    if (s1.budget < 1) throw std::invalid_argument("run_stage_one: budget must be >= 1");
    s1.kernel.validate();

    NoiseModel nm;
    nm.sigma_sq = s1.sigma_sq;
    nm.delta_bd = s1.delta_bd;
    nm.c1 = s1.c1;

    // Warm-up on a coarse uniform sub-grid.
    int warm = std::clamp(static_cast<int>(std::ceil(s1.warmup_fraction * s1.budget)), 1,
                          s1.budget);
    std::vector<int> warm_lins = warmup_grid(cfg, warm);
    std::vector<std::pair<int, double>> warm_obs;
    warm_obs.reserve(warm_lins.size());
    std::vector<double> warm_z;
    for (int lin : warm_lins) {
        std::complex<double> y = probe(beam_from_linear(cfg, lin));
        double z = s1.debias ? debias_power(y, nm) : std::norm(y);
        warm_obs.emplace_back(lin, z);
        warm_z.push_back(z);
    }
    int probes_used = static_cast<int>(warm_obs.size());

    double f_max_raw = std::max(*std::max_element(warm_z.begin(), warm_z.end()), s1.sigma_sq);
    nm.f_max = std::max(f_max_raw, 0.0);

    double tau_raw = std::max(nearest_rank_quantile(warm_z, s1.tau_quantile),
                              s1.tau_floor_sigma_mult * s1.sigma_sq);
    double eps_raw = s1.epsilon_frac * std::max(tau_raw, 0.0);

    // Normalization covers the threshold too, so tau lands inside the prior
    // confidence band and classification cannot complete before any probing.
    double scale = std::max(f_max_raw, tau_raw);
    if (!(scale > 0.0)) scale = 1.0;

    double var_proxy = s1.sigma_sq * s1.sigma_sq + 2.0 * s1.sigma_sq * nm.f_max;
    double sigma_eps_raw = var_proxy;
    if (s1.conservative_regularization) {
        double bt = bounded_noise_threshold(nm, std::max(s1.budget, 1));
        sigma_eps_raw = std::max(bt * bt, var_proxy);
    }
    double sigma_eps_sq = sigma_eps_raw / (scale * scale);
    if (s1.sigma_eps_sq_override) sigma_eps_sq = *s1.sigma_eps_sq_override;
    sigma_eps_sq = std::max(sigma_eps_sq, 1e-10);

    GpPosterior post(cfg, s1.kernel, sigma_eps_sq);
    for (auto& [lin, z] : warm_obs) post.add_probe(beam_from_linear(cfg, lin), z / scale);

    BetaSchedule beta =
        (s1.beta_mode == "rkhs")
            ? BetaSchedule::rkhs(s1.b_f, s1.beta_delta,
                                     make_greedy_gamma(s1.kernel, cfg, sigma_eps_sq))
            : BetaSchedule::constant(s1.beta_const);
    LseState state = LseState::init(cfg, tau_raw / scale, eps_raw / scale, std::move(beta));

    StageOneResult out;
    out.tau_raw = tau_raw;
    out.epsilon_raw = eps_raw;
    out.scale = scale;
    out.sigma_eps_sq = sigma_eps_sq;

    int steps = 0;
    while (true) {
        LseStepResult step = lse_step(state, post);
        ++steps;
        if (trace) {
            StageOneTraceRow row;
            row.step = steps;
            row.probe_lin = step.done ? -1 : beam_linear_index(cfg, step.next);
            row.n_high = state.n_high;
            row.n_low = state.n_low;
            row.n_undecided = state.n_undecided;
            row.max_ambiguity = state.max_ambiguity;
            trace->push_back(row);
        }
        if (step.done || probes_used >= s1.budget) break;
        std::complex<double> y = probe(step.next);
        // The regularization stays fixed after warm-up so each probe is a
        // valid rank-1 extension of the same factorization.
        double z = s1.debias ? debias_power(y, nm) : std::norm(y);
        post.add_probe(step.next, z / scale);
        ++probes_used;
        if (trace) trace->back().z = z;
    }

    int cap = s1.k_cap;
    if (s1.stage2_snr_floor > 0.0 && s1.sigma_sq > 0.0 && state.n_undecided > 0) {
        // Gaussian masks spread the probing power over all K support beams,
        // so the per-measurement SNR in Stage II is (sum of supported beam
        // powers) / (K sigma^2); shrink K until the estimate clears the floor.
        std::vector<double> mus;
        for (int g = 0; g < cfg.n; ++g)
            if (state.cls[g] != BeamClass::Low)
                mus.push_back(std::max(post.mean_lin(g), 0.0) * scale);
        std::sort(mus.begin(), mus.end(), std::greater<>());
        int best_k = 1;
        double cum = 0.0;
        for (int k = 1; k <= std::min<int>(cap, static_cast<int>(mus.size())); ++k) {
            cum += mus[k - 1];
            if (cum >= s1.stage2_snr_floor * s1.sigma_sq * k) best_k = k;
        }
        cap = best_k;
    }
    out.support = finalize_support(state, post, cap, s1.support_hard_cap);
    out.probes_used = probes_used;
    out.steps = steps;
    out.n_high = state.n_high;
    out.n_low = state.n_low;
    out.n_undecided = state.n_undecided;
    return out;
}

}  // namespace nfbt
