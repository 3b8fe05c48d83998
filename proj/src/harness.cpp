#include "nfbt/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace nfbt {

using ordered_json = nlohmann::ordered_json;

std::string method_name(Method m) {
    switch (m) {
        case Method::LseRSparta: return "lse_r_sparta";
        case Method::RSparta: return "r_sparta";
        case Method::RSwf: return "r_swf";
        case Method::ExhaustiveDft: return "exhaustive_dft";
        case Method::LseSpartaNoRician: return "lse_sparta_no_rician";
        case Method::LseRSpartaLaplace: return "lse_r_sparta_laplace";
    }
    throw std::logic_error("method_name: unknown method");
}

Method method_from_name(const std::string& name) {
    for (Method m : {Method::LseRSparta, Method::RSparta, Method::RSwf, Method::ExhaustiveDft,
                     Method::LseSpartaNoRician, Method::LseRSpartaLaplace})
        if (method_name(m) == name) return m;
    throw std::invalid_argument("unknown method: " + name);
}

std::string axis_name(SweepAxis a) {
    switch (a) {
        case SweepAxis::Snr: return "snr_db";
        case SweepAxis::Paths: return "num_paths";
        case SweepAxis::Distance: return "distance_m";
    }
    throw std::logic_error("axis_name: unknown axis");
}

void SimConfig::finalize() {
    if (r_range_auto) {
        prior.r_lo = array.fresnel_distance;
        prior.r_hi = array.rayleigh_distance;
    }
    if (!(prior.r_lo > 0.0))
        throw std::invalid_argument("config: degenerate near-field range (array too small?)");
    prior.validate();
    if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
    if (t1 == 0) t1 = array.n;
    if (m2 == 0) m2 = array.n;
    if (t1 < 1 || m2 < 1) throw std::invalid_argument("config: budgets must be >= 1");
    if (methods.empty()) throw std::invalid_argument("config: methods list is empty");
    if (distance_grid_m.empty()) {
        double lo = prior.r_lo * 1.05;
        double hi = array.rayleigh_distance * 0.95;
        for (int i = 0; i < 8; ++i) distance_grid_m.push_back(lo + (hi - lo) * i / 7.0);
    }
    if (ablation.kernel != "cross" && ablation.kernel != "laplace_product")
        throw std::invalid_argument("config: ablation.kernel must be cross or laplace_product");
}

double snr_to_noise_power(const CVec& h, double snr_db) {
    double hsq = h.squaredNorm();
    if (hsq == 0.0) throw std::invalid_argument("snr_to_noise_power: zero channel");
    return hsq / (h.size() * std::pow(10.0, snr_db / 10.0));
}

Correlation correlation(const CVec& h, const CVec& h_hat) {
    double nh = h.norm();
    double ne = h_hat.norm();
    if (nh == 0.0 || ne == 0.0) return {0.0, true};
    return {std::abs(h.dot(h_hat)) / (nh * ne), false};
}

int sparsity_rule(const ArrayConfig& cfg, const ScenarioPrior& prior, int k_support) {
    double ek = expected_sparsity(cfg, prior).expected_k;
    int k = std::max({1, static_cast<int>(std::lround(ek)), 4 * prior.num_paths});
    return std::clamp(k, 1, std::max(k_support, 1));
}

int support_cap_rule(const ArrayConfig& cfg, const ScenarioPrior& prior) {
    int cap = std::max(16, 8 * prior.num_paths);
    return std::clamp(cap, 1, std::max(cfg.n / 4, 1));
}

namespace {

constexpr std::uint64_t kMethodSaltBase = 0xA0;

ScenarioPrior prior_for_axis(const SimConfig& cfg, SweepAxis axis, double axis_value) {
    ScenarioPrior p = cfg.prior;
    if (axis == SweepAxis::Paths) p.num_paths = static_cast<int>(axis_value);
    return p;
}

std::vector<PathSpec> scenario_for_trial(const SimConfig& cfg, SweepAxis axis, double axis_value,
                                         const ScenarioPrior& prior, int trial_idx) {
    Rng rng = Rng(cfg.global_seed).derive(stream::kScenario, static_cast<std::uint64_t>(trial_idx));
    if (axis == SweepAxis::Distance) {
        ScenarioPrior los = prior;
        los.r_lo = los.r_hi = axis_value;  // user range pinned to the grid value
        return sample_scenario(los, prior, rng);
    }
    return sample_scenario(prior, rng);
}

struct ProposedOutcome {
    CVec h_hat;
    int probes_used = 0;
    int support_size = 0;
    int stage1_steps = 0;
    int stage2_iters = 0;
};

ProposedOutcome run_proposed(const SimConfig& cfg, Method method, const ScenarioPrior& prior,
                             const Codebook& cb, const Channel& ch, double sigma_sq,
                             Rng method_rng, TrialTraces* traces) {
    const ArrayConfig& arr = cfg.array;
    bool no_rician = cfg.ablation.disable_rician || method == Method::LseSpartaNoRician;
    bool laplace = cfg.ablation.kernel == "laplace_product" || method == Method::LseRSpartaLaplace;

    StageOneConfig s1;
    s1.budget = cfg.t1;
    s1.warmup_fraction = cfg.lse.warmup_fraction;
    s1.tau_quantile = cfg.lse.tau_quantile;
    s1.tau_floor_sigma_mult = cfg.lse.tau_floor_sigma_mult;
    s1.epsilon_frac = cfg.lse.epsilon_frac;
    s1.kernel.alpha = laplace ? 0.0 : cfg.lse.alpha;
    std::tie(s1.kernel.ell_u, s1.kernel.ell_v) =
        lengthscales_from_prior(arr, prior, cfg.lse.kappa_u, cfg.lse.kappa_v);
    s1.beta_mode = cfg.lse.beta_mode;
    s1.beta_const = cfg.lse.beta;
    s1.b_f = cfg.lse.b_f;
    s1.beta_delta = cfg.lse.beta_delta;
    s1.sigma_sq = sigma_sq;
    s1.delta_bd = cfg.lse.delta_bd;
    s1.c1 = cfg.lse.c1;
    s1.k_cap = cfg.lse.k_cap > 0 ? cfg.lse.k_cap : support_cap_rule(arr, prior);
    s1.stage2_snr_floor = cfg.lse.stage2_snr_floor;
    s1.support_hard_cap = std::max(1, cfg.m2 / 4);
    s1.debias = !no_rician;
    s1.conservative_regularization = cfg.lse.conservative_regularization;

    BeamspaceVector s = cb.to_beamspace(ch.h);
    Rng noise_rng = method_rng.derive(stream::kNoise);
    ProbeFn probe = [&](const BeamIndex& idx) {
        int lin = beam_linear_index(arr, idx);
        return std::conj(s(lin)) + noise_rng.cnormal(sigma_sq);
    };

    StageOneResult s1_res =
        run_stage_one(arr, probe, s1, traces ? &traces->stage1 : nullptr);

    Rng masks_rng = method_rng.derive(stream::kMasks);
    SensingSet set = build_sensing(s1_res.support.support, cfg.m2, masks_rng);
    Eigen::VectorXd y = observe(ch, cb, set, sigma_sq, noise_rng);

    Eigen::VectorXd psi;
    if (no_rician) {
        psi = y;
    } else {
        psi = rician_denoise(y, sigma_sq).psi;
    }

    SpartaConfig sp;
    // Stage I already selected the sparse support; within it every
    // coefficient is kept unless the config narrows k explicitly.
    sp.k = cfg.sparta.k > 0 ? std::min(cfg.sparta.k, set.k()) : set.k();
    sp.mu = cfg.sparta.mu;
    sp.trunc_gamma = cfg.sparta.trunc_gamma;
    sp.init_card = cfg.sparta.init_card;
    sp.max_iters = cfg.sparta.max_iters;
    sp.tol = cfg.sparta.tol;

    Estimate est = solve(cb, set, psi, sp, traces ? &traces->stage2 : nullptr);

    ProposedOutcome out;
    out.h_hat = est.h_hat;
    out.probes_used = s1_res.probes_used + cfg.m2;
    out.support_size = set.k();
    out.stage1_steps = s1_res.steps;
    out.stage2_iters = est.iters_used;
    return out;
}

}  // namespace

Channel trial_channel(const SimConfig& cfg, SweepAxis axis, double axis_value, int trial_idx) {
    ScenarioPrior prior = prior_for_axis(cfg, axis, axis_value);
    return generate_channel(cfg.array,
                            scenario_for_trial(cfg, axis, axis_value, prior, trial_idx));
}

TrialResult run_trial(const SimConfig& cfg, Method method, SweepAxis axis, double axis_value,
                      int trial_idx, TrialTraces* traces) {
    TrialResult res;
    res.method = method;
    auto t0 = std::chrono::steady_clock::now();
    try {
        ScenarioPrior prior = prior_for_axis(cfg, axis, axis_value);
        std::vector<PathSpec> paths = scenario_for_trial(cfg, axis, axis_value, prior, trial_idx);
        Codebook cb(cfg.array);
        Channel ch = generate_channel(cfg.array, paths);
        double snr_db = axis == SweepAxis::Snr ? axis_value : cfg.fixed_snr_db;
        double sigma_sq = snr_to_noise_power(ch.h, snr_db);

        Rng method_rng = Rng(cfg.global_seed)
                             .derive(kMethodSaltBase + static_cast<std::uint64_t>(method),
                                     static_cast<std::uint64_t>(trial_idx));

        CVec h_hat;
        switch (method) {
            case Method::LseRSparta:
            case Method::LseSpartaNoRician:
            case Method::LseRSpartaLaplace: {
                ProposedOutcome out =
                    run_proposed(cfg, method, prior, cb, ch, sigma_sq, method_rng, traces);
                h_hat = out.h_hat;
                res.probes_used = out.probes_used;
                res.support_size = out.support_size;
                res.stage1_steps = out.stage1_steps;
                res.stage2_iters = out.stage2_iters;
                break;
            }
            case Method::RSparta: {
                SpartaConfig sp;
                sp.k = cfg.sparta.k > 0 ? std::min(cfg.sparta.k, cfg.array.n)
                                        : sparsity_rule(cfg.array, prior, cfg.array.n);
                sp.mu = cfg.sparta.mu;
                sp.trunc_gamma = cfg.sparta.trunc_gamma;
                sp.init_card = cfg.sparta.init_card;
                sp.max_iters = cfg.sparta.max_iters;
                sp.tol = cfg.sparta.tol;
                BaselineResult b =
                    r_sparta_full(ch, cb, sigma_sq, cfg.t1 + cfg.m2, method_rng, sp);
                h_hat = b.h_hat;
                res.probes_used = b.probes_used;
                res.stage2_iters = b.iters;
                res.support_size = cfg.array.n;
                break;
            }
            case Method::RSwf: {
                SwfConfig sw;
                sw.k = cfg.sparta.k > 0 ? std::min(cfg.sparta.k, cfg.array.n)
                                        : sparsity_rule(cfg.array, prior, cfg.array.n);
                sw.mu = cfg.swf.mu;
                sw.max_iters = cfg.swf.max_iters;
                sw.tol = cfg.swf.tol;
                BaselineResult b = r_swf_full(ch, cb, sigma_sq, cfg.t1 + cfg.m2, method_rng, sw);
                h_hat = b.h_hat;
                res.probes_used = b.probes_used;
                res.stage2_iters = b.iters;
                res.support_size = cfg.array.n;
                break;
            }
            case Method::ExhaustiveDft: {
                BaselineResult b = exhaustive_dft(ch, cb, sigma_sq, method_rng);
                h_hat = b.h_hat;
                res.probes_used = b.probes_used;
                res.support_size = 1;
                break;
            }
        }
        Correlation c = correlation(ch.h, h_hat);
        res.rho = c.rho;
        res.degenerate = c.degenerate;
    } catch (const std::exception& e) {
        res.failed = true;
        res.error = e.what();
    }
    res.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

SweepReport run_sweep(const SimConfig& cfg, SweepAxis axis) {
    std::vector<double> axis_values;
    switch (axis) {
        case SweepAxis::Snr: axis_values = cfg.snr_grid_db; break;
        case SweepAxis::Paths:
            for (int p : cfg.path_grid) axis_values.push_back(p);
            break;
        case SweepAxis::Distance: axis_values = cfg.distance_grid_m; break;
    }
    if (axis_values.empty()) throw std::invalid_argument("run_sweep: empty sweep axis");

    const int n_axis = static_cast<int>(axis_values.size());
    const int n_methods = static_cast<int>(cfg.methods.size());
    const int n_trials = cfg.trials;
    const int total = n_axis * n_methods * n_trials;

    std::vector<TrialResult> results(total);
    std::atomic<int> cursor{0};
    auto worker = [&]() {
        while (true) {
            int idx = cursor.fetch_add(1);
            if (idx >= total) break;
            int trial = idx % n_trials;
            int mi = (idx / n_trials) % n_methods;
            int ai = idx / (n_trials * n_methods);
            results[idx] =
                run_trial(cfg, cfg.methods[mi], axis, axis_values[ai], trial, nullptr);
        }
    };
    int n_threads = cfg.threads > 0 ? cfg.threads
                                    : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<int>(n_threads, total);
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    SweepReport report;
    report.axis = axis;
    report.axis_values = axis_values;
    report.trials = std::move(results);
    report.trials_per_cell = n_trials;
    report.seed = cfg.global_seed;

    for (int ai = 0; ai < n_axis; ++ai) {
        for (int mi = 0; mi < n_methods; ++mi) {
            double sum = 0.0, sum_sq = 0.0;
            int n = 0;
            for (int t = 0; t < n_trials; ++t) {
                const TrialResult& r =
                    report.trials[(ai * n_methods + mi) * n_trials + t];
                if (r.failed) {
                    ++report.failed_trials;
                    continue;
                }
                sum += r.rho;
                sum_sq += r.rho * r.rho;
                ++n;
            }
            SweepCell cell;
            cell.axis_value = axis_values[ai];
            cell.method = cfg.methods[mi];
            cell.n = n;
            if (n > 0) cell.mean_rho = sum / n;
            if (n > 1) {
                double var = (sum_sq - sum * sum / n) / (n - 1);
                cell.stderr_rho = std::sqrt(std::max(var, 0.0) / n);
            }
            report.cells.push_back(cell);
        }
    }
    return report;
}

namespace {
std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}
}  // namespace

std::string report_csv(const SweepReport& report) {
    std::ostringstream os;
    os << "axis,method,mean_rho,stderr,n\n";
    for (const SweepCell& c : report.cells) {
        os << fmt_double(c.axis_value) << ',' << method_name(c.method) << ','
           << fmt_double(c.mean_rho) << ',' << fmt_double(c.stderr_rho) << ',' << c.n << '\n';
    }
    return os.str();
}

std::string trials_csv(const SweepReport& report) {
    std::ostringstream os;
    os << "axis,method,trial,rho,degenerate,probes_used,support_size,stage1_steps,stage2_iters,"
          "failed,wall_time_s\n";
    int n_methods = static_cast<int>(report.cells.size() / report.axis_values.size());
    for (std::size_t i = 0; i < report.trials.size(); ++i) {
        const TrialResult& r = report.trials[i];
        int trial = static_cast<int>(i) % report.trials_per_cell;
        int mi = (static_cast<int>(i) / report.trials_per_cell) % n_methods;
        int ai = static_cast<int>(i) / (report.trials_per_cell * n_methods);
        os << fmt_double(report.axis_values[ai]) << ','
           << method_name(report.cells[ai * n_methods + mi].method) << ',' << trial << ','
           << fmt_double(r.rho) << ',' << (r.degenerate ? 1 : 0) << ',' << r.probes_used << ','
           << r.support_size << ',' << r.stage1_steps << ',' << r.stage2_iters << ','
           << (r.failed ? 1 : 0) << ',' << fmt_double(r.wall_time_s) << '\n';
    }
    return os.str();
}

void persist(const SweepReport& report, const SimConfig& cfg, const std::string& out_dir,
             bool write_trials) {
    std::filesystem::create_directories(out_dir);
    auto write_file = [&](const std::string& name, const std::string& content) {
        std::ofstream out(out_dir + "/" + name, std::ios::binary);
        if (!out) throw std::runtime_error("persist: cannot open " + out_dir + "/" + name);
        out << content;
        if (!out) throw std::runtime_error("persist: write failed for " + name);
    };
    write_file("report.csv", report_csv(report));
    write_file("config_echo.json", config_echo_json(cfg));
    if (write_trials) write_file("trials.csv", trials_csv(report));
}

// ---------------------------------------------------------------------------
// Config file I/O

namespace {

void check_keys(const ordered_json& obj, std::initializer_list<const char*> allowed,
                const std::string& context) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + context);
    }
}

template <typename T>
void maybe(const ordered_json& obj, const char* key, T& target) {
    if (obj.contains(key)) target = obj.at(key).get<T>();
}

}  // namespace

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config: parse error: ") + e.what());
    }

    SimConfig cfg;
    check_keys(j, {"array", "prior", "methods", "snr_grid_db", "path_grid", "distance_grid_m",
                   "fixed_snr_db", "trials", "global_seed", "budgets", "lse", "sparta", "swf",
                   "ablation", "threads"},
               "top level");

    if (j.contains("array")) {
        const auto& a = j.at("array");
        check_keys(a, {"n_y", "n_z", "f_c_hz", "d_m"}, "array");
        int ny = a.value("n_y", 32), nz = a.value("n_z", 8);
        double fc = a.value("f_c_hz", 28e9), dm = a.value("d_m", 0.0);
        cfg.array = ArrayConfig(ny, nz, fc, dm);
    }
    if (j.contains("prior")) {
        const auto& p = j.at("prior");
        check_keys(p, {"v_range", "s_range", "r_range_m", "num_paths"}, "prior");
        if (p.contains("v_range")) {
            auto v = p.at("v_range").get<std::vector<double>>();
            if (v.size() != 2) throw std::invalid_argument("config: v_range needs two entries");
            cfg.prior.v_lo = v[0];
            cfg.prior.v_hi = v[1];
        }
        if (p.contains("s_range")) {
            auto s = p.at("s_range").get<std::vector<double>>();
            if (s.size() != 2) throw std::invalid_argument("config: s_range needs two entries");
            cfg.prior.s_lo = s[0];
            cfg.prior.s_hi = s[1];
        }
        if (p.contains("r_range_m")) {
            if (p.at("r_range_m").is_string()) {
                if (p.at("r_range_m").get<std::string>() != "auto")
                    throw std::invalid_argument("config: r_range_m must be [lo, hi] or \"auto\"");
            } else {
                auto r = p.at("r_range_m").get<std::vector<double>>();
                if (r.size() != 2) throw std::invalid_argument("config: r_range_m needs two entries");
                cfg.prior.r_lo = r[0];
                cfg.prior.r_hi = r[1];
                cfg.r_range_auto = false;
            }
        }
        maybe(p, "num_paths", cfg.prior.num_paths);
    }
    if (j.contains("methods")) {
        cfg.methods.clear();
        for (const auto& name : j.at("methods"))
            cfg.methods.push_back(method_from_name(name.get<std::string>()));
    }
    maybe(j, "snr_grid_db", cfg.snr_grid_db);
    maybe(j, "path_grid", cfg.path_grid);
    if (j.contains("distance_grid_m") && !j.at("distance_grid_m").is_string())
        cfg.distance_grid_m = j.at("distance_grid_m").get<std::vector<double>>();
    maybe(j, "fixed_snr_db", cfg.fixed_snr_db);
    maybe(j, "trials", cfg.trials);
    maybe(j, "global_seed", cfg.global_seed);
    if (j.contains("budgets")) {
        const auto& b = j.at("budgets");
        check_keys(b, {"t1", "m2"}, "budgets");
        maybe(b, "t1", cfg.t1);
        maybe(b, "m2", cfg.m2);
    }
    if (j.contains("lse")) {
        const auto& l = j.at("lse");
        check_keys(l, {"tau_quantile", "tau_floor_sigma_mult", "epsilon_frac", "beta_mode", "beta",
                       "b_f", "beta_delta", "alpha", "kappa_u", "kappa_v", "warmup_fraction",
                       "delta_bd", "c1", "k_cap", "stage2_snr_floor", "conservative_regularization"},
                   "lse");
        maybe(l, "tau_quantile", cfg.lse.tau_quantile);
        maybe(l, "tau_floor_sigma_mult", cfg.lse.tau_floor_sigma_mult);
        maybe(l, "epsilon_frac", cfg.lse.epsilon_frac);
        maybe(l, "beta_mode", cfg.lse.beta_mode);
        maybe(l, "beta", cfg.lse.beta);
        maybe(l, "b_f", cfg.lse.b_f);
        maybe(l, "beta_delta", cfg.lse.beta_delta);
        maybe(l, "alpha", cfg.lse.alpha);
        maybe(l, "kappa_u", cfg.lse.kappa_u);
        maybe(l, "kappa_v", cfg.lse.kappa_v);
        maybe(l, "warmup_fraction", cfg.lse.warmup_fraction);
        maybe(l, "delta_bd", cfg.lse.delta_bd);
        maybe(l, "c1", cfg.lse.c1);
        maybe(l, "k_cap", cfg.lse.k_cap);
        maybe(l, "stage2_snr_floor", cfg.lse.stage2_snr_floor);
        maybe(l, "conservative_regularization", cfg.lse.conservative_regularization);
    }
    if (j.contains("sparta")) {
        const auto& s = j.at("sparta");
        check_keys(s, {"k", "mu", "trunc_gamma", "init_card", "max_iters", "tol"}, "sparta");
        maybe(s, "k", cfg.sparta.k);
        maybe(s, "mu", cfg.sparta.mu);
        maybe(s, "trunc_gamma", cfg.sparta.trunc_gamma);
        maybe(s, "init_card", cfg.sparta.init_card);
        maybe(s, "max_iters", cfg.sparta.max_iters);
        maybe(s, "tol", cfg.sparta.tol);
    }
    if (j.contains("swf")) {
        const auto& s = j.at("swf");
        check_keys(s, {"mu", "max_iters", "tol"}, "swf");
        maybe(s, "mu", cfg.swf.mu);
        maybe(s, "max_iters", cfg.swf.max_iters);
        maybe(s, "tol", cfg.swf.tol);
    }
    if (j.contains("ablation")) {
        const auto& a = j.at("ablation");
        check_keys(a, {"disable_rician", "kernel"}, "ablation");
        maybe(a, "disable_rician", cfg.ablation.disable_rician);
        maybe(a, "kernel", cfg.ablation.kernel);
    }
    maybe(j, "threads", cfg.threads);

    cfg.finalize();
    return cfg;
}

std::string config_echo_json(const SimConfig& cfg) {
    ordered_json j;
    j["array"] = {{"n_y", cfg.array.n_y},
                  {"n_z", cfg.array.n_z},
                  {"f_c_hz", cfg.array.f_c},
                  {"d_m", cfg.array.d},
                  {"lambda_m", cfg.array.lambda_m},
                  {"n", cfg.array.n},
                  {"aperture_m", cfg.array.aperture_m},
                  {"fresnel_distance_m", cfg.array.fresnel_distance},
                  {"rayleigh_distance_m", cfg.array.rayleigh_distance}};
    j["prior"] = {{"v_range", {cfg.prior.v_lo, cfg.prior.v_hi}},
                  {"s_range", {cfg.prior.s_lo, cfg.prior.s_hi}},
                  {"r_range_m", {cfg.prior.r_lo, cfg.prior.r_hi}},
                  {"num_paths", cfg.prior.num_paths}};
    std::vector<std::string> names;
    for (Method m : cfg.methods) names.push_back(method_name(m));
    j["methods"] = names;
    j["snr_grid_db"] = cfg.snr_grid_db;
    j["path_grid"] = cfg.path_grid;
    j["distance_grid_m"] = cfg.distance_grid_m;
    j["fixed_snr_db"] = cfg.fixed_snr_db;
    j["trials"] = cfg.trials;
    j["global_seed"] = cfg.global_seed;
    j["budgets"] = {{"t1", cfg.t1}, {"m2", cfg.m2}};
    j["lse"] = {{"tau_quantile", cfg.lse.tau_quantile},
                {"tau_floor_sigma_mult", cfg.lse.tau_floor_sigma_mult},
                {"epsilon_frac", cfg.lse.epsilon_frac},
                {"beta_mode", cfg.lse.beta_mode},
                {"beta", cfg.lse.beta},
                {"b_f", cfg.lse.b_f},
                {"beta_delta", cfg.lse.beta_delta},
                {"alpha", cfg.lse.alpha},
                {"kappa_u", cfg.lse.kappa_u},
                {"kappa_v", cfg.lse.kappa_v},
                {"warmup_fraction", cfg.lse.warmup_fraction},
                {"delta_bd", cfg.lse.delta_bd},
                {"c1", cfg.lse.c1},
                {"k_cap", cfg.lse.k_cap},
                {"stage2_snr_floor", cfg.lse.stage2_snr_floor},
                {"conservative_regularization", cfg.lse.conservative_regularization}};
    j["sparta"] = {{"k", cfg.sparta.k},
                   {"mu", cfg.sparta.mu},
                   {"trunc_gamma", cfg.sparta.trunc_gamma},
                   {"init_card", cfg.sparta.init_card},
                   {"max_iters", cfg.sparta.max_iters},
                   {"tol", cfg.sparta.tol}};
    j["swf"] = {{"mu", cfg.swf.mu}, {"max_iters", cfg.swf.max_iters}, {"tol", cfg.swf.tol}};
    j["ablation"] = {{"disable_rician", cfg.ablation.disable_rician},
                     {"kernel", cfg.ablation.kernel}};
    j["threads"] = cfg.threads;
    j["derived"] = {{"k_cap_auto", support_cap_rule(cfg.array, cfg.prior)},
                    {"sparsity_auto", sparsity_rule(cfg.array, cfg.prior, cfg.array.n)},
                    {"expected_sparsity", expected_sparsity(cfg.array, cfg.prior).expected_k}};
    return j.dump(2) + "\n";
}

}  // namespace nfbt
