// Command-line front end: Monte-Carlo sweeps, ablations, the sparsity
// closed form, invariant self-checks and single-trial traces.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nfbt/harness.hpp"

namespace {

using namespace nfbt;

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int trials = 0;
    int threads = -1;
    bool full_scale = false;
    bool per_trial = false;
    bool plot_data = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "global seed")->each([&](const std::string&) {
        o.seed_set = true;
    });
    cmd->add_option("--trials", o.trials, "Monte-Carlo trials per point");
    cmd->add_option("--threads", o.threads, "worker threads (0 = hardware)");
    cmd->add_flag("--full-scale", o.full_scale, "use the 128x16 full-scale array (long-running)");
    cmd->add_flag("--per-trial", o.per_trial, "also write trials.csv");
    cmd->add_flag("--plot-data", o.plot_data, "emit plain (x, mean, stderr) triples per method");
}

SimConfig build_config(const CommonOpts& o) {
    SimConfig cfg;
    if (!o.config_path.empty()) {
        cfg = load_config(o.config_path);
    } else {
        if (o.full_scale) {
            cfg.array = ArrayConfig(128, 16, 28e9);
            cfg.trials = 500;
        }
        cfg.finalize();
    }
    if (o.seed_set) cfg.global_seed = o.seed;
    if (o.trials > 0) cfg.trials = o.trials;
    if (o.threads >= 0) cfg.threads = o.threads;
    return cfg;
}

int run_axis_sweep(const CommonOpts& o, SweepAxis axis, bool ablate) {
    SimConfig cfg = build_config(o);
    if (ablate) {
        cfg.methods = {Method::LseRSparta, Method::LseSpartaNoRician, Method::LseRSpartaLaplace};
    }
    SweepReport report = run_sweep(cfg, axis);
    persist(report, cfg, o.out_dir, o.per_trial);

    std::printf("%s sweep: %zu points x %zu methods x %d trials -> %s/report.csv\n",
                axis_name(axis).c_str(), report.axis_values.size(), cfg.methods.size(),
                cfg.trials, o.out_dir.c_str());
    for (const SweepCell& c : report.cells)
        std::printf("  %-22s %s=%-8g mean_rho=%.4f stderr=%.4f n=%d\n",
                    method_name(c.method).c_str(), axis_name(axis).c_str(), c.axis_value,
                    c.mean_rho, c.stderr_rho, c.n);
    if (o.plot_data) {
        for (Method m : cfg.methods) {
            std::printf("# %s\n", method_name(m).c_str());
            for (const SweepCell& c : report.cells)
                if (c.method == m)
                    std::printf("%.17g %.17g %.17g\n", c.axis_value, c.mean_rho, c.stderr_rho);
            std::printf("\n");
        }
    }
    int total = static_cast<int>(report.trials.size());
    if (report.failed_trials * 10 > total) {
        std::fprintf(stderr, "error: %d of %d trials failed\n", report.failed_trials, total);
        return 2;
    }
    return 0;
}

int run_sparsity(const CommonOpts& o, long long mc_samples) {
    SimConfig cfg = build_config(o);
    SparsityEstimate est = expected_sparsity(cfg.array, cfg.prior);
    std::printf("expected_k = %.6f\n", est.expected_k);
    std::printf("Xi_r  = %.9f\nXi_vs = %.9f\n", est.xi_r, est.xi_vs);
    std::printf("mu2 = %.9f\nmu4 = %.9f\nnu2 = %.9f\n", est.mu2, est.mu4, est.nu2);
    if (mc_samples > 0) {
        Rng rng(cfg.global_seed);
        double acc = 0.0;
        double dy = 2.0 / cfg.array.n_y, dz = 2.0 / cfg.array.n_z;
        double front = cfg.prior.num_paths * cfg.array.n_y * cfg.array.n_z * cfg.array.d *
                       cfg.array.d / (dy * dz);
        for (long long i = 0; i < mc_samples; ++i) {
            double v = rng.uniform(cfg.prior.v_lo, cfg.prior.v_hi);
            double s = rng.uniform(cfg.prior.s_lo, cfg.prior.s_hi);
            double r = rng.uniform(cfg.prior.r_lo, cfg.prior.r_hi);
            double u = std::sqrt(std::max(0.0, 1.0 - v * v)) * s;
            acc += (1.0 - u * u) * (1.0 - v * v) / (r * r);
        }
        double mc = front * acc / mc_samples;
        std::printf("monte_carlo_k (%lld samples) = %.6f\n", mc_samples, mc);
        std::printf("relative_gap = %.4f%%\n", 100.0 * std::abs(mc - est.expected_k) /
                                                   std::max(mc, 1e-300));
    }
    return 0;
}

int run_validate(const CommonOpts& o) {
    SimConfig cfg = build_config(o);
    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        std::printf("%s  %s\n", ok ? "PASS" : "FAIL", name);
        if (!ok) ++failures;
    };

    ArrayConfig small(8, 4, 28e9);
    Codebook cb(small);
    Rng rng(cfg.global_seed);

    // Unitarity round trip.
    CVec h(small.n);
    for (int i = 0; i < small.n; ++i) h(i) = rng.cnormal(1.0);
    BeamspaceVector s = cb.to_beamspace(h);
    check("beamspace unitarity (norm preserved)",
          std::abs(s.norm() - h.norm()) < 1e-10 * h.norm());
    check("beamspace round trip", (cb.from_beamspace(s) - h).norm() < 1e-10 * h.norm());

    // Steering vector norm.
    SphericalPoint p = SphericalPoint::from_vs(0.2, 0.3, 5.0);
    check("steering vector unit norm", std::abs(steering_vector(small, p).norm() - 1.0) < 1e-12);

    // GP posterior versus a direct scalar check after one probe.
    KernelParams kp{0.5, 0.2, 0.2};
    GpPosterior post(small, kp, 0.25);
    post.add_probe({1, 1}, 2.0);
    check("gp scalar posterior", std::abs(post.mean({1, 1}) - 2.0 / 1.25) < 1e-12 &&
                                     std::abs(post.var({1, 1}) - (1.0 - 1.0 / 1.25)) < 1e-12);

    // Rician denoise clipping.
    Eigen::VectorXd y(3);
    y << 0.1, 1.0, 2.0;
    PseudoAmplitudes pa = rician_denoise(y, 1.0);
    check("rician denoise clips below the noise floor",
          pa.psi(0) == 0.0 && pa.psi(1) == 0.0 && std::abs(pa.psi(2) - std::sqrt(3.0)) < 1e-12);

    // Appendix-style pseudo-amplitude bound on sampled pairs.
    bool bound_ok = true;
    for (int i = 0; i < 2000; ++i) {
        double a = rng.uniform(0.1, 10.0);
        double eps = rng.uniform(-a * a / 2.0, a * a / 2.0);
        if (!pseudo_amplitude_bound_check(a, eps)) bound_ok = false;
    }
    check("pseudo-amplitude bound", bound_ok);

    // Error decomposition identity on a planted case.
    std::vector<BeamIndex> sup;
    for (int lin = 0; lin < 6; ++lin) sup.push_back(beam_from_linear(small, lin * 3));
    Rng mrng = rng.derive(7);
    SensingSet set = build_sensing(sup, 64, mrng);
    BeamspaceVector s_true = BeamspaceVector::Zero(small.n);
    for (int lin = 0; lin < small.n; ++lin) s_true(lin) = rng.cnormal(1.0);
    CVec h_true = cb.from_beamspace(s_true);
    Eigen::VectorXcd s_hat_sub(set.k());
    for (int i = 0; i < set.k(); ++i) s_hat_sub(i) = rng.cnormal(1.0);
    BeamspaceVector padded = BeamspaceVector::Zero(small.n);
    Eigen::VectorXcd s_sub(set.k());
    double tail = 0.0;
    for (int lin = 0; lin < small.n; ++lin) tail += std::norm(s_true(lin));
    for (int i = 0; i < set.k(); ++i) {
        int lin = beam_linear_index(small, set.support[i]);
        padded(lin) = s_hat_sub(i);
        s_sub(i) = s_true(lin);
        tail -= std::norm(s_true(lin));
    }
    CVec h_hat = cb.from_beamspace(padded);
    double lhs = (h_hat - h_true).squaredNorm();
    double rhs = (s_hat_sub - s_sub).squaredNorm() + tail;
    check("error decomposition identity", std::abs(lhs - rhs) < 1e-9 * std::max(1.0, lhs));

    std::printf("%s\n", failures == 0 ? "all checks passed" : "validation FAILED");
    return failures == 0 ? 0 : 2;
}

int run_trace(const CommonOpts& o, double snr_db, int trial) {
    SimConfig cfg = build_config(o);
    TrialTraces traces;
    TrialResult r = run_trial(cfg, Method::LseRSparta, SweepAxis::Snr, snr_db, trial, &traces);
    if (r.failed) {
        std::fprintf(stderr, "trial failed: %s\n", r.error.c_str());
        return 2;
    }
    std::filesystem::create_directories(o.out_dir);
    {
        std::ofstream out(o.out_dir + "/stage1_trace.csv", std::ios::binary);
        out << "step,probe_lin,z_debiased,n_high,n_low,n_undecided,max_ambiguity\n";
        for (const auto& row : traces.stage1) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%d,%d,%d,%.17g\n", row.step,
                          row.probe_lin, row.z, row.n_high, row.n_low, row.n_undecided,
                          row.max_ambiguity);
            out << buf;
        }
    }
    {
        std::ofstream out(o.out_dir + "/stage2_trace.csv", std::ios::binary);
        out << "iter,loss,truncation_size\n";
        for (const auto& row : traces.stage2) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%d\n", row.iter, row.loss,
                          row.truncation_size);
            out << buf;
        }
    }
    std::printf("trial %d at SNR %.1f dB: rho=%.4f probes=%d support=%d stage1_steps=%d "
                "stage2_iters=%d\n",
                trial, snr_db, r.rho, r.probes_used, r.support_size, r.stage1_steps,
                r.stage2_iters);
    std::printf("traces written to %s/stage1_trace.csv and %s/stage2_trace.csv\n",
                o.out_dir.c_str(), o.out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage amplitude-only near-field beam training simulator"};
    app.require_subcommand(1);

    CommonOpts snr_opts, paths_opts, dist_opts, ablate_opts, sparsity_opts, validate_opts,
        trace_opts;
    long long mc_samples = 0;
    double trace_snr = 0.0;
    int trace_trial = 0;

    add_common(app.add_subcommand("sweep-snr", "mean correlation versus SNR"), snr_opts);
    add_common(app.add_subcommand("sweep-paths", "mean correlation versus path count"),
               paths_opts);
    add_common(app.add_subcommand("sweep-distance", "mean correlation versus user distance"),
               dist_opts);
    add_common(app.add_subcommand("ablate", "kernel / Rician ablation over the SNR grid"),
               ablate_opts);
    auto* sparsity_cmd =
        app.add_subcommand("sparsity", "closed-form beamspace sparsity and MC oracle");
    add_common(sparsity_cmd, sparsity_opts);
    sparsity_cmd->add_option("--mc-samples", mc_samples, "Monte-Carlo oracle sample count");
    add_common(app.add_subcommand("validate", "run quick invariant self-checks"), validate_opts);
    auto* trace_cmd = app.add_subcommand("trace", "single seeded trial with stage traces");
    add_common(trace_cmd, trace_opts);
    trace_cmd->add_option("--snr-db", trace_snr, "SNR for the traced trial");
    trace_cmd->add_option("--trial", trace_trial, "trial index");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 1 : 0;
    }

    try {
        if (app.got_subcommand("sweep-snr")) return run_axis_sweep(snr_opts, SweepAxis::Snr, false);
        if (app.got_subcommand("sweep-paths"))
            return run_axis_sweep(paths_opts, SweepAxis::Paths, false);
        if (app.got_subcommand("sweep-distance"))
            return run_axis_sweep(dist_opts, SweepAxis::Distance, false);
        if (app.got_subcommand("ablate")) return run_axis_sweep(ablate_opts, SweepAxis::Snr, true);
        if (app.got_subcommand("sparsity")) return run_sparsity(sparsity_opts, mc_samples);
        if (app.got_subcommand("validate")) return run_validate(validate_opts);
        if (app.got_subcommand("trace")) return run_trace(trace_opts, trace_snr, trace_trial);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return 2;
    }
    return 0;
}
