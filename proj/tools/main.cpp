// deltadpd: seeded, reproducible DPD experiment pipeline.
//
// Subcommands: gen | train-pa | train-dpd | sweep | eval
// Exit codes: 0 ok, 2 config error, 3 I/O error, 4 numeric failure,
// 5 unmet quality gate.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "deltadpd/config.hpp"
#include "deltadpd/delta.hpp"
#include "deltadpd/metrics.hpp"
#include "deltadpd/pa.hpp"
#include "deltadpd/report.hpp"
#include "deltadpd/signal.hpp"
#include "deltadpd/train.hpp"

namespace fs = std::filesystem;
using namespace deltadpd;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool deterministic = false;
};

int env_threads() {
    if (const char* v = std::getenv("DELTADPD_THREADS")) {
        const int n = std::atoi(v);
        if (n >= 1) return n;
    }
    return 1;
}

RunConfig make_config(const CliOptions& opt) {
    RunConfig cfg = opt.config_path.empty() ? default_run_config() : load_run_config(opt.config_path);
    if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
    if (opt.seed_set) {
        cfg.seed = opt.seed;
        cfg.signal.seed = opt.seed;
        cfg.behavioral_train.seed = opt.seed + 1;
        cfg.dpd_train.seed = opt.seed + 2;
    }
    const int threads = opt.deterministic ? 1 : env_threads();
    cfg.behavioral_train.n_threads = threads;
    cfg.dpd_train.n_threads = threads;
    return cfg;
}

MemoryPolyPa ground_truth_pa(const RunConfig& cfg) {
    return cfg.pa_coeff_file.empty() ? default_test_pa() : load_pa(cfg.pa_coeff_file);
}

Dataset build_dataset(const RunConfig& cfg) {
    IqSignal sig = generate_ofdm(cfg.signal);
    if (cfg.cfr_enabled) {
        auto cfr = apply_cfr(sig, cfg.cfr_papr_target_db);
        if (!cfr.target_met)
            std::cerr << "warning: CFR PAPR target not reached after " << cfr.iterations
                      << " iterations\n";
        sig = std::move(cfr.signal);
    }
    Dataset ds;
    ds.input = sig;
    ds.target = pa_simulate(ground_truth_pa(cfg), sig);
    ds.split = {0.6, 0.2, 0.2};
    return ds;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.output_dir);
    return (fs::path(cfg.output_dir) / name).string();
}

int cmd_gen(const RunConfig& cfg) {
    Dataset ds = build_dataset(cfg);
    write_dataset_csv(out_path(cfg, "dataset.csv"), ds);
    std::cout << "papr_db=" << papr_db(ds.input) << "\n";
    write_run_summary(out_path(cfg, "gen_summary.json"), cfg,
                      {{"papr_db", std::to_string(papr_db(ds.input))},
                       {"n_samples", std::to_string(ds.input.size())}});
    return 0;
}

int cmd_train_pa(const RunConfig& cfg) {
    Dataset ds = read_dataset_csv(out_path(cfg, "dataset.csv"));
    auto [model, report] = fit_behavioral(ds, cfg.behavioral_hidden, cfg.behavioral_train);
    save_model(out_path(cfg, "pa_model.json"), model);
    write_train_report_csv(out_path(cfg, "pa_train_report.csv"), report);
    std::cout << "behavioral val_nmse_db=" << report.best_val_nmse_db << "\n";
    if (report.best_val_nmse_db > cfg.behavioral_nmse_gate_db) {
        std::cerr << "gate unmet: behavioral NMSE " << report.best_val_nmse_db << " dB > "
                  << cfg.behavioral_nmse_gate_db << " dB\n";
        return static_cast<int>(ExitCode::GateUnmet);
    }
    return 0;
}

int cmd_train_dpd(const RunConfig& cfg) {
    Dataset ds = read_dataset_csv(out_path(cfg, "dataset.csv"));
    DpdModelD pa_behav = load_model(out_path(cfg, "pa_model.json"));
    DpdModelD init = init_weights<double>(cfg.dpd_cell, cfg.dpd_hidden, cfg.dpd_train.seed);
    auto [model, report] = train_dpd(pa_behav, std::move(init), ds, cfg.dpd_train);
    save_model(out_path(cfg, "dpd_model.json"), model);
    write_train_report_csv(out_path(cfg, "dpd_train_report.csv"), report);
    std::cout << "dpd best_val_nmse_db=" << report.best_val_nmse_db << " (epoch "
              << report.best_epoch << ")\n";
    return 0;
}

SweepRow eval_point(const RunConfig& cfg, const DpdModel& model_f32, const MemoryPolyPa& pa,
                    const Dataset& test, const ThresholdConfig& th) {
    auto feats = extract_features(test.input);
    auto [dpd_out, stats] = run_delta(model_f32, feats, th);
    dpd_out.sample_rate_hz = test.input.sample_rate_hz;
    IqSignal pa_out = pa_simulate(pa, dpd_out);

    IqSignal target;
    target.sample_rate_hz = test.input.sample_rate_hz;
    const double g = cfg.dpd_train.target_gain;
    for (const auto& s : test.input.samples) target.samples.push_back(g * s);

    SweepRow row;
    row.theta_phi = th.theta_phi;
    row.theta_h = th.theta_h;
    row.gamma = stats.gamma_overall();
    row.active_params = active_params(model_f32, row.gamma);
    row.nmse_db = nmse_db(target, pa_out);
    row.evm_dbc = evm_dbc(test.input, pa_out);
    auto acpr = acpr_dbc(pa_out, cfg.effective_acpr(), cfg.psd);
    row.acpr_left_dbc = acpr.left_dbc;
    row.acpr_right_dbc = acpr.right_dbc;
    // per-inference op counts
    row.mul = stats.steps > 0 ? stats.mul_count / stats.steps : 0;
    row.add = stats.steps > 0 ? stats.add_count / stats.steps : 0;
    row.mem = stats.steps > 0 ? stats.mem_count / stats.steps : 0;
    row.energy_j = energy_per_inference(row.mul, row.add, row.mem, cfg.energy);
    return row;
}

int cmd_sweep(const RunConfig& cfg) {
    if (cfg.sweep.empty()) throw ConfigError("sweep: threshold list is empty");
    Dataset ds = read_dataset_csv(out_path(cfg, "dataset.csv"));
    DpdModel model = cast_model<double, float>(load_model(out_path(cfg, "dpd_model.json")));
    MemoryPolyPa pa = ground_truth_pa(cfg);
    auto splits = split_dataset(ds);

    std::vector<SweepRow> rows(cfg.sweep.size());
    const int n_threads = env_threads();
    auto worker = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            rows[i] = eval_point(cfg, model, pa, splits.test, cfg.sweep[i]);
    };
    if (n_threads <= 1) {
        worker(0, rows.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk =
            (rows.size() + static_cast<std::size_t>(n_threads) - 1) / static_cast<std::size_t>(n_threads);
        for (std::size_t lo = 0; lo < rows.size(); lo += chunk)
            pool.emplace_back(worker, lo, std::min(rows.size(), lo + chunk));
        for (auto& t : pool) t.join();
    }

    // theta = (0,0) row (or the first row) is the energy baseline
    double base_energy = rows.front().energy_j;
    for (const auto& r : rows)
        if (r.theta_phi == 0.0 && r.theta_h == 0.0) base_energy = r.energy_j;
    for (auto& r : rows) r.energy_reduction_factor = base_energy / r.energy_j;

    write_sweep_csv(out_path(cfg, "sweep.csv"), rows);

    // per-point plot data
    auto feats = extract_features(splits.test.input);
    for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
        auto [dpd_out, stats] = run_delta(model, feats, cfg.sweep[i]);
        dpd_out.sample_rate_hz = splits.test.input.sample_rate_hz;
        IqSignal pa_out = pa_simulate(pa, dpd_out);
        write_spectrum_csv(out_path(cfg, "psd_point" + std::to_string(i) + ".csv"),
                           psd(pa_out, cfg.psd));
        write_constellation_csv(out_path(cfg, "constellation_point" + std::to_string(i) + ".csv"),
                                pa_out);
    }
    write_run_summary(out_path(cfg, "sweep_summary.json"), cfg,
                      {{"n_points", std::to_string(rows.size())}});
    std::cout << "sweep: " << rows.size() << " points written to "
              << out_path(cfg, "sweep.csv") << "\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg, double theta_phi, double theta_h) {
    Dataset ds = read_dataset_csv(out_path(cfg, "dataset.csv"));
    DpdModel model = cast_model<double, float>(load_model(out_path(cfg, "dpd_model.json")));
    MemoryPolyPa pa = ground_truth_pa(cfg);
    auto splits = split_dataset(ds);

    ThresholdConfig th{theta_phi, theta_h};
    SweepRow row = eval_point(cfg, model, pa, splits.test, th);
    CostReport costs = theoretical_costs(model.hidden_size(), row.gamma);

    std::cout << "gamma=" << row.gamma << " active_params=" << row.active_params
              << " nmse_db=" << row.nmse_db << " evm_dbc=" << row.evm_dbc
              << " acpr_left_dbc=" << row.acpr_left_dbc << " acpr_right_dbc=" << row.acpr_right_dbc
              << " mul=" << row.mul << " add=" << row.add << " mem=" << row.mem
              << " energy_nj=" << row.energy_j * 1e9 << " speedup=" << costs.speedup
              << " mem_access_reduction=" << costs.mem_access_reduction << "\n";
    write_sweep_csv(out_path(cfg, "eval.csv"), {row});
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DeltaDPD experiment pipeline"};
    app.require_subcommand(1);

    CliOptions opt;
    app.add_option("--config", opt.config_path, "JSON config file");
    app.add_option("--out", opt.out_dir, "output directory (overrides config)");
    auto* seed_opt = app.add_option("--seed", opt.seed, "global seed (overrides config)");
    app.add_flag("--deterministic", opt.deterministic, "force ordered single-thread reductions");

    auto* gen = app.add_subcommand("gen", "generate signal + dataset");
    auto* train_pa = app.add_subcommand("train-pa", "fit PA behavioral model");
    auto* train_dpd_cmd = app.add_subcommand("train-dpd", "train DPD through behavioral model");
    auto* sweep = app.add_subcommand("sweep", "evaluate threshold sweep");
    auto* eval = app.add_subcommand("eval", "evaluate a single threshold point");
    double theta_phi = 0.0, theta_h = 0.0;
    eval->add_option("--theta-phi", theta_phi, "input-feature threshold");
    eval->add_option("--theta-h", theta_h, "hidden-state threshold");

    CLI11_PARSE(app, argc, argv);
    opt.seed_set = seed_opt->count() > 0;

    try {
        RunConfig cfg = make_config(opt);
        if (gen->parsed()) return cmd_gen(cfg);
        if (train_pa->parsed()) return cmd_train_pa(cfg);
        if (train_dpd_cmd->parsed()) return cmd_train_dpd(cfg);
        if (sweep->parsed()) return cmd_sweep(cfg);
        if (eval->parsed()) return cmd_eval(cfg, theta_phi, theta_h);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::ConfigError);
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::IoError);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::NumericError);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::NumericError);
    }
    return 0;
}
