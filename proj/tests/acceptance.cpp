// Acceptance gates for the full pipeline. Each case prints exactly one
// [PASS]/[FAIL] line so the suite doubles as a release checklist.
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

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

void report(int n, const char* desc, bool pass) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", n, desc);
    std::fflush(stdout);
}

FeatureSeq random_feats(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-scale, scale);
    FeatureSeq fs;
    for (std::size_t i = 0; i < n; ++i) {
        Vec6 f;
        for (int k = 0; k < 6; ++k) f(k) = d(rng);
        fs.frames.push_back(f);
    }
    return fs;
}

} // namespace

TEST_CASE("criterion 1") {
    bool pass = true;
    for (auto kind : {CellKind::Gru, CellKind::Janet}) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            auto mf = cast_model<double, float>(init_weights<double>(kind, 15, seed));
            auto feats = random_feats(10000, 1000 + seed);
            auto dense = forward(mf, feats);
            auto [delta_out, stats] = run_delta(mf, feats, ThresholdConfig{0.0, 0.0});
            double ms = 0.0;
            for (const auto& s : dense.samples) ms += std::norm(s);
            const double rms = std::sqrt(ms / static_cast<double>(dense.size()));
            for (std::size_t i = 0; i < dense.size(); ++i) {
                // relative to sample magnitude, floored at the signal RMS
                const double denom = std::max(std::abs(dense.samples[i]), rms);
                if (std::abs(delta_out.samples[i] - dense.samples[i]) / denom > 1e-5) pass = false;
            }
        }
    }
    report(1, "zero-threshold delta matches dense forward (FP32, 1e-5, 20 seeds)", pass);
    CHECK(pass);
}

TEST_CASE("criterion 2") {
    bool pass = true;
    for (auto kind : {CellKind::Gru, CellKind::Janet}) {
        auto m = init_weights<double>(kind, 15, 7);
        auto feats = random_feats(1000, 77, 0.8);
        for (double theta_h : {0.01, 0.05, 0.2}) {
            std::vector<VecX<double>> xphi, xh;
            auto [out, stats] =
                run_delta_t<double>(m, feats, ThresholdConfig{0.0, theta_h},
                                    [&](const DeltaStateT<double>& s) {
                                        xphi.push_back(s.x_tilde_phi);
                                        xh.push_back(s.x_tilde_h);
                                    });
            VecX<double> h = VecX<double>::Zero(15);
            for (std::size_t t = 0; t < feats.size(); ++t) {
                // dense recomputation on the buffered trajectories
                if (kind == CellKind::Gru) {
                    const auto& w = m.gru;
                    VecX<double> r =
                        sigmoid<double>(w.W_ir * xphi[t] + w.b_ir + w.W_hr * xh[t] + w.b_hr);
                    VecX<double> z =
                        sigmoid<double>(w.W_iz * xphi[t] + w.b_iz + w.W_hz * xh[t] + w.b_hz);
                    VecX<double> n = (w.W_in * xphi[t] + w.b_in +
                                      r.cwiseProduct(w.W_hn * xh[t] + w.b_hn))
                                         .array()
                                         .tanh();
                    h = (VecX<double>::Ones(15) - z).cwiseProduct(h) + z.cwiseProduct(n);
                } else {
                    const auto& w = m.janet;
                    VecX<double> f =
                        sigmoid<double>(w.W_if * xphi[t] + w.b_if + w.W_hf * xh[t] + w.b_hf);
                    VecX<double> c =
                        (w.W_ic * xphi[t] + w.b_ic + w.W_hc * xh[t] + w.b_hc).array().tanh();
                    h = f.cwiseProduct(h) + (VecX<double>::Ones(15) - f).cwiseProduct(c);
                }
                VecX<double> y = m.head.W_y * h + m.head.b_y;
                const cplx expect(y(0), y(1));
                const double denom = std::max(std::abs(expect), 1e-6);
                if (std::abs(out.samples[t] - expect) / denom > 1e-6) pass = false;
            }
        }
    }
    report(2, "buffered-state oracle (theta_h in {0.01,0.05,0.2}, 1e-6, 1000 steps)", pass);
    CHECK(pass);
}

TEST_CASE("criterion 3") {
    auto dpd = init_weights<double>(CellKind::Gru, 3, 5);
    auto pa = init_weights<double>(CellKind::Gru, 3, 6);
    auto feats = random_feats(8, 7, 0.8);
    std::vector<cplx> targets;
    {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> d(-1.0, 1.0);
        for (int i = 0; i < 8; ++i) targets.emplace_back(d(rng), d(rng));
    }
    auto fg = bptt_gradients(dpd, &pa, feats, targets, 0, 8);
    VecXd theta = flatten(dpd);
    VecXd analytic = flatten(fg.grads);
    const double eps = 1e-6;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        auto loss_with = [&](double v) {
            VecXd t = theta;
            t(i) = v;
            DpdModelD m = dpd;
            unflatten(t, m);
            return bptt_gradients(m, &pa, feats, targets, 0, 8).loss;
        };
        const double fd = (loss_with(theta(i) + eps) - loss_with(theta(i) - eps)) / (2.0 * eps);
        const double denom = std::max({std::abs(fd), std::abs(analytic(i)), 1e-8});
        worst = std::max(worst, std::abs(fd - analytic(i)) / denom);
    }
    const bool pass = worst <= 1e-4;
    report(3, "BPTT matches central finite differences for every cascade parameter", pass);
    CHECK(pass);
}

TEST_CASE("criterion 4") {
    auto a = theoretical_costs(15, 0.52);
    auto b = theoretical_costs(15, 0.0);
    auto c = theoretical_costs(15, 0.2);
    const bool pass = std::abs(a.speedup - 1.6304347826086956) < 1e-12 &&
                      std::abs(b.speedup - 15.0 / 17.0) < 1e-12 &&
                      std::abs(c.mem_access_reduction - 1.0) < 1e-12;
    report(4, "cost formulas reproduce hand values to 1e-12", pass);
    CHECK(pass);
}

TEST_CASE("criterion 5") {
    struct Row {
        std::int64_t mul, add, mem;
        double nj;
    };
    const Row rows[] = {
        {1083, 2499, 1204, 10.85}, {905, 2321, 1026, 9.25}, {782, 2198, 903, 8.15},
        {589, 2005, 710, 6.41},    {520, 1936, 641, 5.80},  {407, 1823, 528, 4.78},
        {1078, 2494, 1198, 10.80}, {861, 2277, 981, 8.85},  {741, 2157, 861, 7.78},
        {609, 2025, 729, 6.59},    {465, 1881, 585, 5.30},  {393, 1809, 513, 4.65},
    };
    EnergyModel em;
    bool pass = true;
    for (const auto& r : rows) {
        const double e_nj = energy_per_inference(r.mul, r.add, r.mem, em) * 1e9;
        if (std::abs(e_nj - r.nj) / r.nj >= 0.02) pass = false;
    }
    report(5, "frozen energy model reproduces all 12 published rows within 2%", pass);
    CHECK(pass);
}

TEST_CASE("criterion 6") {
    auto m = init_weights<double>(CellKind::Gru, 15, 1);
    const bool pass = m.param_count() == 1067 &&
                      std::abs(active_params(m, 0.0) - 1067.0) < 1e-12 &&
                      std::abs(active_params(m, 1.0) - 32.0) < 1e-12;
    report(6, "GRU-15 has exactly 1067 parameters; active-parameter endpoints", pass);
    CHECK(pass);
}

namespace {

struct PipelineResult {
    DpdModelD dpd_dense; // double weights, for fine-tuning
    DpdModelD behav;     // frozen behavioral PA model
    DpdModel dpd_f32;
    Dataset full;
    Dataset test;
    MemoryPolyPa pa;
    RunConfig cfg;
};

double worst_acpr(const SweepRow& r) { return std::max(r.acpr_left_dbc, r.acpr_right_dbc); }

SweepRow eval_model(const DpdModel& m, const PipelineResult& p, const ThresholdConfig& th) {
    auto feats = extract_features(p.test.input);
    auto [dpd_out, stats] = run_delta(m, feats, th);
    dpd_out.sample_rate_hz = p.test.input.sample_rate_hz;
    IqSignal pa_out = pa_simulate(p.pa, dpd_out);
    SweepRow row;
    row.theta_h = th.theta_h;
    row.gamma = stats.gamma_overall();
    row.nmse_db = nmse_db(p.test.input, pa_out);
    auto acpr = acpr_dbc(pa_out, p.cfg.effective_acpr(), p.cfg.psd);
    row.acpr_left_dbc = acpr.left_dbc;
    row.acpr_right_dbc = acpr.right_dbc;
    return row;
}

SweepRow eval_at(const PipelineResult& p, const ThresholdConfig& th) {
    return eval_model(p.dpd_f32, p, th);
}

// Shared slow path: train the full synthetic pipeline once, reuse across
// criteria 7 and 8.
const PipelineResult& trained_pipeline() {
    static PipelineResult p = [] {
        PipelineResult r;
        r.cfg = default_run_config();
        r.pa = default_test_pa();

        auto sig = generate_ofdm(r.cfg.signal);
        auto cfr = apply_cfr(sig, r.cfg.cfr_papr_target_db);
        Dataset ds;
        ds.input = cfr.signal;
        ds.target = pa_simulate(r.pa, cfr.signal);

        TrainConfig bcfg = r.cfg.behavioral_train;
        auto [behav, brep] = fit_behavioral(ds, r.cfg.behavioral_hidden, bcfg);
        std::printf("  (behavioral val NMSE %.2f dB)\n", brep.best_val_nmse_db);

        TrainConfig dcfg = r.cfg.dpd_train;
        auto init = init_weights<double>(CellKind::Gru, 15, dcfg.seed);
        auto [dpd, drep] = train_dpd(behav, std::move(init), ds, dcfg);
        std::printf("  (dpd val NMSE %.2f dB at epoch %d)\n", drep.best_val_nmse_db,
                    drep.best_epoch);

        r.dpd_dense = std::move(dpd);
        r.behav = std::move(behav);
        r.dpd_f32 = cast_model<double, float>(r.dpd_dense);
        r.full = ds;
        r.test = split_dataset(ds).test;
        return r;
    }();
    return p;
}

} // namespace

TEST_CASE("criterion 7") {
    const auto& p = trained_pipeline();

    // no-DPD reference through the ground-truth PA
    IqSignal raw_out = pa_simulate(p.pa, p.test.input);
    auto raw_acpr = acpr_dbc(raw_out, p.cfg.effective_acpr(), p.cfg.psd);

    SweepRow dense = eval_at(p, ThresholdConfig{0.0, 0.0});
    const double improvement = raw_acpr.worst_dbc() - worst_acpr(dense);
    std::printf("  (no-DPD ACPR %.2f dBc, dense DPD ACPR %.2f dBc, NMSE %.2f dB)\n",
                raw_acpr.worst_dbc(), worst_acpr(dense), dense.nmse_db);

    // bisect theta_h on the dense model so sparsity lands mid-window
    // (gamma is monotone in the threshold)
    double lo = 0.0, hi = 1.0, theta = 0.5;
    for (int it = 0; it < 25; ++it) {
        theta = 0.5 * (lo + hi);
        const SweepRow probe = eval_at(p, ThresholdConfig{0.0, theta});
        if (std::abs(probe.gamma - 0.525) < 0.01) break;
        (probe.gamma < 0.525 ? lo : hi) = theta;
    }

    // Dense-trained weights degrade sharply once state updates are skipped;
    // continue training with the thresholds active (straight-through
    // gradients) before judging the sparse operating point.
    TrainConfig fcfg = p.cfg.dpd_train;
    fcfg.lr0 = 2e-3;
    fcfg.seed = 9;
    SweepRow sparse{};
    bool in_window = false;
    for (int attempt = 0; attempt < 3; ++attempt) {
        fcfg.delta_thresholds = ThresholdConfig{0.0, theta};
        auto [ft, frep] = finetune_with_delta(p.dpd_dense, p.behav, p.full, fcfg);
        (void)frep;
        sparse = eval_model(cast_model<double, float>(ft), p, ThresholdConfig{0.0, theta});
        std::printf("  (fine-tuned theta_h %.4f -> gamma %.1f%%, ACPR %.2f dBc, NMSE %.2f dB)\n",
                    sparse.theta_h, 100.0 * sparse.gamma, worst_acpr(sparse), sparse.nmse_db);
        in_window = sparse.gamma >= 0.45 && sparse.gamma <= 0.60;
        if (in_window) break;
        // fine-tuning re-centers hidden activity, shifting gamma slightly
        theta *= sparse.gamma < 0.45 ? 1.3 : (1.0 / 1.3);
    }

    const double acpr_degrade = worst_acpr(sparse) - worst_acpr(dense);
    const double nmse_degrade = sparse.nmse_db - dense.nmse_db;
    const bool pass = improvement >= 10.0 && in_window && acpr_degrade <= 3.0 &&
                      nmse_degrade <= 2.5;
    report(7,
           "synthetic end-to-end gate: >=10 dB ACPR improvement; <=3 dB ACPR / "
           "<=2.5 dB NMSE cost at 45-60% sparsity",
           pass);
    CHECK(pass);
}

TEST_CASE("criterion 8") {
    const auto& p = trained_pipeline();
    double prev = -1.0;
    bool pass = true;
    for (double th : {0.0, 0.008, 0.016, 0.05, 0.1, 0.4}) {
        SweepRow row = eval_at(p, ThresholdConfig{0.0, th});
        if (row.gamma <= prev) pass = false;
        prev = row.gamma;
    }
    report(8, "measured sparsity strictly increases over the published threshold grid", pass);
    CHECK(pass);
}

TEST_CASE("criterion 9") {
    bool pass = true;

    // NMSE of a pure 1.1x gain error
    IqSignal ref;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int i = 0; i < 4096; ++i) ref.samples.emplace_back(d(rng), d(rng));
    IqSignal est = ref;
    for (auto& s : est.samples) s *= 1.1;
    if (std::abs(nmse_db(ref, est) + 20.0) > 1e-9) pass = false;

    // equal-power adjacent channel
    const double fs = 7.68e6, bw = 1.0e6;
    IqSignal two;
    two.sample_rate_hz = fs;
    for (int i = 0; i < 65536; ++i) {
        const double t = static_cast<double>(i) / fs;
        two.samples.push_back(cplx(1.0, 0.0) + std::polar(1.0, 2.0 * M_PI * bw * t));
    }
    auto acpr = acpr_dbc(two, AcprSpec::contiguous(bw), PsdConfig{});
    if (std::abs(acpr.right_dbc) > 0.2) pass = false;

    // Parseval
    auto spec = psd(ref, PsdConfig{});
    if (std::abs(10.0 * std::log10(spec.total_power() / ref.mean_power())) > 0.1) pass = false;

    // PAPR of a single peak
    IqSignal peak;
    peak.samples.assign(1024, cplx{});
    peak.samples[0] = {1.0, 0.0};
    if (std::abs(papr_db(peak) - 10.0 * std::log10(1024.0)) > 1e-9) pass = false;

    report(9, "metric self-tests: NMSE, ACPR, Parseval, PAPR fixed points", pass);
    CHECK(pass);
}

TEST_CASE("criterion 10") {
    const fs::path td = fs::temp_directory_path() / "deltadpd_acceptance_det";
    fs::remove_all(td);
    fs::create_directories(td);
    {
        std::ofstream f(td / "cfg.json");
        f << R"({
  "signal": {"n_symbols": 12},
  "behavioral": {"nmse_gate_db": 0.0, "train": {"epochs": 4, "frame_length": 64, "batch_size": 8}},
  "dpd": {"hidden_size": 8, "train": {"epochs": 4, "frame_length": 64, "batch_size": 8}},
  "metrics": {"psd": {"fft_size": 512}}
})";
    }
    auto run_pipeline = [&](const std::string& out) {
        const std::string base = std::string(DELTADPD_CLI_PATH) + " --config " +
                                 (td / "cfg.json").string() + " --seed 3 --deterministic --out " +
                                 (td / out).string() + " ";
        for (const char* cmd : {"gen", "train-pa", "train-dpd", "sweep"}) {
            const int rc =
                WEXITSTATUS(std::system((base + cmd + " > /dev/null 2>&1").c_str()));
            if (rc != 0) return false;
        }
        return true;
    };
    bool pass = run_pipeline("a") && run_pipeline("b");
    if (pass) {
        auto slurp = [](const fs::path& p) {
            std::ifstream f(p, std::ios::binary);
            std::ostringstream os;
            os << f.rdbuf();
            return os.str();
        };
        const std::string a = slurp(td / "a" / "sweep.csv");
        pass = !a.empty() && a == slurp(td / "b" / "sweep.csv");
    }
    fs::remove_all(td);
    report(10, "two seeded --deterministic pipeline runs give byte-identical sweep CSVs", pass);
    CHECK(pass);
}
