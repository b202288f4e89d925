#include <doctest.h>

#include <random>

#include "deltadpd/metrics.hpp"
#include "deltadpd/pa.hpp"
#include "deltadpd/train.hpp"

using namespace deltadpd;

namespace {

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

std::vector<cplx> random_targets(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<cplx> t;
    for (std::size_t i = 0; i < n; ++i) t.emplace_back(d(rng), d(rng));
    return t;
}

double loss_at(const VecXd& theta, DpdModelD proto, const DpdModelD* pa, const FeatureSeq& feats,
               const std::vector<cplx>& targets, int len) {
    unflatten(theta, proto);
    return bptt_gradients(proto, pa, feats, targets, 0, len).loss;
}

} // namespace

TEST_CASE("AdamW: first step moves by -lr, decay shrinks weights") {
    VecXd p(3), g(3);
    p << 1.0, -2.0, 0.5;
    g << 0.3, -0.1, 0.0;
    AdamW opt(3, 5e-3, 0.0);
    VecXd p0 = p;
    opt.step(p, g);
    // bias-corrected first step is -lr * sign(g) up to eps
    CHECK(p(0) == doctest::Approx(p0(0) - 5e-3).epsilon(1e-4));
    CHECK(p(1) == doctest::Approx(p0(1) + 5e-3).epsilon(1e-4));
    CHECK(p(2) == doctest::Approx(p0(2)).epsilon(1e-12)); // zero grad, zero moment

    // decoupled decay: zero gradient still shrinks parameters
    VecXd q(2);
    q << 4.0, -4.0;
    VecXd zg = VecXd::Zero(2);
    AdamW opt2(2, 1e-2, 0.1);
    opt2.step(q, zg);
    CHECK(q(0) == doctest::Approx(4.0 * (1.0 - 1e-2 * 0.1)).epsilon(1e-12));
    CHECK(q(1) == doctest::Approx(-4.0 * (1.0 - 1e-2 * 0.1)).epsilon(1e-12));
}

TEST_CASE("PlateauScheduler: patience, factor, improvement resets") {
    PlateauScheduler sch(1.0, 2, 0.5, 0.01);
    CHECK(sch.observe(-10.0) == 1.0); // first observation sets the best
    CHECK(sch.observe(-10.005) == 1.0); // not enough improvement (stale 1)
    CHECK(sch.observe(-10.002) == 1.0); // stale 2, still within patience
    CHECK(sch.observe(-10.001) == 0.5); // patience exceeded -> decay
    CHECK(sch.observe(-12.0) == 0.5); // real improvement, counter resets
    CHECK(sch.observe(-12.0) == 0.5);
    CHECK(sch.observe(-12.0) == 0.5);
    CHECK(sch.observe(-12.0) == 0.25);
}

TEST_CASE("BPTT gradient check vs central finite differences") {
    // hidden-3 DPD cascaded with a frozen hidden-3 behavioral model,
    // 8-step frames, FP64 throughout
    auto dpd = init_weights<double>(CellKind::Gru, 3, 5);
    auto pa = init_weights<double>(CellKind::Gru, 3, 6);
    auto feats = random_feats(8, 7, 0.8);
    auto targets = random_targets(8, 8);

    auto fg = bptt_gradients(dpd, &pa, feats, targets, 0, 8);
    VecXd theta = flatten(dpd);
    VecXd analytic = flatten(fg.grads);
    const double eps = 1e-6;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        VecXd tp = theta, tm = theta;
        tp(i) += eps;
        tm(i) -= eps;
        const double fd = (loss_at(tp, dpd, &pa, feats, targets, 8) -
                           loss_at(tm, dpd, &pa, feats, targets, 8)) /
                          (2.0 * eps);
        const double denom = std::max({std::abs(fd), std::abs(analytic(i)), 1e-8});
        worst = std::max(worst, std::abs(fd - analytic(i)) / denom);
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("BPTT gradient check without a PA and with JANET") {
    auto dpd = init_weights<double>(CellKind::Janet, 3, 15);
    auto feats = random_feats(8, 17, 0.8);
    auto targets = random_targets(8, 18);
    auto fg = bptt_gradients(dpd, nullptr, feats, targets, 0, 8);
    VecXd theta = flatten(dpd);
    VecXd analytic = flatten(fg.grads);
    const double eps = 1e-6;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        VecXd tp = theta, tm = theta;
        tp(i) += eps;
        tm(i) -= eps;
        const double fd = (loss_at(tp, dpd, nullptr, feats, targets, 8) -
                           loss_at(tm, dpd, nullptr, feats, targets, 8)) /
                          (2.0 * eps);
        const double denom = std::max({std::abs(fd), std::abs(analytic(i)), 1e-8});
        worst = std::max(worst, std::abs(fd - analytic(i)) / denom);
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("zero loss yields zero gradients") {
    auto dpd = init_weights<double>(CellKind::Gru, 3, 5);
    auto feats = random_feats(12, 7, 0.8);
    auto out = cascade_forward(dpd, nullptr, feats);
    std::vector<cplx> targets(out.samples.begin(), out.samples.end());
    auto fg = bptt_gradients(dpd, nullptr, feats, targets, 0, 12);
    CHECK(fg.loss == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(flatten(fg.grads).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gradients are linear in the loss scale") {
    // doubling the residual (by moving targets) doubles the gradient of a
    // linear head parameter path; verified through the difference quotient
    auto dpd = init_weights<double>(CellKind::Gru, 3, 5);
    auto feats = random_feats(8, 9, 0.8);
    auto out = cascade_forward(dpd, nullptr, feats);

    std::vector<cplx> t1, t2;
    for (const auto& y : out.samples) {
        t1.push_back(y + cplx(0.1, -0.05));
        t2.push_back(y + cplx(0.2, -0.1));
    }
    auto g1 = flatten(bptt_gradients(dpd, nullptr, feats, t1, 0, 8).grads);
    auto g2 = flatten(bptt_gradients(dpd, nullptr, feats, t2, 0, 8).grads);
    CHECK((g2 - 2.0 * g1).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("delta thresholds at zero reproduce dense gradients bitwise") {
    auto dpd = init_weights<double>(CellKind::Gru, 4, 3);
    auto pa = init_weights<double>(CellKind::Gru, 4, 4);
    auto feats = random_feats(16, 5, 0.7);
    auto targets = random_targets(16, 6);
    ThresholdConfig th{0.0, 0.0};
    auto dense = bptt_gradients(dpd, &pa, feats, targets, 0, 16);
    auto delta = bptt_gradients(dpd, &pa, feats, targets, 0, 16, &th);
    CHECK(dense.loss == delta.loss);
    CHECK(flatten(dense.grads) == flatten(delta.grads));
}

TEST_CASE("straight-through delta gradients stay close to dense for small thresholds") {
    auto dpd = init_weights<double>(CellKind::Gru, 4, 3);
    auto feats = random_feats(32, 5, 0.7);
    auto targets = random_targets(32, 6);
    ThresholdConfig th{1e-4, 1e-4};
    auto dense = flatten(bptt_gradients(dpd, nullptr, feats, targets, 0, 32).grads);
    auto delta = flatten(bptt_gradients(dpd, nullptr, feats, targets, 0, 32, &th).grads);
    CHECK((dense - delta).norm() / dense.norm() < 0.05);
}

TEST_CASE("train_dpd: frozen PA stays frozen, training is reproducible") {
    auto pa = init_weights<double>(CellKind::Gru, 4, 21);
    VecXd pa_before = flatten(pa);

    Dataset ds;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> d(-0.7, 0.7);
    for (int i = 0; i < 1200; ++i) {
        ds.input.samples.emplace_back(d(rng), d(rng));
        ds.target.samples.emplace_back(0.0, 0.0); // filled below
    }
    ds.target = ds.input;

    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.frame_length = 32;
    cfg.batch_size = 8;
    cfg.seed = 1;

    auto init = init_weights<double>(CellKind::Gru, 4, 2);
    auto [m1, r1] = train_dpd(pa, init, ds, cfg);
    auto [m2, r2] = train_dpd(pa, init, ds, cfg);
    CHECK(flatten(pa) == pa_before);
    CHECK(flatten(m1) == flatten(m2));
    REQUIRE(r1.val_nmse_db.size() == r2.val_nmse_db.size());
    for (std::size_t i = 0; i < r1.val_nmse_db.size(); ++i)
        CHECK(r1.val_nmse_db[i] == r2.val_nmse_db[i]);
    CHECK(r1.best_epoch >= 0);
}

TEST_CASE("fit_behavioral: learns a mild memoryless nonlinearity") {
    // PA: y = x - 0.2 |x|^2 x. A small GRU should reach well under -25 dB
    // NMSE on held-out data within a few epochs.
    MemoryPolyPa pa;
    pa.terms.push_back({1, 0, {1.0, 0.0}});
    pa.terms.push_back({3, 0, {-0.2, 0.0}});

    OfdmConfig ocfg;
    ocfg.n_symbols = 12;
    auto x = generate_ofdm(ocfg);
    Dataset ds;
    ds.input = x;
    ds.target = pa_simulate(pa, x);

    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.frame_length = 64;
    cfg.batch_size = 16;
    cfg.lr0 = 5e-3;
    cfg.seed = 3;

    auto [model, report] = fit_behavioral(ds, 8, cfg);
    CHECK(report.best_val_nmse_db < -25.0);

    // the returned model is the best-validation one
    double best = 1e300;
    for (double v : report.val_nmse_db) best = std::min(best, v);
    CHECK(report.best_val_nmse_db == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("TrainConfig validation") {
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.frame_length = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.lr0 = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
