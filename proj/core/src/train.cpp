#include "deltadpd/train.hpp"

#include "deltadpd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

namespace deltadpd {

namespace {

using Vec = VecXd;
using Mat = Eigen::MatrixXd;

template <typename M, typename F>
void for_each_array(M& m, F&& f) {
    if (m.cell_kind == CellKind::Gru) {
        f(m.gru.W_ir); f(m.gru.W_iz); f(m.gru.W_in);
        f(m.gru.W_hr); f(m.gru.W_hz); f(m.gru.W_hn);
        f(m.gru.b_ir); f(m.gru.b_iz); f(m.gru.b_in);
        f(m.gru.b_hr); f(m.gru.b_hz); f(m.gru.b_hn);
    } else {
        f(m.janet.W_if); f(m.janet.W_ic); f(m.janet.W_hf); f(m.janet.W_hc);
        f(m.janet.b_if); f(m.janet.b_ic); f(m.janet.b_hf); f(m.janet.b_hc);
    }
    f(m.head.W_y);
    f(m.head.b_y);
}

Vec sigmoid_v(const Vec& v) { return ((-v.array()).exp() + 1.0).inverse().matrix(); }

// Cached quantities of one cell step. h_mat is the hidden vector that fed
// the matrix products (the buffered value under the delta rule; equal to
// h_prev in dense mode).
struct StepCache {
    Vec phi_mat, h_mat, h_prev;
    Vec r, z, n, a_nh; // GRU
    Vec f, c;          // JANET
};

Vec cell_forward_cached(const DpdModelD& m, const Vec& phi_mat, const Vec& h_mat,
                        const Vec& h_prev, StepCache& cache) {
    cache.phi_mat = phi_mat;
    cache.h_mat = h_mat;
    cache.h_prev = h_prev;
    if (m.cell_kind == CellKind::Gru) {
        const auto& w = m.gru;
        cache.r = sigmoid_v(w.W_ir * phi_mat + w.b_ir + w.W_hr * h_mat + w.b_hr);
        cache.z = sigmoid_v(w.W_iz * phi_mat + w.b_iz + w.W_hz * h_mat + w.b_hz);
        cache.a_nh = w.W_hn * h_mat + w.b_hn;
        cache.n = (w.W_in * phi_mat + w.b_in + cache.r.cwiseProduct(cache.a_nh)).array().tanh();
        return (Vec::Ones(w.hidden_size) - cache.z).cwiseProduct(h_prev) +
               cache.z.cwiseProduct(cache.n);
    }
    const auto& w = m.janet;
    cache.f = sigmoid_v(w.W_if * phi_mat + w.b_if + w.W_hf * h_mat + w.b_hf);
    cache.c = (w.W_ic * phi_mat + w.b_ic + w.W_hc * h_mat + w.b_hc).array().tanh();
    return cache.f.cwiseProduct(h_prev) + (Vec::Ones(w.hidden_size) - cache.f).cwiseProduct(cache.c);
}

// Backward of one cell step. Adds parameter gradients into `g` (when
// non-null), returns d(phi) and accumulates into dh_prev. The delta rule
// is treated as identity (straight-through), so gradients through h_mat
// are routed to h_prev.
Vec cell_backward(const DpdModelD& m, const StepCache& c, const Vec& dh, Vec& dh_prev,
                  DpdModelD* g) {
    if (m.cell_kind == CellKind::Gru) {
        const auto& w = m.gru;
        Vec dz = dh.cwiseProduct(c.n - c.h_prev);
        Vec dn = dh.cwiseProduct(c.z);
        dh_prev += dh.cwiseProduct(Vec::Ones(dh.size()) - c.z);
        Vec dn_pre = dn.cwiseProduct((1.0 - c.n.array().square()).matrix());
        Vec dr = dn_pre.cwiseProduct(c.a_nh);
        Vec da_nh = dn_pre.cwiseProduct(c.r);
        Vec da_r = dr.cwiseProduct(c.r).cwiseProduct(Vec::Ones(dr.size()) - c.r);
        Vec da_z = dz.cwiseProduct(c.z).cwiseProduct(Vec::Ones(dz.size()) - c.z);
        if (g) {
            g->gru.W_ir += da_r * c.phi_mat.transpose();
            g->gru.W_hr += da_r * c.h_mat.transpose();
            g->gru.b_ir += da_r;
            g->gru.b_hr += da_r;
            g->gru.W_iz += da_z * c.phi_mat.transpose();
            g->gru.W_hz += da_z * c.h_mat.transpose();
            g->gru.b_iz += da_z;
            g->gru.b_hz += da_z;
            g->gru.W_in += dn_pre * c.phi_mat.transpose();
            g->gru.b_in += dn_pre;
            g->gru.W_hn += da_nh * c.h_mat.transpose();
            g->gru.b_hn += da_nh;
        }
        dh_prev += w.W_hr.transpose() * da_r + w.W_hz.transpose() * da_z +
                   w.W_hn.transpose() * da_nh;
        return w.W_ir.transpose() * da_r + w.W_iz.transpose() * da_z +
               w.W_in.transpose() * dn_pre;
    }
    const auto& w = m.janet;
    Vec df = dh.cwiseProduct(c.h_prev - c.c);
    Vec dc = dh.cwiseProduct(Vec::Ones(dh.size()) - c.f);
    dh_prev += dh.cwiseProduct(c.f);
    Vec da_f = df.cwiseProduct(c.f).cwiseProduct(Vec::Ones(df.size()) - c.f);
    Vec da_c = dc.cwiseProduct((1.0 - c.c.array().square()).matrix());
    if (g) {
        g->janet.W_if += da_f * c.phi_mat.transpose();
        g->janet.W_hf += da_f * c.h_mat.transpose();
        g->janet.b_if += da_f;
        g->janet.b_hf += da_f;
        g->janet.W_ic += da_c * c.phi_mat.transpose();
        g->janet.W_hc += da_c * c.h_mat.transpose();
        g->janet.b_ic += da_c;
        g->janet.b_hc += da_c;
    }
    dh_prev += w.W_hf.transpose() * da_f + w.W_hc.transpose() * da_c;
    return w.W_if.transpose() * da_f + w.W_ic.transpose() * da_c;
}

Vec feature_vec(double ui, double uq) {
    Vec psi(kInputSize);
    const double m = std::sqrt(ui * ui + uq * uq);
    if (m > 0.0)
        psi << ui, uq, m, m * m * m, uq / m, ui / m;
    else
        psi.setZero();
    return psi;
}

// d(loss)/d(u) from d(loss)/d(psi) for psi = [I, Q, |u|, |u|^3, sin, cos].
// At |u| == 0 only the identity components carry gradient.
Eigen::Vector2d feature_backward(double ui, double uq, const Vec& dpsi) {
    const double m2 = ui * ui + uq * uq;
    Eigen::Vector2d du(dpsi(0), dpsi(1));
    if (m2 > 0.0) {
        const double m = std::sqrt(m2);
        const double m3 = m2 * m;
        du(0) += dpsi(2) * ui / m + dpsi(3) * 3.0 * m * ui + dpsi(4) * (-uq * ui / m3) +
                 dpsi(5) * (uq * uq / m3);
        du(1) += dpsi(2) * uq / m + dpsi(3) * 3.0 * m * uq + dpsi(4) * (ui * ui / m3) +
                 dpsi(5) * (-ui * uq / m3);
    }
    return du;
}

// Thresholded buffer update; returns the buffered vector to feed the
// matrix products.
void delta_buffer_update(const Vec& x, Vec& x_tilde, double theta) {
    for (Eigen::Index k = 0; k < x.size(); ++k)
        if (std::abs(x(k) - x_tilde(k)) > theta) x_tilde(k) = x(k);
}

struct FrameSlice {
    const FeatureSeq* feats;
    const std::vector<cplx>* targets;
    std::size_t start;
    int len;
};

} // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (lr0 <= 0) throw ConfigError("train: lr0 must be > 0");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (frame_length < 2) throw ConfigError("train: frame_length must be >= 2");
    if (plateau_factor <= 0 || plateau_factor >= 1)
        throw ConfigError("train: plateau_factor must be in (0,1)");
}

AdamW::AdamW(Eigen::Index n_params, double lr, double weight_decay, double beta1, double beta2,
             double eps)
    : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(VecXd::Zero(n_params)), v_(VecXd::Zero(n_params)) {}

void AdamW::step(VecXd& params, const VecXd& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw StructuralError("AdamW: parameter/gradient size mismatch");
    t_ += 1;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grads;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grads.cwiseProduct(grads);
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    // decoupled decay: applied to parameters, not through the moments
    params *= (1.0 - lr_ * wd_);
    params -= lr_ * (m_ / bc1).cwiseQuotient(((v_ / bc2).cwiseSqrt().array() + eps_).matrix());
}

double PlateauScheduler::observe(double val_nmse_db) {
    if (val_nmse_db < best_ - min_delta_) {
        best_ = val_nmse_db;
        stale_ = 0;
    } else {
        stale_ += 1;
        if (stale_ > patience_) {
            lr_ *= factor_;
            stale_ = 0;
        }
    }
    return lr_;
}

VecXd flatten(const DpdModelD& m) {
    std::size_t total = 0;
    for_each_array(const_cast<DpdModelD&>(m),
                   [&](auto& a) { total += static_cast<std::size_t>(a.size()); });
    VecXd out(static_cast<Eigen::Index>(total));
    Eigen::Index off = 0;
    for_each_array(const_cast<DpdModelD&>(m), [&](auto& a) {
        for (Eigen::Index i = 0; i < a.size(); ++i) out(off++) = a.data()[i];
    });
    return out;
}

void unflatten(const VecXd& v, DpdModelD& m) {
    Eigen::Index off = 0;
    for_each_array(m, [&](auto& a) {
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = v(off++);
    });
    if (off != v.size()) throw StructuralError("unflatten: size mismatch");
}

DpdModelD zeros_like(const DpdModelD& m) {
    DpdModelD z = m;
    for_each_array(z, [](auto& a) { a.setZero(); });
    return z;
}

FrameGrad bptt_gradients(const DpdModelD& model, const DpdModelD* pa, const FeatureSeq& feats,
                         const std::vector<cplx>& targets, std::size_t start, int len,
                         const ThresholdConfig* delta) {
    if (len < 2) throw StructuralError("bptt_gradients: frame length must be >= 2");
    if (start + static_cast<std::size_t>(len) > feats.size() ||
        start + static_cast<std::size_t>(len) > targets.size())
        throw StructuralError("bptt_gradients: frame out of range");

    const int hd = model.hidden_size();
    const int hp = pa ? pa->hidden_size() : 0;

    std::vector<StepCache> dpd_cache(static_cast<std::size_t>(len));
    std::vector<StepCache> pa_cache(pa ? static_cast<std::size_t>(len) : 0);
    std::vector<Vec> h_d(static_cast<std::size_t>(len));
    std::vector<Vec> h_p(pa ? static_cast<std::size_t>(len) : 0);
    std::vector<Eigen::Vector2d> u(static_cast<std::size_t>(len));
    std::vector<Eigen::Vector2d> y(static_cast<std::size_t>(len));

    Vec hd_prev = Vec::Zero(hd);
    Vec hp_prev = pa ? Vec::Zero(hp) : Vec();
    Vec xt_phi = Vec::Zero(kInputSize);
    Vec xt_h = Vec::Zero(hd);

    double loss = 0.0;
    for (int t = 0; t < len; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        Vec phi = feats.frames[start + ts];
        Vec phi_mat = phi, h_mat = hd_prev;
        if (delta) {
            delta_buffer_update(phi, xt_phi, delta->theta_phi);
            delta_buffer_update(hd_prev, xt_h, delta->theta_h);
            phi_mat = xt_phi;
            h_mat = xt_h;
        }
        h_d[ts] = cell_forward_cached(model, phi_mat, h_mat, hd_prev, dpd_cache[ts]);
        hd_prev = h_d[ts];
        Vec out2 = model.head.W_y * h_d[ts] + model.head.b_y;
        u[ts] = Eigen::Vector2d(out2(0), out2(1));

        if (pa) {
            Vec psi = feature_vec(u[ts](0), u[ts](1));
            h_p[ts] = cell_forward_cached(*pa, psi, hp_prev, hp_prev, pa_cache[ts]);
            hp_prev = h_p[ts];
            Vec yp = pa->head.W_y * h_p[ts] + pa->head.b_y;
            y[ts] = Eigen::Vector2d(yp(0), yp(1));
        } else {
            y[ts] = u[ts];
        }
        const cplx tgt = targets[start + ts];
        loss += (y[ts](0) - tgt.real()) * (y[ts](0) - tgt.real()) +
                (y[ts](1) - tgt.imag()) * (y[ts](1) - tgt.imag());
    }
    loss /= len;
    if (!std::isfinite(loss)) throw NumericError("bptt_gradients: non-finite loss");

    FrameGrad fg;
    fg.grads = zeros_like(model);
    fg.loss = loss;

    Vec dh_d = Vec::Zero(hd);
    Vec dh_p = pa ? Vec::Zero(hp) : Vec();
    for (int t = len - 1; t >= 0; --t) {
        const auto ts = static_cast<std::size_t>(t);
        const cplx tgt = targets[start + ts];
        Eigen::Vector2d dy((2.0 / len) * (y[ts](0) - tgt.real()),
                           (2.0 / len) * (y[ts](1) - tgt.imag()));
        Eigen::Vector2d du;
        if (pa) {
            Vec dhp_t = pa->head.W_y.transpose() * dy + dh_p;
            Vec dh_p_prev = Vec::Zero(hp);
            Vec dpsi = cell_backward(*pa, pa_cache[ts], dhp_t, dh_p_prev, nullptr);
            dh_p = dh_p_prev;
            du = feature_backward(u[ts](0), u[ts](1), dpsi);
        } else {
            du = dy;
        }
        Vec du_v(2);
        du_v << du(0), du(1);
        fg.grads.head.W_y += du_v * h_d[ts].transpose();
        fg.grads.head.b_y += du_v;
        Vec dhd_t = model.head.W_y.transpose() * du_v + dh_d;
        Vec dh_d_prev = Vec::Zero(hd);
        cell_backward(model, dpd_cache[ts], dhd_t, dh_d_prev, &fg.grads);
        dh_d = dh_d_prev;
    }
    return fg;
}

IqSignal cascade_forward(const DpdModelD& model, const DpdModelD* pa, const FeatureSeq& feats,
                         const ThresholdConfig* delta) {
    const int hd = model.hidden_size();
    Vec hd_prev = Vec::Zero(hd);
    Vec hp_prev = pa ? Vec::Zero(pa->hidden_size()) : Vec();
    Vec xt_phi = Vec::Zero(kInputSize);
    Vec xt_h = Vec::Zero(hd);
    StepCache scratch;

    IqSignal out;
    out.samples.reserve(feats.size());
    for (const auto& frame : feats.frames) {
        Vec phi = frame;
        Vec phi_mat = phi, h_mat = hd_prev;
        if (delta) {
            delta_buffer_update(phi, xt_phi, delta->theta_phi);
            delta_buffer_update(hd_prev, xt_h, delta->theta_h);
            phi_mat = xt_phi;
            h_mat = xt_h;
        }
        hd_prev = cell_forward_cached(model, phi_mat, h_mat, hd_prev, scratch);
        Vec u = model.head.W_y * hd_prev + model.head.b_y;
        if (pa) {
            Vec psi = feature_vec(u(0), u(1));
            hp_prev = cell_forward_cached(*pa, psi, hp_prev, hp_prev, scratch);
            u = pa->head.W_y * hp_prev + pa->head.b_y;
        }
        out.samples.emplace_back(u(0), u(1));
    }
    return out;
}

namespace {

// Shared epoch loop for dense training, behavioral fitting and delta
// fine-tuning. `pa` null means the model output is compared to targets
// directly.
std::pair<DpdModelD, TrainReport> train_impl(DpdModelD model, const DpdModelD* pa,
                                             const FeatureSeq& train_feats,
                                             const std::vector<cplx>& train_targets,
                                             const FeatureSeq& val_feats,
                                             const IqSignal& val_target, const TrainConfig& cfg) {
    cfg.validate();
    const ThresholdConfig* delta =
        cfg.delta_thresholds.has_value() ? &cfg.delta_thresholds.value() : nullptr;

    const int stride = cfg.frame_stride > 0 ? cfg.frame_stride : cfg.frame_length / 2;
    std::vector<std::size_t> frame_starts;
    for (std::size_t s = 0; s + static_cast<std::size_t>(cfg.frame_length) <= train_feats.size();
         s += static_cast<std::size_t>(stride))
        frame_starts.push_back(s);
    if (frame_starts.empty())
        throw ConfigError("train: training split shorter than one frame");

    VecXd params = flatten(model);
    AdamW opt(params.size(), cfg.lr0, cfg.weight_decay);
    PlateauScheduler sched(cfg.lr0, cfg.plateau_patience, cfg.plateau_factor,
                           cfg.plateau_min_delta_db);
    std::mt19937_64 rng(cfg.seed);

    TrainReport report;
    DpdModelD best = model;
    double best_nmse = 1e300;

    const int n_threads = std::max(1, cfg.n_threads);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = frame_starts;
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0.0;
        std::size_t n_frames_done = 0;
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t b_end =
                std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
            const std::size_t nb = b_end - b;
            std::vector<FrameGrad> fgs(nb);

            auto worker = [&](std::size_t lo, std::size_t hi) {
                for (std::size_t i = lo; i < hi; ++i)
                    fgs[i] = bptt_gradients(model, pa, train_feats, train_targets, order[b + i],
                                            cfg.frame_length, delta);
            };
            if (n_threads == 1 || nb < 2) {
                worker(0, nb);
            } else {
                std::vector<std::thread> pool;
                const std::size_t chunk = (nb + static_cast<std::size_t>(n_threads) - 1) /
                                          static_cast<std::size_t>(n_threads);
                for (std::size_t lo = 0; lo < nb; lo += chunk)
                    pool.emplace_back(worker, lo, std::min(nb, lo + chunk));
                for (auto& t : pool) t.join();
            }

            // ordered reduction: deterministic regardless of thread count
            VecXd gsum = VecXd::Zero(params.size());
            double lsum = 0.0;
            for (std::size_t i = 0; i < nb; ++i) {
                gsum += flatten(fgs[i].grads);
                lsum += fgs[i].loss;
            }
            gsum /= static_cast<double>(nb);
            if (!gsum.allFinite())
                throw NumericError("train: non-finite gradient at epoch " + std::to_string(epoch));
            opt.step(params, gsum);
            unflatten(params, model);
            epoch_loss += lsum;
            n_frames_done += nb;
        }
        epoch_loss /= static_cast<double>(n_frames_done);
        if (!std::isfinite(epoch_loss))
            throw NumericError("train: loss diverged (NaN) at epoch " + std::to_string(epoch));

        IqSignal val_out = cascade_forward(model, pa, val_feats, delta);
        val_out.sample_rate_hz = val_target.sample_rate_hz;
        const double val_nmse = nmse_db(val_target, val_out);

        report.train_loss.push_back(epoch_loss);
        report.val_nmse_db.push_back(val_nmse);
        report.lr.push_back(opt.lr());
        if (val_nmse < best_nmse) {
            best_nmse = val_nmse;
            best = model;
            report.best_epoch = epoch;
        }
        opt.set_lr(sched.observe(val_nmse));
    }
    report.best_val_nmse_db = best_nmse;
    return {std::move(best), std::move(report)};
}

} // namespace

std::pair<DpdModelD, TrainReport> train_dpd(const DpdModelD& pa_behav, DpdModelD init,
                                            const Dataset& data, const TrainConfig& cfg) {
    auto splits = split_dataset(data, static_cast<std::size_t>(cfg.frame_length));
    auto train_feats = extract_features(splits.train.input);
    auto val_feats = extract_features(splits.val.input);

    std::vector<cplx> train_targets;
    train_targets.reserve(splits.train.input.size());
    for (const auto& s : splits.train.input.samples) train_targets.push_back(cfg.target_gain * s);
    IqSignal val_target;
    val_target.sample_rate_hz = splits.val.input.sample_rate_hz;
    for (const auto& s : splits.val.input.samples)
        val_target.samples.push_back(cfg.target_gain * s);

    return train_impl(std::move(init), &pa_behav, train_feats, train_targets, val_feats,
                      val_target, cfg);
}

std::pair<DpdModelD, TrainReport> fit_behavioral(const Dataset& data, int hidden_size,
                                                 const TrainConfig& cfg) {
    auto splits = split_dataset(data, static_cast<std::size_t>(cfg.frame_length));
    auto train_feats = extract_features(splits.train.input);
    auto val_feats = extract_features(splits.val.input);
    std::vector<cplx> train_targets(splits.train.target.samples.begin(),
                                    splits.train.target.samples.end());

    DpdModelD init = init_weights<double>(CellKind::Gru, hidden_size, cfg.seed);
    return train_impl(std::move(init), nullptr, train_feats, train_targets, val_feats,
                      splits.val.target, cfg);
}

std::pair<DpdModelD, TrainReport> finetune_with_delta(const DpdModelD& model,
                                                      const DpdModelD& pa_behav,
                                                      const Dataset& data, TrainConfig cfg) {
    if (!cfg.delta_thresholds.has_value())
        throw ConfigError("finetune_with_delta: delta_thresholds must be set");
    return train_dpd(pa_behav, model, data, cfg);
}

} // namespace deltadpd
