#ifndef DELTADPD_RNN_HPP
#define DELTADPD_RNN_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "deltadpd/errors.hpp"
#include "deltadpd/iq.hpp"
#include "deltadpd/signal.hpp"

namespace deltadpd {

inline constexpr int kInputSize = 6;

template <typename T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

enum class CellKind { Gru, Janet };

inline const char* to_string(CellKind k) { return k == CellKind::Gru ? "gru" : "janet"; }

/// Standard two-bias GRU parameters (reset r, update z, new n gates).
template <typename T>
struct GruWeightsT {
    MatX<T> W_ir, W_iz, W_in; // hidden x input
    MatX<T> W_hr, W_hz, W_hn; // hidden x hidden
    VecX<T> b_ir, b_iz, b_in, b_hr, b_hz, b_hn;
    int hidden_size = 0;

    static GruWeightsT zeros(int h) {
        GruWeightsT w;
        w.hidden_size = h;
        for (auto* m : {&w.W_ir, &w.W_iz, &w.W_in}) *m = MatX<T>::Zero(h, kInputSize);
        for (auto* m : {&w.W_hr, &w.W_hz, &w.W_hn}) *m = MatX<T>::Zero(h, h);
        for (auto* v : {&w.b_ir, &w.b_iz, &w.b_in, &w.b_hr, &w.b_hz, &w.b_hn})
            *v = VecX<T>::Zero(h);
        return w;
    }

    int param_count() const { return 3 * (hidden_size * kInputSize + hidden_size * hidden_size + 2 * hidden_size); }
};

/// JANET (forget-gate-only) parameters: f = sigma(.), candidate c = tanh(.),
/// h = f*h_prev + (1-f)*c.
template <typename T>
struct JanetWeightsT {
    MatX<T> W_if, W_ic; // hidden x input
    MatX<T> W_hf, W_hc; // hidden x hidden
    VecX<T> b_if, b_ic, b_hf, b_hc;
    int hidden_size = 0;

    static JanetWeightsT zeros(int h) {
        JanetWeightsT w;
        w.hidden_size = h;
        for (auto* m : {&w.W_if, &w.W_ic}) *m = MatX<T>::Zero(h, kInputSize);
        for (auto* m : {&w.W_hf, &w.W_hc}) *m = MatX<T>::Zero(h, h);
        for (auto* v : {&w.b_if, &w.b_ic, &w.b_hf, &w.b_hc}) *v = VecX<T>::Zero(h);
        return w;
    }

    int param_count() const { return 2 * (hidden_size * kInputSize + hidden_size * hidden_size + 2 * hidden_size); }
};

/// 2-output fully connected head producing (I_hat, Q_hat).
template <typename T>
struct FcWeightsT {
    MatX<T> W_y; // 2 x hidden
    VecX<T> b_y; // 2

    static FcWeightsT zeros(int h) {
        FcWeightsT w;
        w.W_y = MatX<T>::Zero(2, h);
        w.b_y = VecX<T>::Zero(2);
        return w;
    }

    int param_count() const { return static_cast<int>(W_y.size() + b_y.size()); }
};

template <typename T>
struct DpdModelT {
    CellKind cell_kind = CellKind::Gru;
    GruWeightsT<T> gru;     // valid when cell_kind == Gru
    JanetWeightsT<T> janet; // valid when cell_kind == Janet
    FcWeightsT<T> head;

    int hidden_size() const {
        return cell_kind == CellKind::Gru ? gru.hidden_size : janet.hidden_size;
    }
    int cell_param_count() const {
        return cell_kind == CellKind::Gru ? gru.param_count() : janet.param_count();
    }
    int param_count() const { return cell_param_count() + head.param_count(); }
};

using GruWeights = GruWeightsT<float>;
using JanetWeights = JanetWeightsT<float>;
using FcWeights = FcWeightsT<float>;
using DpdModel = DpdModelT<float>;

template <typename T>
void check_dims(const GruWeightsT<T>& w) {
    const int h = w.hidden_size;
    if (h < 1) throw StructuralError("gru: hidden_size must be >= 1");
    if (w.W_ir.rows() != h || w.W_ir.cols() != kInputSize || w.W_hr.rows() != h ||
        w.W_hr.cols() != h || w.b_ir.size() != h || w.b_hr.size() != h ||
        w.W_iz.rows() != h || w.W_in.rows() != h || w.W_hz.cols() != h || w.W_hn.cols() != h)
        throw StructuralError("gru: inconsistent weight dimensions");
}

template <typename T>
void check_dims(const JanetWeightsT<T>& w) {
    const int h = w.hidden_size;
    if (h < 1) throw StructuralError("janet: hidden_size must be >= 1");
    if (w.W_if.rows() != h || w.W_if.cols() != kInputSize || w.W_hf.rows() != h ||
        w.W_hf.cols() != h || w.b_if.size() != h || w.b_hc.size() != h)
        throw StructuralError("janet: inconsistent weight dimensions");
}

template <typename T>
VecX<T> sigmoid(const VecX<T>& v) {
    return ((-v.array()).exp() + T(1)).inverse().matrix();
}

/// One dense GRU step: r = sigma(W_ir phi + b_ir + W_hr h + b_hr),
/// z likewise, n = tanh(W_in phi + b_in + r .* (W_hn h + b_hn)),
/// h' = (1 - z) .* h + z .* n.
template <typename T>
VecX<T> gru_step(const GruWeightsT<T>& w, const VecX<T>& phi, const VecX<T>& h_prev) {
    if (phi.size() != kInputSize || h_prev.size() != w.hidden_size)
        throw StructuralError("gru_step: dimension mismatch");
    // pre-activations in double so long recurrences stay aligned with the
    // wide-accumulator delta engine; activations and state in T
    const VecX<double> phi_d = phi.template cast<double>();
    const VecX<double> h_d = h_prev.template cast<double>();
    auto pre = [&](const MatX<T>& Wi, const VecX<T>& bi, const MatX<T>& Wh, const VecX<T>& bh) {
        return (Wi.template cast<double>() * phi_d + bi.template cast<double>() +
                Wh.template cast<double>() * h_d + bh.template cast<double>())
            .template cast<T>()
            .eval();
    };
    VecX<T> r = sigmoid<T>(pre(w.W_ir, w.b_ir, w.W_hr, w.b_hr));
    VecX<T> z = sigmoid<T>(pre(w.W_iz, w.b_iz, w.W_hz, w.b_hz));
    VecX<T> a_nphi = (w.W_in.template cast<double>() * phi_d + w.b_in.template cast<double>())
                         .template cast<T>();
    VecX<T> a_nh = (w.W_hn.template cast<double>() * h_d + w.b_hn.template cast<double>())
                       .template cast<T>();
    VecX<T> n = (a_nphi + r.cwiseProduct(a_nh)).array().tanh();
    return ((VecX<T>::Ones(w.hidden_size) - z).cwiseProduct(h_prev) + z.cwiseProduct(n));
}

template <typename T>
VecX<T> janet_step(const JanetWeightsT<T>& w, const VecX<T>& phi, const VecX<T>& h_prev) {
    if (phi.size() != kInputSize || h_prev.size() != w.hidden_size)
        throw StructuralError("janet_step: dimension mismatch");
    const VecX<double> phi_d = phi.template cast<double>();
    const VecX<double> h_d = h_prev.template cast<double>();
    VecX<T> f = sigmoid<T>((w.W_if.template cast<double>() * phi_d +
                            w.b_if.template cast<double>() +
                            w.W_hf.template cast<double>() * h_d + w.b_hf.template cast<double>())
                               .template cast<T>()
                               .eval());
    VecX<T> a_cphi = (w.W_ic.template cast<double>() * phi_d + w.b_ic.template cast<double>())
                         .template cast<T>();
    VecX<T> a_ch = (w.W_hc.template cast<double>() * h_d + w.b_hc.template cast<double>())
                       .template cast<T>();
    VecX<T> c = (a_cphi + a_ch).array().tanh();
    return f.cwiseProduct(h_prev) + (VecX<T>::Ones(w.hidden_size) - f).cwiseProduct(c);
}

template <typename T>
VecX<T> cell_step(const DpdModelT<T>& m, const VecX<T>& phi, const VecX<T>& h_prev) {
    return m.cell_kind == CellKind::Gru ? gru_step(m.gru, phi, h_prev)
                                        : janet_step(m.janet, phi, h_prev);
}

/// Dense forward pass over a feature sequence; output sample t is the FC
/// head applied to h_t, interpreted as I + jQ.
template <typename T>
IqSignal forward(const DpdModelT<T>& m, const FeatureSeq& feats, VecX<T> h0 = {}) {
    const int h = m.hidden_size();
    if (h0.size() == 0) h0 = VecX<T>::Zero(h);
    if (h0.size() != h) throw StructuralError("forward: h0 length mismatch");

    IqSignal out;
    out.samples.reserve(feats.size());
    VecX<T> state = h0;
    VecX<T> phi(kInputSize);
    for (const auto& f : feats.frames) {
        phi = f.template cast<T>();
        state = cell_step(m, phi, state);
        VecX<T> y = m.head.W_y * state + m.head.b_y;
        out.samples.emplace_back(static_cast<double>(y(0)), static_cast<double>(y(1)));
    }
    return out;
}

/// Uniform init in [-1/sqrt(h), 1/sqrt(h)], seeded.
template <typename T>
DpdModelT<T> init_weights(CellKind kind, int hidden_size, std::uint64_t seed) {
    if (hidden_size < 1) throw StructuralError("init_weights: hidden_size must be >= 1");
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto fill = [&](auto& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(dist(rng));
    };

    DpdModelT<T> model;
    model.cell_kind = kind;
    if (kind == CellKind::Gru) {
        model.gru = GruWeightsT<T>::zeros(hidden_size);
        for (auto* m : {&model.gru.W_ir, &model.gru.W_iz, &model.gru.W_in, &model.gru.W_hr,
                        &model.gru.W_hz, &model.gru.W_hn})
            fill(*m);
        for (auto* v : {&model.gru.b_ir, &model.gru.b_iz, &model.gru.b_in, &model.gru.b_hr,
                        &model.gru.b_hz, &model.gru.b_hn})
            fill(*v);
    } else {
        model.janet = JanetWeightsT<T>::zeros(hidden_size);
        for (auto* m : {&model.janet.W_if, &model.janet.W_ic, &model.janet.W_hf, &model.janet.W_hc})
            fill(*m);
        for (auto* v : {&model.janet.b_if, &model.janet.b_ic, &model.janet.b_hf, &model.janet.b_hc})
            fill(*v);
    }
    model.head = FcWeightsT<T>::zeros(hidden_size);
    fill(model.head.W_y);
    fill(model.head.b_y);
    return model;
}

template <typename T, typename U>
DpdModelT<U> cast_model(const DpdModelT<T>& m) {
    DpdModelT<U> out;
    out.cell_kind = m.cell_kind;
    if (m.cell_kind == CellKind::Gru) {
        out.gru.hidden_size = m.gru.hidden_size;
        out.gru.W_ir = m.gru.W_ir.template cast<U>();
        out.gru.W_iz = m.gru.W_iz.template cast<U>();
        out.gru.W_in = m.gru.W_in.template cast<U>();
        out.gru.W_hr = m.gru.W_hr.template cast<U>();
        out.gru.W_hz = m.gru.W_hz.template cast<U>();
        out.gru.W_hn = m.gru.W_hn.template cast<U>();
        out.gru.b_ir = m.gru.b_ir.template cast<U>();
        out.gru.b_iz = m.gru.b_iz.template cast<U>();
        out.gru.b_in = m.gru.b_in.template cast<U>();
        out.gru.b_hr = m.gru.b_hr.template cast<U>();
        out.gru.b_hz = m.gru.b_hz.template cast<U>();
        out.gru.b_hn = m.gru.b_hn.template cast<U>();
    } else {
        out.janet.hidden_size = m.janet.hidden_size;
        out.janet.W_if = m.janet.W_if.template cast<U>();
        out.janet.W_ic = m.janet.W_ic.template cast<U>();
        out.janet.W_hf = m.janet.W_hf.template cast<U>();
        out.janet.W_hc = m.janet.W_hc.template cast<U>();
        out.janet.b_if = m.janet.b_if.template cast<U>();
        out.janet.b_ic = m.janet.b_ic.template cast<U>();
        out.janet.b_hf = m.janet.b_hf.template cast<U>();
        out.janet.b_hc = m.janet.b_hc.template cast<U>();
    }
    out.head.W_y = m.head.W_y.template cast<U>();
    out.head.b_y = m.head.b_y.template cast<U>();
    return out;
}

// Weight file round trip (JSON; full double precision, bit-exact).
void save_model(const std::string& path, const DpdModelT<double>& m);
DpdModelT<double> load_model(const std::string& path);

} // namespace deltadpd

#endif
