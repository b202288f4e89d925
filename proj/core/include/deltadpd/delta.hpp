#ifndef DELTADPD_DELTA_HPP
#define DELTADPD_DELTA_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "deltadpd/rnn.hpp"

namespace deltadpd {

/// Delta thresholds for the input-feature vector (theta_phi) and the
/// hidden-state vector (theta_h).
struct ThresholdConfig {
    double theta_phi = 0.0;
    double theta_h = 0.0;
};

/// Per-stream runtime state of the delta engine: buffered last-significant
/// values x~, the hidden state, and the gate pre-activation accumulators.
/// The accumulators are kept in double regardless of the datapath type:
/// they integrate rounding error over the whole stream, and a wide
/// accumulator keeps long runs aligned with dense recomputation.
template <typename T>
struct DeltaStateT {
    VecX<T> x_tilde_phi; // 6
    VecX<T> x_tilde_h;   // hidden
    VecX<T> h;           // hidden
    // GRU accumulators
    VecX<double> M_r, M_z, M_nphi, M_nh;
    // JANET accumulators
    VecX<double> M_f, M_cphi, M_ch;
    std::int64_t step_index = 0;
};

using DeltaState = DeltaStateT<float>;

/// Exact per-stream accounting of skipped/active delta components and the
/// arithmetic / memory traffic they imply.
///
/// Op-counting constants (per step, hidden size n, input size 6, g gates
/// sharing each delta vector -- GRU g=3, JANET g=2):
///   MUL = active column MACs + pointwise gate products (3n GRU / 2n JANET)
///         + 2n head products
///   ADD = active column MACs (accumulate into M) + (6+n) delta
///         subtractions + n gate-combine adds + n state-update adds
///         + 2n head adds (dot sums + bias)
///   MEM = active column MACs (weight fetches) + (6+n) x~ reads + active
///         x~ writes + read/write of all M vectors + read/write of h
///         + 2n+2 head weight/bias fetches
/// Activations (sigma, tanh) are tallied separately, not as MUL/ADD.
struct SparsityStats {
    std::int64_t skipped_phi_components = 0;
    std::int64_t total_phi_components = 0;
    std::int64_t skipped_h_components = 0;
    std::int64_t total_h_components = 0;
    std::int64_t skipped_macs = 0; // MAC-weighted skipped work
    std::int64_t total_macs = 0;   // MAC-weighted total column work
    std::int64_t mul_count = 0;
    std::int64_t add_count = 0;
    std::int64_t mem_count = 0;
    std::int64_t activation_count = 0;
    std::int64_t steps = 0;

    /// MAC-weighted overall temporal sparsity.
    double gamma_overall() const {
        return total_macs > 0 ? static_cast<double>(skipped_macs) / static_cast<double>(total_macs)
                              : 0.0;
    }

    void merge(const SparsityStats& o) {
        skipped_phi_components += o.skipped_phi_components;
        total_phi_components += o.total_phi_components;
        skipped_h_components += o.skipped_h_components;
        total_h_components += o.total_h_components;
        skipped_macs += o.skipped_macs;
        total_macs += o.total_macs;
        mul_count += o.mul_count;
        add_count += o.add_count;
        mem_count += o.mem_count;
        activation_count += o.activation_count;
        steps += o.steps;
    }
};

/// Thresholded delta encoding (the delta updating rule). Per component k:
/// keep when |x_k - x~_k| > theta (strict), buffer the new value; else
/// emit zero and leave the buffer untouched.
template <typename T>
struct DeltaEncodeResult {
    VecX<T> delta;
    // the same differences widened before subtraction; accumulating these
    // into the double gate accumulators telescopes exactly, so M always
    // equals biases + W * x~ to double precision
    VecX<double> delta_wide;
    VecX<T> x_tilde_next;
    std::vector<char> active_mask;
};

template <typename T>
DeltaEncodeResult<T> delta_encode(const VecX<T>& x, const VecX<T>& x_tilde, double theta) {
    if (x.size() != x_tilde.size()) throw StructuralError("delta_encode: length mismatch");
    if (theta < 0) throw StructuralError("delta_encode: theta must be >= 0");
    DeltaEncodeResult<T> r;
    r.delta = VecX<T>::Zero(x.size());
    r.delta_wide = VecX<double>::Zero(x.size());
    r.x_tilde_next = x_tilde;
    r.active_mask.assign(static_cast<std::size_t>(x.size()), 0);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const T d = x(k) - x_tilde(k);
        if (static_cast<double>(d < 0 ? -d : d) > theta) {
            r.delta(k) = d;
            r.delta_wide(k) = static_cast<double>(x(k)) - static_cast<double>(x_tilde(k));
            r.x_tilde_next(k) = x(k);
            r.active_mask[static_cast<std::size_t>(k)] = 1;
        }
    }
    return r;
}

template <typename T>
DeltaStateT<T> init_delta_state(const DpdModelT<T>& m) {
    DeltaStateT<T> s;
    const int h = m.hidden_size();
    s.x_tilde_phi = VecX<T>::Zero(kInputSize);
    s.x_tilde_h = VecX<T>::Zero(h);
    s.h = VecX<T>::Zero(h);
    if (m.cell_kind == CellKind::Gru) {
        s.M_r = (m.gru.b_ir + m.gru.b_hr).template cast<double>();
        s.M_z = (m.gru.b_iz + m.gru.b_hz).template cast<double>();
        s.M_nphi = m.gru.b_in.template cast<double>();
        s.M_nh = m.gru.b_hn.template cast<double>();
    } else {
        s.M_f = (m.janet.b_if + m.janet.b_hf).template cast<double>();
        s.M_cphi = m.janet.b_ic.template cast<double>();
        s.M_ch = m.janet.b_hc.template cast<double>();
    }
    return s;
}

namespace detail {

// M += W * delta using only active columns (M x SV).
template <typename T>
void accumulate_active(VecX<double>& M, const MatX<T>& W, const VecX<double>& delta_wide,
                       const std::vector<char>& mask) {
    for (Eigen::Index k = 0; k < delta_wide.size(); ++k)
        if (mask[static_cast<std::size_t>(k)])
            M += W.col(k).template cast<double>() * delta_wide(k);
}

template <typename T>
void check_finite(const VecX<T>& v, std::int64_t step) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!std::isfinite(static_cast<double>(v(i))))
            throw NumericError("delta engine: non-finite accumulator at step " +
                               std::to_string(step));
}

inline std::int64_t count_active(const std::vector<char>& mask) {
    std::int64_t n = 0;
    for (char c : mask) n += c;
    return n;
}

} // namespace detail

/// One delta step of either cell kind. Updates state and stats in place,
/// returns the head output as I + jQ.
template <typename T>
cplx delta_step(const DpdModelT<T>& m, const VecX<T>& phi, DeltaStateT<T>& s,
                const ThresholdConfig& th, SparsityStats& stats) {
    const int h = m.hidden_size();
    const int gates = m.cell_kind == CellKind::Gru ? 3 : 2;

    auto ephi = delta_encode<T>(phi, s.x_tilde_phi, th.theta_phi);
    auto eh = delta_encode<T>(s.h, s.x_tilde_h, th.theta_h);
    s.x_tilde_phi = ephi.x_tilde_next;
    s.x_tilde_h = eh.x_tilde_next;

    const std::int64_t act_phi = detail::count_active(ephi.active_mask);
    const std::int64_t act_h = detail::count_active(eh.active_mask);
    const std::int64_t active_macs = (act_phi + act_h) * gates * h;

    int n_m_vectors = 0;
    VecX<T> y;
    if (m.cell_kind == CellKind::Gru) {
        detail::accumulate_active(s.M_r, m.gru.W_ir, ephi.delta_wide, ephi.active_mask);
        detail::accumulate_active(s.M_r, m.gru.W_hr, eh.delta_wide, eh.active_mask);
        detail::accumulate_active(s.M_z, m.gru.W_iz, ephi.delta_wide, ephi.active_mask);
        detail::accumulate_active(s.M_z, m.gru.W_hz, eh.delta_wide, eh.active_mask);
        detail::accumulate_active(s.M_nphi, m.gru.W_in, ephi.delta_wide, ephi.active_mask);
        detail::accumulate_active(s.M_nh, m.gru.W_hn, eh.delta_wide, eh.active_mask);
        detail::check_finite(s.M_r, s.step_index);
        detail::check_finite(s.M_z, s.step_index);
        detail::check_finite(s.M_nphi, s.step_index);
        detail::check_finite(s.M_nh, s.step_index);

        VecX<T> r = sigmoid<T>(s.M_r.template cast<T>());
        VecX<T> z = sigmoid<T>(s.M_z.template cast<T>());
        VecX<T> n = (s.M_nphi.template cast<T>() +
                     r.cwiseProduct(s.M_nh.template cast<T>()))
                        .array()
                        .tanh();
        s.h = (VecX<T>::Ones(h) - z).cwiseProduct(s.h) + z.cwiseProduct(n);
        n_m_vectors = 4;
        stats.activation_count += 3 * h;
        stats.mul_count += 3 * h; // r.*M_nh, (1-z).*h, z.*n
    } else {
        detail::accumulate_active(s.M_f, m.janet.W_if, ephi.delta_wide, ephi.active_mask);
        detail::accumulate_active(s.M_f, m.janet.W_hf, eh.delta_wide, eh.active_mask);
        detail::accumulate_active(s.M_cphi, m.janet.W_ic, ephi.delta_wide, ephi.active_mask);
        detail::accumulate_active(s.M_ch, m.janet.W_hc, eh.delta_wide, eh.active_mask);
        detail::check_finite(s.M_f, s.step_index);
        detail::check_finite(s.M_cphi, s.step_index);
        detail::check_finite(s.M_ch, s.step_index);

        VecX<T> f = sigmoid<T>(s.M_f.template cast<T>());
        VecX<T> c = (s.M_cphi.template cast<T>().eval() + s.M_ch.template cast<T>().eval())
                        .array()
                        .tanh();
        s.h = f.cwiseProduct(s.h) + (VecX<T>::Ones(h) - f).cwiseProduct(c);
        n_m_vectors = 3;
        stats.activation_count += 2 * h;
        stats.mul_count += 2 * h; // f.*h, (1-f).*c
    }
    y = m.head.W_y * s.h + m.head.b_y;

    stats.skipped_phi_components += kInputSize - act_phi;
    stats.total_phi_components += kInputSize;
    stats.skipped_h_components += h - act_h;
    stats.total_h_components += h;
    stats.skipped_macs += (kInputSize - act_phi + h - act_h) * gates * h;
    stats.total_macs += (kInputSize + h) * gates * h;
    stats.mul_count += active_macs + 2 * h;
    stats.add_count += active_macs + (kInputSize + h) + h + h + 2 * h;
    stats.mem_count += active_macs + (kInputSize + h) + (act_phi + act_h) +
                       2 * n_m_vectors * h + 2 * h + 2 * h + 2;
    stats.steps += 1;

    s.step_index += 1;
    return cplx(static_cast<double>(y(0)), static_cast<double>(y(1)));
}

/// Streams the delta rule over a feature sequence from the canonical
/// initial state. The optional observer sees the state after every step
/// (used by oracle-style verification).
template <typename T>
std::pair<IqSignal, SparsityStats> run_delta_t(
    const DpdModelT<T>& m, const FeatureSeq& feats, const ThresholdConfig& th,
    const std::function<void(const DeltaStateT<T>&)>& observer = nullptr) {
    DeltaStateT<T> s = init_delta_state(m);
    SparsityStats stats;
    IqSignal out;
    out.samples.reserve(feats.size());
    VecX<T> phi(kInputSize);
    for (const auto& f : feats.frames) {
        phi = f.template cast<T>();
        out.samples.push_back(delta_step(m, phi, s, th, stats));
        if (observer) observer(s);
    }
    return {std::move(out), stats};
}

/// FP32 reference-arithmetic entry point.
inline std::pair<IqSignal, SparsityStats> run_delta(const DpdModel& m, const FeatureSeq& feats,
                                                    const ThresholdConfig& th) {
    return run_delta_t<float>(m, feats, th);
}

} // namespace deltadpd

#endif
