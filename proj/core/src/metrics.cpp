#include "deltadpd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "deltadpd/fft.hpp"

namespace deltadpd {

namespace {

double clamp_db(double ratio) {
    if (ratio <= 0.0) return kDbFloor;
    return std::max(kDbFloor, 10.0 * std::log10(ratio));
}

std::vector<double> make_window(PsdWindow kind, int n) {
    std::vector<double> w(static_cast<std::size_t>(n));
    const double pi = std::numbers::pi;
    for (int i = 0; i < n; ++i) {
        const double x = 2.0 * pi * i / (n - 1);
        if (kind == PsdWindow::Hann)
            w[static_cast<std::size_t>(i)] = 0.5 * (1.0 - std::cos(x));
        else
            w[static_cast<std::size_t>(i)] = 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2 * x);
    }
    return w;
}

} // namespace

double Spectrum::band_power(double f_lo, double f_hi) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < freq_hz.size(); ++k)
        if (freq_hz[k] >= f_lo && freq_hz[k] < f_hi) acc += power[k];
    return acc;
}

double Spectrum::total_power() const {
    double acc = 0.0;
    for (double p : power) acc += p;
    return acc;
}

double nmse_db(const IqSignal& ref, const IqSignal& est) {
    if (ref.size() != est.size() || ref.size() == 0)
        throw StructuralError("nmse_db: length mismatch or empty");
    double err = 0.0, sig = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        err += std::norm(ref.samples[i] - est.samples[i]);
        sig += std::norm(ref.samples[i]);
    }
    if (sig == 0.0) throw NumericError("nmse_db: all-zero reference");
    return clamp_db(err / sig);
}

Spectrum psd(const IqSignal& sig, const PsdConfig& cfg) {
    const int n = cfg.fft_size;
    if (n < 64 || (n & (n - 1)) != 0) throw ConfigError("psd: fft_size must be power of 2 >= 64");
    if (sig.size() < static_cast<std::size_t>(n))
        throw ConfigError("psd: signal shorter than fft_size");
    if (cfg.overlap_fraction < 0 || cfg.overlap_fraction >= 1)
        throw ConfigError("psd: overlap_fraction must be in [0,1)");

    const auto w = make_window(cfg.window, n);
    double u = 0.0;
    for (double v : w) u += v * v;

    const auto hop = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(n * (1.0 - cfg.overlap_fraction))));
    std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
    std::vector<cplx> seg(static_cast<std::size_t>(n));
    std::size_t n_segs = 0;
    for (std::size_t start = 0; start + static_cast<std::size_t>(n) <= sig.size(); start += hop) {
        for (int i = 0; i < n; ++i)
            seg[static_cast<std::size_t>(i)] =
                sig.samples[start + static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(i)];
        auto spec = fft(seg);
        for (int k = 0; k < n; ++k) acc[static_cast<std::size_t>(k)] += std::norm(spec[static_cast<std::size_t>(k)]);
        ++n_segs;
    }
    // Normalized so the bin sum equals time-domain mean power.
    const double scale = 1.0 / (static_cast<double>(n_segs) * u * n);

    Spectrum out;
    out.bin_width_hz = sig.sample_rate_hz / n;
    out.freq_hz.resize(static_cast<std::size_t>(n));
    out.power.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const int shifted = (k + n / 2) % n; // FFT bin feeding output slot k
        double f = static_cast<double>(shifted) / n * sig.sample_rate_hz;
        if (f >= sig.sample_rate_hz / 2) f -= sig.sample_rate_hz;
        out.freq_hz[static_cast<std::size_t>(k)] = f;
        out.power[static_cast<std::size_t>(k)] = acc[static_cast<std::size_t>(shifted)] * scale;
    }
    return out;
}

AcprResult acpr_dbc(const IqSignal& sig, const AcprSpec& spec, const PsdConfig& psd_cfg) {
    if (spec.main_bw_hz <= 0 || spec.adjacent_bw_hz <= 0 || spec.adjacent_offset_hz <= 0)
        throw ConfigError("acpr: bandwidths and offset must be positive");
    if (spec.adjacent_offset_hz + spec.adjacent_bw_hz / 2 > sig.sample_rate_hz / 2)
        throw ConfigError("acpr: adjacent channel exceeds Nyquist band");

    const auto spectrum = psd(sig, psd_cfg);
    const double p_main = spectrum.band_power(-spec.main_bw_hz / 2, spec.main_bw_hz / 2);
    if (p_main <= 0) throw NumericError("acpr: zero main-channel power");
    const double p_left = spectrum.band_power(-spec.adjacent_offset_hz - spec.adjacent_bw_hz / 2,
                                              -spec.adjacent_offset_hz + spec.adjacent_bw_hz / 2);
    const double p_right = spectrum.band_power(spec.adjacent_offset_hz - spec.adjacent_bw_hz / 2,
                                               spec.adjacent_offset_hz + spec.adjacent_bw_hz / 2);
    return {clamp_db(p_left / p_main), clamp_db(p_right / p_main)};
}

double evm_dbc(const IqSignal& ref, const IqSignal& meas) {
    if (ref.size() != meas.size() || ref.size() == 0)
        throw StructuralError("evm_dbc: length mismatch or empty");
    cplx num(0.0, 0.0);
    double den = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        num += meas.samples[i] * std::conj(ref.samples[i]);
        den += std::norm(ref.samples[i]);
    }
    if (den == 0.0) throw NumericError("evm_dbc: all-zero reference");
    const cplx g = num / den;
    double err = 0.0, sig = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        err += std::norm(meas.samples[i] - g * ref.samples[i]);
        sig += std::norm(g * ref.samples[i]);
    }
    if (sig == 0.0) throw NumericError("evm_dbc: zero scaled-reference power");
    return clamp_db(err / sig);
}

double papr_db(const IqSignal& sig) {
    const double mp = sig.mean_power();
    if (mp == 0.0) throw NumericError("papr_db: zero signal");
    return 10.0 * std::log10(sig.peak_power() / mp);
}

AmAmSeries amam_ampm(const IqSignal& input, const IqSignal& output, int n_bins, double phase_eps) {
    if (input.size() != output.size()) throw StructuralError("amam_ampm: length mismatch");
    AmAmSeries s;
    s.scatter.reserve(input.size());
    double max_in = 0.0;
    for (std::size_t i = 0; i < input.size(); ++i) {
        AmAmPoint p;
        p.abs_in = std::abs(input.samples[i]);
        p.abs_out = std::abs(output.samples[i]);
        if (p.abs_in > phase_eps) {
            p.phase_deg = std::arg(output.samples[i] / input.samples[i]) * 180.0 / std::numbers::pi;
            p.phase_valid = true;
        }
        max_in = std::max(max_in, p.abs_in);
        s.scatter.push_back(p);
    }
    if (n_bins > 0 && max_in > 0) {
        std::vector<std::vector<double>> bin_out(static_cast<std::size_t>(n_bins));
        std::vector<std::vector<double>> bin_ph(static_cast<std::size_t>(n_bins));
        for (const auto& p : s.scatter) {
            auto b = static_cast<std::size_t>(
                std::min<int>(n_bins - 1, static_cast<int>(p.abs_in / max_in * n_bins)));
            bin_out[b].push_back(p.abs_out);
            if (p.phase_valid) bin_ph[b].push_back(p.phase_deg);
        }
        auto median = [](std::vector<double>& v) {
            std::sort(v.begin(), v.end());
            return v[v.size() / 2];
        };
        for (int b = 0; b < n_bins; ++b) {
            auto& vo = bin_out[static_cast<std::size_t>(b)];
            if (vo.empty()) continue;
            s.bin_center.push_back((b + 0.5) * max_in / n_bins);
            s.bin_abs_out.push_back(median(vo));
            auto& vp = bin_ph[static_cast<std::size_t>(b)];
            s.bin_phase_deg.push_back(vp.empty() ? 0.0 : median(vp));
        }
    }
    return s;
}

CostReport theoretical_costs(int n, double gamma) {
    if (n < 1) throw StructuralError("theoretical_costs: n must be >= 1");
    if (gamma < 0 || gamma > 1) throw StructuralError("theoretical_costs: gamma must be in [0,1]");
    CostReport r;
    r.n = n;
    r.gamma = gamma;
    const double nn = static_cast<double>(n);
    r.c_comp_dense = nn * nn;
    r.c_comp_sparse = (1.0 - gamma) * nn * nn + 2.0 * nn;
    r.c_mem_dense = nn * nn + nn;
    r.c_mem_sparse = (1.0 - gamma) * nn * nn + 4.0 * nn;
    r.speedup = nn / ((1.0 - gamma) * nn + 2.0);
    r.mem_access_reduction = (nn + 1.0) / ((1.0 - gamma) * nn + 4.0);
    return r;
}

double active_params(const DpdModelT<double>& model, double gamma) {
    if (gamma < 0 || gamma > 1) throw StructuralError("active_params: gamma must be in [0,1]");
    return model.cell_param_count() * (1.0 - gamma) + model.head.param_count();
}

double active_params(const DpdModel& model, double gamma) {
    if (gamma < 0 || gamma > 1) throw StructuralError("active_params: gamma must be in [0,1]");
    return model.cell_param_count() * (1.0 - gamma) + model.head.param_count();
}

double energy_per_inference(std::int64_t mul, std::int64_t add, std::int64_t mem,
                            const EnergyModel& em) {
    if (mul < 0 || add < 0 || mem < 0)
        throw StructuralError("energy_per_inference: counts must be >= 0");
    return mul * em.e_mul + add * em.e_add + mem * em.e_mem;
}

} // namespace deltadpd
