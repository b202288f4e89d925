#include "deltadpd/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "deltadpd/fft.hpp"

namespace deltadpd {

namespace {

bool is_power_of_four(int v) {
    if (v < 4) return false;
    while (v % 4 == 0) v /= 4;
    return v == 1;
}

// Square-QAM constellation point for symbol index s in [0, order),
// normalized to unit average power.
cplx qam_point(int s, int order) {
    const int side = static_cast<int>(std::lround(std::sqrt(double(order))));
    const double norm = std::sqrt(2.0 * (side * side - 1) / 3.0);
    const int ii = s % side;
    const int qq = s / side;
    return cplx((2 * ii - side + 1) / norm, (2 * qq - side + 1) / norm);
}

// Spectral mask limiting a signal to [-bw/2, +bw/2] around DC via a
// whole-signal FFT brickwall.
std::vector<cplx> band_limit(const std::vector<cplx>& x, double bw_hz, double fs) {
    const std::size_t n = x.size();
    auto spec = fft(x);
    for (std::size_t k = 0; k < n; ++k) {
        double f = static_cast<double>(k) / n * fs;
        if (f >= fs / 2) f -= fs;
        if (std::abs(f) > bw_hz / 2) spec[k] = 0.0;
    }
    return ifft(spec);
}

} // namespace

void OfdmConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("OfdmConfig: " + m); };
    if (n_channels < 1) fail("n_channels must be >= 1");
    if (channel_bw_hz <= 0) fail("channel_bw_hz must be > 0");
    if (subcarrier_spacing_hz <= 0) fail("subcarrier_spacing_hz must be > 0");
    if (!is_power_of_four(qam_order) || qam_order > 256)
        fail("qam_order must be one of {4,16,64,256}");
    if (n_symbols < 1) fail("n_symbols must be >= 1");
    if (cp_fraction < 0 || cp_fraction >= 1) fail("cp_fraction must be in [0,1)");
    if (sample_rate_hz <= 0) fail("sample_rate_hz must be > 0");
    if (n_channels * channel_bw_hz > sample_rate_hz * 0.8)
        fail("occupied bandwidth " + std::to_string(occupied_bw_hz()) +
             " Hz exceeds 0.8 * sample_rate " + std::to_string(sample_rate_hz * 0.8) + " Hz");
}

IqSignal generate_ofdm(const OfdmConfig& cfg) {
    cfg.validate();

    const int fft_size = static_cast<int>(std::lround(cfg.sample_rate_hz / cfg.subcarrier_spacing_hz));
    if (fft_size < 8)
        throw ConfigError("OfdmConfig: sample_rate / subcarrier_spacing gives FFT size < 8");
    const double scs_eff = cfg.sample_rate_hz / fft_size;
    const int cp_len = static_cast<int>(std::lround(cfg.cp_fraction * fft_size));

    // Odd number of subcarriers per channel, symmetric around the channel center.
    int n_sc = static_cast<int>(std::floor(cfg.channel_bw_hz / scs_eff));
    if (n_sc % 2 == 0) n_sc -= 1;
    if (n_sc < 1) throw ConfigError("OfdmConfig: channel narrower than one subcarrier");

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> sym_dist(0, cfg.qam_order - 1);

    std::vector<cplx> out;
    out.reserve(static_cast<std::size_t>(cfg.n_symbols) * (fft_size + cp_len));

    std::vector<cplx> bins(fft_size);
    for (int sym = 0; sym < cfg.n_symbols; ++sym) {
        std::fill(bins.begin(), bins.end(), cplx(0.0, 0.0));
        for (int ch = 0; ch < cfg.n_channels; ++ch) {
            const double center_hz = (ch - (cfg.n_channels - 1) / 2.0) * cfg.channel_bw_hz;
            const int center_bin = static_cast<int>(std::lround(center_hz / scs_eff));
            for (int k = -(n_sc - 1) / 2; k <= (n_sc - 1) / 2; ++k) {
                int bin = center_bin + k;
                int idx = bin >= 0 ? bin : fft_size + bin;
                bins[static_cast<std::size_t>(idx)] = qam_point(sym_dist(rng), cfg.qam_order);
            }
        }
        auto td = ifft(bins);
        // cyclic prefix
        for (int i = fft_size - cp_len; i < fft_size; ++i)
            out.push_back(td[static_cast<std::size_t>(i)]);
        out.insert(out.end(), td.begin(), td.end());
    }

    // Rectangular OFDM symbols leak sinc sidelobes; confine to the occupied band.
    out = band_limit(out, cfg.occupied_bw_hz(), cfg.sample_rate_hz);

    IqSignal sig{std::move(out), cfg.sample_rate_hz, false};
    sig.check_finite("generate_ofdm");
    return normalize_unit(std::move(sig));
}

CfrResult apply_cfr(const IqSignal& sig, double papr_target_db, int max_iters) {
    if (papr_target_db <= 0)
        throw ConfigError("apply_cfr: papr_target_db must be > 0");

    auto papr_db = [](const IqSignal& s) {
        double mp = s.mean_power();
        return mp > 0 ? 10.0 * std::log10(s.peak_power() / mp) : 0.0;
    };

    CfrResult res{sig, true, 0};
    if (papr_db(sig) <= papr_target_db) return res;

    // Occupied-bin mask from the unclipped input; reapplied after each clip.
    const std::size_t n = sig.samples.size();
    auto spec0 = fft(sig.samples);
    double max_bin = 0.0;
    for (const auto& b : spec0) max_bin = std::max(max_bin, std::norm(b));
    std::vector<char> keep(n);
    for (std::size_t k = 0; k < n; ++k)
        keep[k] = std::norm(spec0[k]) >= max_bin * 1e-8 ? 1 : 0;

    IqSignal cur = sig;
    for (int it = 0; it < max_iters; ++it) {
        res.iterations = it + 1;
        const double amp = std::sqrt(cur.mean_power()) * std::pow(10.0, papr_target_db / 20.0);
        for (auto& s : cur.samples) {
            const double m = std::abs(s);
            if (m > amp) s *= amp / m;
        }
        auto spec = fft(cur.samples);
        for (std::size_t k = 0; k < n; ++k)
            if (!keep[k]) spec[k] = 0.0;
        cur.samples = ifft(spec);
        if (papr_db(cur) <= papr_target_db + 0.3) break;
    }
    res.target_met = papr_db(cur) <= papr_target_db + 0.3;
    res.signal = std::move(cur);
    return res;
}

FeatureSeq extract_features(const IqSignal& sig) {
    FeatureSeq fs;
    fs.frames.reserve(sig.samples.size());
    for (const auto& s : sig.samples) {
        const double i = s.real(), q = s.imag();
        const double m = std::sqrt(i * i + q * q);
        Vec6 f;
        if (m > 0.0)
            f << i, q, m, m * m * m, q / m, i / m;
        else
            f << 0, 0, 0, 0, 0, 0;
        fs.frames.push_back(f);
    }
    return fs;
}

DatasetSplits split_dataset(const Dataset& ds, std::size_t min_len) {
    if (ds.input.size() != ds.target.size())
        throw ConfigError("split_dataset: input/target length mismatch");
    const double fsum = ds.split[0] + ds.split[1] + ds.split[2];
    if (std::abs(fsum - 1.0) > 1e-9)
        throw ConfigError("split_dataset: fractions must sum to 1");

    const auto n = static_cast<double>(ds.input.size());
    // Cumulative-floor boundaries keep the split exhaustive and deterministic.
    const auto b1 = static_cast<std::size_t>(std::floor(n * ds.split[0] + 1e-9));
    const auto b2 = static_cast<std::size_t>(std::floor(n * (ds.split[0] + ds.split[1]) + 1e-9));
    const auto b3 = ds.input.size();

    const std::size_t lens[3] = {b1, b2 - b1, b3 - b2};
    for (auto len : lens)
        if (len < min_len)
            throw ConfigError("split_dataset: segment shorter than " + std::to_string(min_len) +
                              " samples");

    auto slice = [&](std::size_t a, std::size_t b) {
        Dataset d;
        d.input.sample_rate_hz = ds.input.sample_rate_hz;
        d.target.sample_rate_hz = ds.target.sample_rate_hz;
        d.input.samples.assign(ds.input.samples.begin() + a, ds.input.samples.begin() + b);
        d.target.samples.assign(ds.target.samples.begin() + a, ds.target.samples.begin() + b);
        d.split = {1.0, 0.0, 0.0};
        return d;
    };
    return DatasetSplits{slice(0, b1), slice(b1, b2), slice(b2, b3)};
}

void write_dataset_csv(const std::string& path, const Dataset& ds) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "I_in,Q_in,I_out,Q_out\n";
    char buf[160];
    for (std::size_t i = 0; i < ds.input.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g\n",
                      ds.input.samples[i].real(), ds.input.samples[i].imag(),
                      ds.target.samples[i].real(), ds.target.samples[i].imag());
        f << buf;
    }
    if (!f) throw IoError("write failed: " + path);

    nlohmann::json meta{{"sample_rate_hz", ds.input.sample_rate_hz},
                        {"input_unit_normalized", ds.input.unit_normalized},
                        {"split", {ds.split[0], ds.split[1], ds.split[2]}}};
    std::ofstream mf(path + ".meta.json");
    if (!mf) throw IoError("cannot open for writing: " + path + ".meta.json");
    mf << meta.dump(2) << "\n";
}

Dataset read_dataset_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("I_in", 0) != 0)
        throw IoError("bad dataset header in " + path);
    Dataset ds;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        double a, b, c, d;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &a, &b, &c, &d) != 4)
            throw IoError("bad dataset row in " + path + ": " + line);
        ds.input.samples.emplace_back(a, b);
        ds.target.samples.emplace_back(c, d);
    }

    std::ifstream mf(path + ".meta.json");
    if (mf) {
        auto meta = nlohmann::json::parse(mf);
        ds.input.sample_rate_hz = meta.value("sample_rate_hz", 1.0);
        ds.target.sample_rate_hz = ds.input.sample_rate_hz;
        ds.input.unit_normalized = meta.value("input_unit_normalized", false);
        if (meta.contains("split")) {
            for (int i = 0; i < 3; ++i) ds.split[static_cast<std::size_t>(i)] = meta["split"][i];
        }
    }
    return ds;
}

} // namespace deltadpd
