#ifndef DELTADPD_SIGNAL_HPP
#define DELTADPD_SIGNAL_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "deltadpd/iq.hpp"

namespace deltadpd {

using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Multi-channel OFDM test-signal configuration.
struct OfdmConfig {
    int n_channels = 5;
    double channel_bw_hz = 1.2e6;
    double subcarrier_spacing_hz = 30e3;
    int qam_order = 256;
    int n_symbols = 60;
    double cp_fraction = 0.07;
    // 3.84x oversampling: leaves room for full-width adjacent ACPR
    // channels on both sides of the 6-MHz occupied band
    double sample_rate_hz = 23.04e6;
    std::uint64_t seed = 1;

    double occupied_bw_hz() const { return n_channels * channel_bw_hz; }
    void validate() const; // throws ConfigError naming the violated bound
};

/// One 6-element RNN input vector per time step:
/// [I, Q, |x|, |x|^3, sin(theta), cos(theta)].
struct FeatureSeq {
    std::vector<Vec6> frames;
    std::size_t size() const { return frames.size(); }
};

struct Dataset {
    IqSignal input;
    IqSignal target;
    std::array<double, 3> split{0.6, 0.2, 0.2};
};

struct DatasetSplits {
    Dataset train;
    Dataset val;
    Dataset test;
};

struct CfrResult {
    IqSignal signal;
    bool target_met = true;
    int iterations = 0;
};

/// Seeded, deterministic multi-channel OFDM baseband generator.
/// Channels are QAM-loaded independently, placed symmetrically around DC,
/// band-limited to the occupied bandwidth, then unit-normalized.
IqSignal generate_ofdm(const OfdmConfig& cfg);

/// Iterative clip-and-filter crest-factor reduction. The low-pass filter
/// is a spectral mask derived from the input's own occupied bins, so no
/// bandwidth metadata is needed. Best-effort after max_iters; target_met
/// reports whether the PAPR target (+0.3 dB slack) was reached.
CfrResult apply_cfr(const IqSignal& sig, double papr_target_db, int max_iters = 8);

/// Per-sample feature extraction. Zero-magnitude convention:
/// |x| == 0 yields sin = cos = 0.
FeatureSeq extract_features(const IqSignal& sig);

/// Contiguous chronological split by cumulative-floor boundaries.
/// Every segment must end up with at least min_len samples.
DatasetSplits split_dataset(const Dataset& ds, std::size_t min_len = 1);

/// Dataset CSV ("I_in,Q_in,I_out,Q_out") plus a JSON metadata sidecar
/// at <path>.meta.json holding sample rate and normalization scale.
void write_dataset_csv(const std::string& path, const Dataset& ds);
Dataset read_dataset_csv(const std::string& path);

} // namespace deltadpd

#endif
