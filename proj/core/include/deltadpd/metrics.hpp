#ifndef DELTADPD_METRICS_HPP
#define DELTADPD_METRICS_HPP

#include <cstdint>
#include <vector>

#include "deltadpd/iq.hpp"
#include "deltadpd/rnn.hpp"

namespace deltadpd {

inline constexpr double kDbFloor = -200.0;

enum class PsdWindow { Hann, Blackman };

struct PsdConfig {
    int fft_size = 4096;
    PsdWindow window = PsdWindow::Hann;
    double overlap_fraction = 0.5;
};

/// Welch spectrum estimate. `power` is linear, normalized so that the sum
/// over all bins equals the time-domain mean power (window-compensated).
struct Spectrum {
    std::vector<double> freq_hz; // shifted, ascending, [-fs/2, fs/2)
    std::vector<double> power;   // linear, per bin
    double bin_width_hz = 0.0;

    double band_power(double f_lo, double f_hi) const;
    double total_power() const;
};

struct AcprSpec {
    double main_bw_hz = 0.0;
    double adjacent_bw_hz = 0.0;
    double adjacent_offset_hz = 0.0;

    static AcprSpec contiguous(double bw_hz) { return {bw_hz, bw_hz, bw_hz}; }
};

struct AcprResult {
    double left_dbc = 0.0;
    double right_dbc = 0.0;
    double worst_dbc() const { return left_dbc > right_dbc ? left_dbc : right_dbc; }
};

/// Per-operation energies in joules. Defaults are frozen from a least-
/// squares fit of published 7-nm per-inference figures, with the FP32 add
/// energy anchored at 0.38 pJ (the per-op split is otherwise rank-
/// deficient because skipped columns always save 1 MUL + 1 ADD + 1 MEM).
struct EnergyModel {
    double e_mul = 3.7164377295448043e-12;
    double e_add = 3.8e-13;
    double e_mem = 4.8798210009819540e-12;
};

struct CostReport {
    int n = 0;
    double gamma = 0.0;
    double c_comp_dense = 0.0;
    double c_comp_sparse = 0.0;
    double c_mem_dense = 0.0;
    double c_mem_sparse = 0.0;
    double speedup = 0.0;
    double mem_access_reduction = 0.0;
    double active_params = 0.0;
    std::int64_t mul = 0, add = 0, mem = 0;
    double energy_per_inference_j = 0.0;
};

struct AmAmPoint {
    double abs_in = 0.0;
    double abs_out = 0.0;
    double phase_deg = 0.0; // valid only when phase_valid
    bool phase_valid = false;
};

struct AmAmSeries {
    std::vector<AmAmPoint> scatter;
    // median-binned curve over |x|
    std::vector<double> bin_center, bin_abs_out, bin_phase_deg;
};

double nmse_db(const IqSignal& ref, const IqSignal& est);
Spectrum psd(const IqSignal& sig, const PsdConfig& cfg);
AcprResult acpr_dbc(const IqSignal& sig, const AcprSpec& spec, const PsdConfig& psd_cfg);
double evm_dbc(const IqSignal& ref, const IqSignal& meas);
double papr_db(const IqSignal& sig);
AmAmSeries amam_ampm(const IqSignal& input, const IqSignal& output, int n_bins = 64,
                     double phase_eps = 1e-6);

/// Dense/sparse cost formulas (formula fields of CostReport only):
///   c_comp_dense = n^2, c_comp_sparse = (1-G)n^2 + 2n,
///   c_mem_dense = n^2 + n, c_mem_sparse = (1-G)n^2 + 4n,
///   speedup = n / ((1-G)n + 2), reduction = (n+1) / ((1-G)n + 4).
CostReport theoretical_costs(int n, double gamma);

/// Density interpretation: rnn_params * (1 - gamma) + fc_params.
double active_params(const DpdModelT<double>& model, double gamma);
double active_params(const DpdModel& model, double gamma);

double energy_per_inference(std::int64_t mul, std::int64_t add, std::int64_t mem,
                            const EnergyModel& em);

} // namespace deltadpd

#endif
