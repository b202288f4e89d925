#ifndef DELTADPD_CONFIG_HPP
#define DELTADPD_CONFIG_HPP

#include <string>
#include <vector>

#include "deltadpd/metrics.hpp"
#include "deltadpd/pa.hpp"
#include "deltadpd/signal.hpp"
#include "deltadpd/train.hpp"

namespace deltadpd {

/// Full pipeline configuration, parsed from a JSON config file. Unknown
/// keys anywhere in the document are hard errors.
struct RunConfig {
    OfdmConfig signal;
    bool cfr_enabled = true;
    double cfr_papr_target_db = 10.0;

    std::string pa_coeff_file; // empty = default_test_pa()

    int behavioral_hidden = 16;
    TrainConfig behavioral_train;
    double behavioral_nmse_gate_db = -35.0;

    CellKind dpd_cell = CellKind::Gru;
    int dpd_hidden = 15;
    TrainConfig dpd_train;

    std::vector<ThresholdConfig> sweep;

    PsdConfig psd;
    AcprSpec acpr;        // zero bandwidths = derive from signal config
    EnergyModel energy;

    std::string output_dir = "out";
    std::uint64_t seed = 1;

    AcprSpec effective_acpr() const {
        if (acpr.main_bw_hz > 0) return acpr;
        return AcprSpec::contiguous(signal.occupied_bw_hz());
    }
};

RunConfig default_run_config();
RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& cfg);

/// Stable hash of the serialized config, recorded in run summaries.
std::string run_config_hash(const RunConfig& cfg);

} // namespace deltadpd

#endif
