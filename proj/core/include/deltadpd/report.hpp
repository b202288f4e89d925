#ifndef DELTADPD_REPORT_HPP
#define DELTADPD_REPORT_HPP

#include <string>
#include <vector>

#include "deltadpd/config.hpp"
#include "deltadpd/delta.hpp"
#include "deltadpd/metrics.hpp"
#include "deltadpd/train.hpp"

namespace deltadpd {

/// One evaluated sweep point; schema matches the sweep CSV column order.
struct SweepRow {
    double theta_phi = 0.0;
    double theta_h = 0.0;
    double gamma = 0.0;
    double active_params = 0.0;
    double nmse_db = 0.0;
    double evm_dbc = 0.0;
    double acpr_left_dbc = 0.0;
    double acpr_right_dbc = 0.0;
    std::int64_t mul = 0, add = 0, mem = 0;
    double energy_j = 0.0;
    double energy_reduction_factor = 1.0;
};

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);
void write_spectrum_csv(const std::string& path, const Spectrum& spec);
void write_amam_csv(const std::string& path, const AmAmSeries& series);
void write_constellation_csv(const std::string& path, const IqSignal& sig,
                             std::size_t max_points = 20000);
void write_train_report_csv(const std::string& path, const TrainReport& report);

/// One structured-text summary per run: config hash, code version, and
/// free-form key/value results.
void write_run_summary(const std::string& path, const RunConfig& cfg,
                       const std::vector<std::pair<std::string, std::string>>& results);

} // namespace deltadpd

#endif
