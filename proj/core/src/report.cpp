#include "deltadpd/report.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

namespace deltadpd {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    return f;
}

} // namespace

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    auto f = open_out(path);
    f << "theta_phi,theta_h,gamma,active_params,nmse_db,evm_dbc,acpr_left_dbc,acpr_right_dbc,"
         "mul,add,mem,energy_j,energy_reduction_factor\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf),
                      "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%lld,%lld,%lld,%.9g,%.9g\n",
                      r.theta_phi, r.theta_h, r.gamma, r.active_params, r.nmse_db, r.evm_dbc,
                      r.acpr_left_dbc, r.acpr_right_dbc, static_cast<long long>(r.mul),
                      static_cast<long long>(r.add), static_cast<long long>(r.mem), r.energy_j,
                      r.energy_reduction_factor);
        f << buf;
    }
    if (!f) throw IoError("write failed: " + path);
}

void write_spectrum_csv(const std::string& path, const Spectrum& spec) {
    auto f = open_out(path);
    f << "freq_hz,psd_db\n";
    char buf[128];
    for (std::size_t k = 0; k < spec.freq_hz.size(); ++k) {
        const double db = spec.power[k] > 0 ? 10.0 * std::log10(spec.power[k]) : kDbFloor;
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", spec.freq_hz[k], db);
        f << buf;
    }
    if (!f) throw IoError("write failed: " + path);
}

void write_amam_csv(const std::string& path, const AmAmSeries& series) {
    auto f = open_out(path);
    f << "abs_in,abs_out,phase_deg\n";
    char buf[128];
    for (const auto& p : series.scatter) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\n", p.abs_in, p.abs_out,
                      p.phase_valid ? p.phase_deg : 0.0);
        f << buf;
    }
    if (!f) throw IoError("write failed: " + path);
}

void write_constellation_csv(const std::string& path, const IqSignal& sig,
                             std::size_t max_points) {
    auto f = open_out(path);
    f << "i,q\n";
    const std::size_t stride = sig.size() > max_points ? sig.size() / max_points : 1;
    char buf[96];
    for (std::size_t k = 0; k < sig.size(); k += stride) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", sig.samples[k].real(),
                      sig.samples[k].imag());
        f << buf;
    }
    if (!f) throw IoError("write failed: " + path);
}

void write_train_report_csv(const std::string& path, const TrainReport& report) {
    auto f = open_out(path);
    f << "epoch,train_loss,val_nmse_db,lr\n";
    char buf[160];
    for (std::size_t e = 0; e < report.train_loss.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g\n", e, report.train_loss[e],
                      report.val_nmse_db[e], report.lr[e]);
        f << buf;
    }
    if (!f) throw IoError("write failed: " + path);
}

void write_run_summary(const std::string& path, const RunConfig& cfg,
                       const std::vector<std::pair<std::string, std::string>>& results) {
    nlohmann::ordered_json j;
    j["code_version"] = "deltadpd 0.1.0";
    j["config_hash"] = run_config_hash(cfg);
    for (const auto& [k, v] : results) j["results"][k] = v;
    auto f = open_out(path);
    f << j.dump(2) << "\n";
}

} // namespace deltadpd
