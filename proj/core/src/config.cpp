#include "deltadpd/config.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace deltadpd {

namespace {

using json = nlohmann::ordered_json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in " + where);
}

json train_to_json(const TrainConfig& t) {
    json j{{"epochs", t.epochs},
           {"lr0", t.lr0},
           {"batch_size", t.batch_size},
           {"frame_length", t.frame_length},
           {"frame_stride", t.frame_stride},
           {"weight_decay", t.weight_decay},
           {"plateau_patience", t.plateau_patience},
           {"plateau_factor", t.plateau_factor},
           {"plateau_min_delta_db", t.plateau_min_delta_db},
           {"seed", t.seed},
           {"target_gain", t.target_gain},
           {"n_threads", t.n_threads}};
    if (t.delta_thresholds)
        j["delta_thresholds"] = {{"theta_phi", t.delta_thresholds->theta_phi},
                                 {"theta_h", t.delta_thresholds->theta_h}};
    return j;
}

TrainConfig train_from_json(const json& j, const std::string& where, TrainConfig t) {
    reject_unknown(j,
                   {"epochs", "lr0", "batch_size", "frame_length", "frame_stride", "weight_decay",
                    "plateau_patience", "plateau_factor", "plateau_min_delta_db", "seed",
                    "target_gain", "n_threads", "delta_thresholds"},
                   where);
    t.epochs = j.value("epochs", t.epochs);
    t.lr0 = j.value("lr0", t.lr0);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.frame_length = j.value("frame_length", t.frame_length);
    t.frame_stride = j.value("frame_stride", t.frame_stride);
    t.weight_decay = j.value("weight_decay", t.weight_decay);
    t.plateau_patience = j.value("plateau_patience", t.plateau_patience);
    t.plateau_factor = j.value("plateau_factor", t.plateau_factor);
    t.plateau_min_delta_db = j.value("plateau_min_delta_db", t.plateau_min_delta_db);
    t.seed = j.value("seed", t.seed);
    t.target_gain = j.value("target_gain", t.target_gain);
    t.n_threads = j.value("n_threads", t.n_threads);
    if (j.contains("delta_thresholds")) {
        const auto& d = j.at("delta_thresholds");
        reject_unknown(d, {"theta_phi", "theta_h"}, where + ".delta_thresholds");
        t.delta_thresholds = ThresholdConfig{d.value("theta_phi", 0.0), d.value("theta_h", 0.0)};
    }
    return t;
}

json to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["signal"] = {{"n_channels", c.signal.n_channels},
                   {"channel_bw_hz", c.signal.channel_bw_hz},
                   {"subcarrier_spacing_hz", c.signal.subcarrier_spacing_hz},
                   {"qam_order", c.signal.qam_order},
                   {"n_symbols", c.signal.n_symbols},
                   {"cp_fraction", c.signal.cp_fraction},
                   {"sample_rate_hz", c.signal.sample_rate_hz},
                   {"seed", c.signal.seed},
                   {"cfr_enabled", c.cfr_enabled},
                   {"cfr_papr_target_db", c.cfr_papr_target_db}};
    j["pa"] = {{"coeff_file", c.pa_coeff_file}};
    j["behavioral"] = {{"hidden_size", c.behavioral_hidden},
                       {"nmse_gate_db", c.behavioral_nmse_gate_db},
                       {"train", train_to_json(c.behavioral_train)}};
    j["dpd"] = {{"cell_kind", to_string(c.dpd_cell)},
                {"hidden_size", c.dpd_hidden},
                {"train", train_to_json(c.dpd_train)}};
    json sweep = json::array();
    for (const auto& th : c.sweep)
        sweep.push_back({{"theta_phi", th.theta_phi}, {"theta_h", th.theta_h}});
    j["sweep"] = sweep;
    j["metrics"] = {
        {"psd",
         {{"fft_size", c.psd.fft_size},
          {"window", c.psd.window == PsdWindow::Hann ? "hann" : "blackman"},
          {"overlap_fraction", c.psd.overlap_fraction}}},
        {"acpr",
         {{"main_bw_hz", c.acpr.main_bw_hz},
          {"adjacent_bw_hz", c.acpr.adjacent_bw_hz},
          {"adjacent_offset_hz", c.acpr.adjacent_offset_hz}}},
        {"energy", {{"e_mul", c.energy.e_mul}, {"e_add", c.energy.e_add}, {"e_mem", c.energy.e_mem}}}};
    return j;
}

RunConfig from_json(const json& j) {
    RunConfig c = default_run_config();
    reject_unknown(j, {"seed", "output_dir", "signal", "pa", "behavioral", "dpd", "sweep", "metrics"},
                   "config root");
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("signal")) {
        const auto& s = j.at("signal");
        reject_unknown(s,
                       {"n_channels", "channel_bw_hz", "subcarrier_spacing_hz", "qam_order",
                        "n_symbols", "cp_fraction", "sample_rate_hz", "seed", "cfr_enabled",
                        "cfr_papr_target_db"},
                       "signal");
        c.signal.n_channels = s.value("n_channels", c.signal.n_channels);
        c.signal.channel_bw_hz = s.value("channel_bw_hz", c.signal.channel_bw_hz);
        c.signal.subcarrier_spacing_hz =
            s.value("subcarrier_spacing_hz", c.signal.subcarrier_spacing_hz);
        c.signal.qam_order = s.value("qam_order", c.signal.qam_order);
        c.signal.n_symbols = s.value("n_symbols", c.signal.n_symbols);
        c.signal.cp_fraction = s.value("cp_fraction", c.signal.cp_fraction);
        c.signal.sample_rate_hz = s.value("sample_rate_hz", c.signal.sample_rate_hz);
        c.signal.seed = s.value("seed", c.signal.seed);
        c.cfr_enabled = s.value("cfr_enabled", c.cfr_enabled);
        c.cfr_papr_target_db = s.value("cfr_papr_target_db", c.cfr_papr_target_db);
    }
    if (j.contains("pa")) {
        reject_unknown(j.at("pa"), {"coeff_file"}, "pa");
        c.pa_coeff_file = j.at("pa").value("coeff_file", c.pa_coeff_file);
    }
    if (j.contains("behavioral")) {
        const auto& b = j.at("behavioral");
        reject_unknown(b, {"hidden_size", "nmse_gate_db", "train"}, "behavioral");
        c.behavioral_hidden = b.value("hidden_size", c.behavioral_hidden);
        c.behavioral_nmse_gate_db = b.value("nmse_gate_db", c.behavioral_nmse_gate_db);
        if (b.contains("train"))
            c.behavioral_train = train_from_json(b.at("train"), "behavioral.train", c.behavioral_train);
    }
    if (j.contains("dpd")) {
        const auto& d = j.at("dpd");
        reject_unknown(d, {"cell_kind", "hidden_size", "train"}, "dpd");
        const std::string kind = d.value("cell_kind", std::string(to_string(c.dpd_cell)));
        if (kind == "gru")
            c.dpd_cell = CellKind::Gru;
        else if (kind == "janet")
            c.dpd_cell = CellKind::Janet;
        else
            throw ConfigError("dpd.cell_kind must be 'gru' or 'janet', got '" + kind + "'");
        c.dpd_hidden = d.value("hidden_size", c.dpd_hidden);
        if (d.contains("train")) c.dpd_train = train_from_json(d.at("train"), "dpd.train", c.dpd_train);
    }
    if (j.contains("sweep")) {
        c.sweep.clear();
        for (const auto& p : j.at("sweep")) {
            reject_unknown(p, {"theta_phi", "theta_h"}, "sweep entry");
            c.sweep.push_back(ThresholdConfig{p.value("theta_phi", 0.0), p.value("theta_h", 0.0)});
        }
    }
    if (j.contains("metrics")) {
        const auto& m = j.at("metrics");
        reject_unknown(m, {"psd", "acpr", "energy"}, "metrics");
        if (m.contains("psd")) {
            const auto& p = m.at("psd");
            reject_unknown(p, {"fft_size", "window", "overlap_fraction"}, "metrics.psd");
            c.psd.fft_size = p.value("fft_size", c.psd.fft_size);
            const std::string w = p.value("window", std::string("hann"));
            if (w == "hann")
                c.psd.window = PsdWindow::Hann;
            else if (w == "blackman")
                c.psd.window = PsdWindow::Blackman;
            else
                throw ConfigError("metrics.psd.window must be 'hann' or 'blackman'");
            c.psd.overlap_fraction = p.value("overlap_fraction", c.psd.overlap_fraction);
        }
        if (m.contains("acpr")) {
            const auto& a = m.at("acpr");
            reject_unknown(a, {"main_bw_hz", "adjacent_bw_hz", "adjacent_offset_hz"}, "metrics.acpr");
            c.acpr.main_bw_hz = a.value("main_bw_hz", 0.0);
            c.acpr.adjacent_bw_hz = a.value("adjacent_bw_hz", 0.0);
            c.acpr.adjacent_offset_hz = a.value("adjacent_offset_hz", 0.0);
        }
        if (m.contains("energy")) {
            const auto& e = m.at("energy");
            reject_unknown(e, {"e_mul", "e_add", "e_mem"}, "metrics.energy");
            c.energy.e_mul = e.value("e_mul", c.energy.e_mul);
            c.energy.e_add = e.value("e_add", c.energy.e_add);
            c.energy.e_mem = e.value("e_mem", c.energy.e_mem);
        }
    }
    return c;
}

} // namespace

RunConfig default_run_config() {
    RunConfig c;
    // Desk-scale analogue of the 5x40-MHz grid: same channel count and
    // QAM order at rates a trained model can sweep in minutes.
    c.signal = OfdmConfig{};
    c.behavioral_hidden = 24;
    c.behavioral_train.epochs = 200;
    c.behavioral_train.frame_length = 64;
    c.behavioral_train.seed = 2;
    c.dpd_train.epochs = 200;
    c.dpd_train.frame_length = 64;
    c.dpd_train.seed = 3;
    c.sweep = {{0.0, 0.0}, {0.0, 0.008}, {0.0, 0.016}, {0.0, 0.05}, {0.0, 0.1}, {0.0, 0.4}};
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return from_json(j);
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << to_json(cfg).dump(2) << "\n";
}

std::string run_config_hash(const RunConfig& cfg) {
    const std::string s = to_json(cfg).dump();
    std::ostringstream os;
    os << std::hex << std::hash<std::string>{}(s);
    return os.str();
}

} // namespace deltadpd
