#include <fstream>

#include <nlohmann/json.hpp>

#include "deltadpd/rnn.hpp"

namespace deltadpd {

namespace {

using json = nlohmann::json;

json to_json(const Eigen::Ref<const MatX<double>>& m) {
    // row-major flat array
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    return json(flat);
}

MatX<double> mat_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                           const std::string& name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows * cols)
        throw IoError("weight file: bad size for " + name);
    MatX<double> m(rows, cols);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[i++].get<double>();
    return m;
}

} // namespace

void save_model(const std::string& path, const DpdModelT<double>& m) {
    json j;
    j["format_version"] = 1;
    j["cell_kind"] = to_string(m.cell_kind);
    j["hidden_size"] = m.hidden_size();
    j["input_size"] = kInputSize;
    json arr;
    if (m.cell_kind == CellKind::Gru) {
        arr["W_ir"] = to_json(m.gru.W_ir); arr["W_iz"] = to_json(m.gru.W_iz);
        arr["W_in"] = to_json(m.gru.W_in); arr["W_hr"] = to_json(m.gru.W_hr);
        arr["W_hz"] = to_json(m.gru.W_hz); arr["W_hn"] = to_json(m.gru.W_hn);
        arr["b_ir"] = to_json(m.gru.b_ir); arr["b_iz"] = to_json(m.gru.b_iz);
        arr["b_in"] = to_json(m.gru.b_in); arr["b_hr"] = to_json(m.gru.b_hr);
        arr["b_hz"] = to_json(m.gru.b_hz); arr["b_hn"] = to_json(m.gru.b_hn);
    } else {
        arr["W_if"] = to_json(m.janet.W_if); arr["W_ic"] = to_json(m.janet.W_ic);
        arr["W_hf"] = to_json(m.janet.W_hf); arr["W_hc"] = to_json(m.janet.W_hc);
        arr["b_if"] = to_json(m.janet.b_if); arr["b_ic"] = to_json(m.janet.b_ic);
        arr["b_hf"] = to_json(m.janet.b_hf); arr["b_hc"] = to_json(m.janet.b_hc);
    }
    arr["W_y"] = to_json(m.head.W_y);
    arr["b_y"] = to_json(m.head.b_y);
    j["arrays"] = std::move(arr);

    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << j.dump(1) << "\n";
    if (!f) throw IoError("write failed: " + path);
}

DpdModelT<double> load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw IoError("weight file parse error in " + path + ": " + e.what());
    }
    if (j.value("format_version", 0) != 1)
        throw IoError("weight file: unsupported format_version in " + path);
    const int h = j.at("hidden_size").get<int>();
    const std::string kind = j.at("cell_kind").get<std::string>();
    const auto& arr = j.at("arrays");

    DpdModelT<double> m;
    if (kind == "gru") {
        m.cell_kind = CellKind::Gru;
        m.gru.hidden_size = h;
        m.gru.W_ir = mat_from_json(arr.at("W_ir"), h, kInputSize, "W_ir");
        m.gru.W_iz = mat_from_json(arr.at("W_iz"), h, kInputSize, "W_iz");
        m.gru.W_in = mat_from_json(arr.at("W_in"), h, kInputSize, "W_in");
        m.gru.W_hr = mat_from_json(arr.at("W_hr"), h, h, "W_hr");
        m.gru.W_hz = mat_from_json(arr.at("W_hz"), h, h, "W_hz");
        m.gru.W_hn = mat_from_json(arr.at("W_hn"), h, h, "W_hn");
        m.gru.b_ir = mat_from_json(arr.at("b_ir"), h, 1, "b_ir");
        m.gru.b_iz = mat_from_json(arr.at("b_iz"), h, 1, "b_iz");
        m.gru.b_in = mat_from_json(arr.at("b_in"), h, 1, "b_in");
        m.gru.b_hr = mat_from_json(arr.at("b_hr"), h, 1, "b_hr");
        m.gru.b_hz = mat_from_json(arr.at("b_hz"), h, 1, "b_hz");
        m.gru.b_hn = mat_from_json(arr.at("b_hn"), h, 1, "b_hn");
    } else if (kind == "janet") {
        m.cell_kind = CellKind::Janet;
        m.janet.hidden_size = h;
        m.janet.W_if = mat_from_json(arr.at("W_if"), h, kInputSize, "W_if");
        m.janet.W_ic = mat_from_json(arr.at("W_ic"), h, kInputSize, "W_ic");
        m.janet.W_hf = mat_from_json(arr.at("W_hf"), h, h, "W_hf");
        m.janet.W_hc = mat_from_json(arr.at("W_hc"), h, h, "W_hc");
        m.janet.b_if = mat_from_json(arr.at("b_if"), h, 1, "b_if");
        m.janet.b_ic = mat_from_json(arr.at("b_ic"), h, 1, "b_ic");
        m.janet.b_hf = mat_from_json(arr.at("b_hf"), h, 1, "b_hf");
        m.janet.b_hc = mat_from_json(arr.at("b_hc"), h, 1, "b_hc");
    } else {
        throw IoError("weight file: unknown cell_kind '" + kind + "' in " + path);
    }
    m.head.W_y = mat_from_json(arr.at("W_y"), 2, h, "W_y");
    m.head.b_y = mat_from_json(arr.at("b_y"), 2, 1, "b_y");
    return m;
}

} // namespace deltadpd
