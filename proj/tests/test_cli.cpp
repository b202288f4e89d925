#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const char* kCli = DELTADPD_CLI_PATH;

int run(const std::string& args) {
    const std::string cmd = std::string(kCli) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

// Small end-to-end settings: short signal, tiny models, few epochs.
void write_small_config(const fs::path& path) {
    std::ofstream f(path);
    f << R"({
  "signal": {"n_symbols": 8},
  "behavioral": {
    "hidden_size": 6,
    "nmse_gate_db": 0.0,
    "train": {"epochs": 2, "frame_length": 64, "batch_size": 8}
  },
  "dpd": {
    "hidden_size": 4,
    "train": {"epochs": 2, "frame_length": 64, "batch_size": 8}
  },
  "sweep": [{"theta_phi": 0.0, "theta_h": 0.0}, {"theta_phi": 0.0, "theta_h": 0.1}],
  "metrics": {"psd": {"fft_size": 512}}
})";
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("gen: writes dataset and summary, exit 0") {
    TempDir td("deltadpd_cli_gen");
    write_small_config(td.path / "cfg.json");
    const int rc = run("--config " + (td.path / "cfg.json").string() + " --out " +
                       (td.path / "out").string() + " --seed 5 gen");
    CHECK(rc == 0);
    CHECK(fs::exists(td.path / "out" / "dataset.csv"));
    CHECK(fs::exists(td.path / "out" / "gen_summary.json"));
}

TEST_CASE("gen: identical seeds give byte-identical datasets") {
    TempDir td("deltadpd_cli_det");
    write_small_config(td.path / "cfg.json");
    const std::string base = "--config " + (td.path / "cfg.json").string() + " --seed 9 ";
    REQUIRE(run(base + "--out " + (td.path / "a").string() + " gen") == 0);
    REQUIRE(run(base + "--out " + (td.path / "b").string() + " gen") == 0);
    CHECK(slurp(td.path / "a" / "dataset.csv") == slurp(td.path / "b" / "dataset.csv"));

    // a different seed changes the payload
    REQUIRE(run("--config " + (td.path / "cfg.json").string() + " --seed 10 --out " +
                (td.path / "c").string() + " gen") == 0);
    CHECK(slurp(td.path / "a" / "dataset.csv") != slurp(td.path / "c" / "dataset.csv"));
}

TEST_CASE("full pipeline: train-pa, train-dpd, sweep, eval") {
    TempDir td("deltadpd_cli_pipe");
    write_small_config(td.path / "cfg.json");
    const std::string base = "--config " + (td.path / "cfg.json").string() + " --out " +
                             (td.path / "out").string() + " --seed 4 --deterministic ";
    REQUIRE(run(base + "gen") == 0);
    REQUIRE(run(base + "train-pa") == 0);
    CHECK(fs::exists(td.path / "out" / "pa_model.json"));
    REQUIRE(run(base + "train-dpd") == 0);
    CHECK(fs::exists(td.path / "out" / "dpd_model.json"));
    REQUIRE(run(base + "sweep") == 0);
    CHECK(fs::exists(td.path / "out" / "sweep.csv"));
    CHECK(fs::exists(td.path / "out" / "psd_point0.csv"));
    CHECK(fs::exists(td.path / "out" / "sweep_summary.json"));
    CHECK(run(base + "eval --theta-h 0.05") == 0);
    CHECK(fs::exists(td.path / "out" / "eval.csv"));

    // sweep.csv has a header plus one line per threshold point
    std::istringstream ss(slurp(td.path / "out" / "sweep.csv"));
    std::string line;
    int lines = 0;
    while (std::getline(ss, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 3);
}

TEST_CASE("exit codes: config, io, gate") {
    TempDir td("deltadpd_cli_codes");

    // unknown config key -> 2
    {
        std::ofstream f(td.path / "bad.json");
        f << R"({"bogus_key": 1})";
    }
    CHECK(run("--config " + (td.path / "bad.json").string() + " gen") == 2);

    // missing config file -> 3
    CHECK(run("--config " + (td.path / "missing.json").string() + " gen") == 3);

    // train-pa without a dataset -> 3
    write_small_config(td.path / "cfg.json");
    CHECK(run("--config " + (td.path / "cfg.json").string() + " --out " +
              (td.path / "empty").string() + " train-pa") == 3);

    // unreachable behavioral gate -> 5
    {
        std::ofstream f(td.path / "gate.json");
        f << R"({
  "signal": {"n_symbols": 8},
  "behavioral": {
    "hidden_size": 2,
    "nmse_gate_db": -90.0,
    "train": {"epochs": 1, "frame_length": 64, "batch_size": 8}
  }
})";
    }
    const std::string base = "--config " + (td.path / "gate.json").string() + " --out " +
                             (td.path / "gate_out").string() + " --seed 1 ";
    REQUIRE(run(base + "gen") == 0);
    CHECK(run(base + "train-pa") == 5);

    // missing subcommand / unknown flag are CLI parse errors
    CHECK(run("") != 0);
    CHECK(run("--frobnicate gen") != 0);
}
