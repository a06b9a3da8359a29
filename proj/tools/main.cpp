// sgest command line front end: run / sweep / validate / report.
//
// Exit codes: 0 ok, 1 config error, 2 estimator divergence, 3 I/O error.

#include "sgest/csv.hpp"
#include "sgest/errors.hpp"
#include "sgest/pipeline.hpp"
#include "sgest/scenario.hpp"
#include "sgest/version.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitIo = 3;

sgest::ScenarioConfig load_with_overrides(const std::string& path, bool has_seed,
                                          std::uint64_t seed, const std::string& out_dir) {
    sgest::ScenarioConfig cfg = sgest::load_scenario(path);
    if (has_seed) cfg = sgest::with_master_seed(cfg, seed);
    if (!out_dir.empty()) cfg.outputs.dir = out_dir;
    return cfg;
}

int cmd_run(const std::string& path, bool has_seed, std::uint64_t seed,
            const std::string& out_dir, bool quiet) {
    const auto cfg = load_with_overrides(path, has_seed, seed, out_dir);
    cfg.validate();
    const auto artifacts = sgest::run(cfg, quiet);
    if (artifacts.diverged) {
        std::cerr << "estimator divergence at t = " << artifacts.fault_time << " s\n";
        return kExitDivergence;
    }
    return kExitOk;
}

int cmd_sweep(const std::string& path, bool has_seed, std::uint64_t seed,
              const std::string& out_dir, bool quiet, const std::vector<double>& scales,
              int replicas, unsigned threads) {
    auto cfg = load_with_overrides(path, has_seed, seed, out_dir);
    cfg.validate();
    const auto result = sgest::sweep(cfg, scales, replicas, threads);
    const std::filesystem::path dir = cfg.outputs.dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw sgest::IoError("cannot create output directory " + dir.string());
    sgest::write_file(dir / "sweep.csv", result.csv);
    std::size_t diverged = 0;
    for (const auto& cell : result.cells) diverged += cell.diverged ? 1 : 0;
    if (!quiet) {
        std::cout << "sweep: " << result.cells.size() << " cells, " << diverged
                  << " diverged -> " << (dir / "sweep.csv").string() << "\n";
    }
    return kExitOk;
}

int cmd_validate(const std::string& path) {
    try {
        const auto cfg = sgest::load_scenario(path);
        cfg.validate();
    } catch (const sgest::ConfigError& e) {
        std::cerr << e.what();
        const std::string msg = e.what();
        if (msg.empty() || msg.back() != '\n') std::cerr << "\n";
        return kExitConfig;
    }
    return kExitOk;
}

// Splits the run timeseries into the plot-ready per-figure slices: state
// tracks (rotor angle and internal voltage) and parameter/speed tracks.
int cmd_report(const std::string& dir_str, bool quiet) {
    namespace fs = std::filesystem;
    const fs::path dir(dir_str);
    const fs::path src = dir / "timeseries.csv";
    std::ifstream in(src);
    if (!in) throw sgest::IoError("cannot open " + src.string());

    std::string header;
    if (!std::getline(in, header))
        throw sgest::IoError("empty timeseries: " + src.string());
    std::map<std::string, std::size_t> col;
    {
        std::stringstream hs(header);
        std::string name;
        std::size_t idx = 0;
        while (std::getline(hs, name, ',')) col[name] = idx++;
    }
    for (const char* need :
         {"t", "delta", "x1_hat", "eqp", "x3_hat", "domega", "x2_hat", "theta1_hat",
          "theta2_hat", "Delta", "err_x1", "err_x3"})
        if (!col.count(need))
            throw sgest::IoError(std::string("timeseries is missing column ") + need);

    sgest::CsvWriter states({"t", "delta", "x1_hat", "err_x1", "eqp", "x3_hat", "err_x3"});
    sgest::CsvWriter params({"t", "domega", "x2_hat", "theta1_hat", "theta2_hat", "Delta"});
    std::string line;
    std::vector<std::string> fields;
    while (std::getline(in, line)) {
        fields.clear();
        std::stringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(f);
        if (fields.size() < col.size()) continue;
        auto put = [&](sgest::CsvWriter& w, const char* name) { w.field(fields[col[name]]); };
        states.begin_row();
        for (const char* name : {"t", "delta", "x1_hat", "err_x1", "eqp", "x3_hat", "err_x3"})
            put(states, name);
        params.begin_row();
        for (const char* name : {"t", "domega", "x2_hat", "theta1_hat", "theta2_hat", "Delta"})
            put(params, name);
    }
    sgest::write_file(dir / "fig_state_tracks.csv", states.str());
    sgest::write_file(dir / "fig_param_tracks.csv", params.str());
    if (!quiet)
        std::cout << "report: wrote fig_state_tracks.csv and fig_param_tracks.csv in "
                  << dir.string() << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"synchronous generator state/parameter estimation runner"};
    app.set_version_flag("--version", sgest::kVersion);
    app.require_subcommand(1);

    std::string cfg_path, out_dir;
    std::uint64_t seed = 0;
    bool quiet = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "master seed override (reseeds noise and excitation)");
        cmd->add_option("--out", out_dir, "output directory override");
        cmd->add_flag("--quiet", quiet, "suppress progress output");
    };

    auto* run_cmd = app.add_subcommand("run", "execute one scenario and write artifacts");
    run_cmd->add_option("config", cfg_path, "scenario config file")->required();
    add_common(run_cmd);

    std::vector<double> scales{1.0};
    int replicas = 1;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    auto* sweep_cmd = app.add_subcommand("sweep", "run a noise-scale x replica grid");
    sweep_cmd->add_option("config", cfg_path, "scenario config file")->required();
    sweep_cmd->add_option("--scales", scales, "noise-scale multipliers")->expected(-1);
    sweep_cmd->add_option("--replicas", replicas, "replicas per scale");
    sweep_cmd->add_option("--threads", threads,
                          "worker threads (results are thread-count independent)");
    add_common(sweep_cmd);

    auto* validate_cmd = app.add_subcommand("validate", "check a config against every invariant");
    validate_cmd->add_option("config", cfg_path, "scenario config file")->required();

    std::string report_dir;
    auto* report_cmd = app.add_subcommand("report", "emit plot-ready figure slices from run artifacts");
    report_cmd->add_option("artifacts", report_dir, "run artifacts directory")->required();
    report_cmd->add_flag("--quiet", quiet, "suppress progress output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(run_cmd))
            return cmd_run(cfg_path, run_cmd->count("--seed") > 0, seed, out_dir, quiet);
        if (app.got_subcommand(sweep_cmd))
            return cmd_sweep(cfg_path, sweep_cmd->count("--seed") > 0, seed, out_dir, quiet,
                             scales, replicas, threads);
        if (app.got_subcommand(validate_cmd)) return cmd_validate(cfg_path);
        if (app.got_subcommand(report_cmd)) return cmd_report(report_dir, quiet);
    } catch (const sgest::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const sgest::EstimatorDivergence& e) {
        std::cerr << "estimator divergence at t = " << e.t_fault << " s\n";
        return kExitDivergence;
    } catch (const sgest::SimulationFault& e) {
        std::cerr << "simulation fault at t = " << e.t_fault << " s: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const sgest::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
