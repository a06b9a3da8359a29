#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sgest/csv.hpp"
#include "sgest/scenario.hpp"
#include "test_util.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace sgest;

namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SGEST_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

fs::path write_config(const ScenarioConfig& cfg, const char* name) {
    const fs::path p = fs::temp_directory_path() / name;
    write_file(p, serialize_scenario(cfg));
    return p;
}

} // namespace

TEST_CASE("exit codes cover the documented failure classes") {
    const auto good = sgest::test::config_path("noiseless.cfg");
    CHECK(run_cli("validate " + good.string()) == 0);

    auto bad = load_scenario(good);
    bad.generator.H = -1.0;
    const auto bad_path = write_config(bad, "sgest_cli_bad.cfg");
    CHECK(run_cli("validate " + bad_path.string()) == 1);
    CHECK(run_cli("run " + bad_path.string()) == 1);

    auto divergent = load_scenario(sgest::test::config_path("gauss45db.cfg"));
    divergent.sim.duration = 10.0;
    divergent.estimator.gamma1 = 1e19;
    divergent.estimator.gamma2 = 1e19;
    const auto div_path = write_config(divergent, "sgest_cli_divergent.cfg");
    const auto div_out = fs::temp_directory_path() / "sgest_cli_divergent_out";
    fs::remove_all(div_out);
    CHECK(run_cli("run " + div_path.string() + " --out " + div_out.string() + " --quiet") == 2);
    CHECK(fs::exists(div_out / "manifest.json"));

    CHECK(run_cli("run /nonexistent/sgest.cfg") == 3);

    fs::remove(bad_path);
    fs::remove(div_path);
    fs::remove_all(div_out);
}

TEST_CASE("run plus report produce the artifact set end to end") {
    auto cfg = load_scenario(sgest::test::config_path("gauss45db.cfg"));
    cfg.sim.duration = 10.0;
    const auto cfg_path = write_config(cfg, "sgest_cli_run.cfg");
    const auto out = fs::temp_directory_path() / "sgest_cli_run_out";
    fs::remove_all(out);
    CHECK(run_cli("run " + cfg_path.string() + " --out " + out.string() + " --quiet") == 0);
    for (const char* name :
         {"timeseries.csv", "bounds_report.json", "pe_report.json", "manifest.json"})
        CHECK(fs::exists(out / name));
    CHECK(run_cli("report " + out.string() + " --quiet") == 0);
    CHECK(fs::exists(out / "fig_state_tracks.csv"));
    CHECK(fs::exists(out / "fig_param_tracks.csv"));

    // a master-seed override changes the sampled stream deterministically
    const auto out2 = fs::temp_directory_path() / "sgest_cli_run_out2";
    fs::remove_all(out2);
    CHECK(run_cli("run " + cfg_path.string() + " --out " + out2.string() +
                  " --seed 7 --quiet") == 0);
    std::ifstream a(out / "timeseries.csv"), b(out2 / "timeseries.csv");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() != sb.str());

    fs::remove(cfg_path);
    fs::remove_all(out);
    fs::remove_all(out2);
}
