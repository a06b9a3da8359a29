#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sgest/analysis.hpp"
#include "sgest/errors.hpp"
#include "sgest/pipeline.hpp"
#include "sgest/scenario.hpp"
#include "test_util.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sgest;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ScenarioConfig quick(const char* name, double duration) {
    auto cfg = load_scenario(sgest::test::config_path(name));
    cfg.sim.duration = duration;
    return cfg;
}

} // namespace

TEST_CASE("same config and seed reproduce byte-identical artifacts") {
    auto cfg = quick("gauss45db.cfg", 20.0);
    const auto tmp = std::filesystem::temp_directory_path() / "sgest_det_test";
    std::filesystem::remove_all(tmp);
    cfg.outputs.dir = (tmp / "a").string();
    const auto first = run(cfg);
    cfg.outputs.dir = (tmp / "b").string();
    const auto second = run(cfg);
    CHECK(slurp(first.timeseries) == slurp(second.timeseries));
    CHECK(slurp(first.bounds_report) == slurp(second.bounds_report));
    CHECK(slurp(first.pe_report) == slurp(second.pe_report));
    CHECK(first.config_hash == second.config_hash);
    std::filesystem::remove_all(tmp);
}

TEST_CASE("timeseries schema is fixed") {
    const auto& cols = timeseries_columns();
    const std::vector<std::string> expected{
        "t",      "delta",      "domega",     "eqp",   "x1_hat", "x2_hat", "x3_hat",
        "theta1_hat", "theta2_hat", "Delta", "y1",     "y2",     "y3",
        "y4",     "y5",         "y6",         "err_x1", "err_x2", "err_x3",
        "err_theta1", "err_theta2"};
    CHECK(cols == expected);

    auto cfg = quick("noiseless.cfg", 5.0);
    const auto oc = execute(cfg);
    const std::string csv = timeseries_csv(oc.primary, oc.theta_true);
    std::string header = csv.substr(0, csv.find('\n'));
    std::string joined;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) joined += ',';
        joined += cols[i];
    }
    CHECK(header == joined);
    // one row per PMU sample, both endpoints included
    const auto rows = static_cast<std::size_t>(
        std::count(csv.begin(), csv.end(), '\n')) - 1;
    CHECK(rows == oc.primary.size());
    CHECK(rows == static_cast<std::size_t>(5.0 * 50.0) + 1);
}

TEST_CASE("noise samples honor the derived bounds at every step") {
    auto cfg = quick("laplace45db.cfg", 20.0);
    const auto oc = execute(cfg);
    const auto& b = oc.noise_bounds;
    for (std::size_t i = 0; i < oc.primary.samples.size(); ++i) {
        const auto& s = oc.primary.samples[i];
        const auto& q = oc.primary.terms[i];
        CHECK(std::abs(s.y1 - q.V_t) <= b.w_max[0]);
        CHECK(std::abs(wrap_angle(s.y2 - q.theta_t)) <= b.w_max[1]);
        CHECK(std::abs(s.y3 - q.I_t) <= b.w_max[2]);
        CHECK(std::abs(wrap_angle(s.y4 - q.phi_t)) <= b.w_max[3]);
        CHECK(std::abs(s.y5 - q.P_t) <= b.w_max[4]);
        CHECK(std::abs(s.y6 - q.Q_t) <= b.w_max[5]);
        CHECK(std::abs(s.Tm_hat - q.T_m) <= b.w_Tm_max);
    }
}

TEST_CASE("bundled scenarios keep the frequency band and excitation") {
    for (const char* name : {"noiseless.cfg", "gauss45db.cfg", "laplace45db.cfg"}) {
        auto cfg = load_scenario(sgest::test::config_path(name));
        const auto oc = execute(cfg);
        CHECK(oc.freq_in_band_fraction >= 0.99);
        CHECK(oc.pe.pe_satisfied);
        CHECK_FALSE(oc.diverged);
        for (double v : oc.bounds.sup_err) CHECK(std::isfinite(v));
    }
}

TEST_CASE("estimator divergence is reported with artifacts intact") {
    auto cfg = quick("gauss45db.cfg", 20.0);
    cfg.estimator.gamma1 = 1e19;
    cfg.estimator.gamma2 = 1e19;
    const auto tmp = std::filesystem::temp_directory_path() / "sgest_div_test";
    std::filesystem::remove_all(tmp);
    cfg.outputs.dir = tmp.string();
    const auto art = run(cfg);
    CHECK(art.diverged);
    CHECK(std::isfinite(art.fault_time));
    CHECK(std::filesystem::exists(art.timeseries));
    CHECK(std::filesystem::exists(art.manifest));
    std::filesystem::remove_all(tmp);
}

TEST_CASE("sweep determinism across thread counts") {
    auto cfg = quick("gauss45db.cfg", 10.0);
    const std::vector<double> scales{0.5, 1.0};
    const auto serial = sweep(cfg, scales, 3, 1);
    const auto parallel = sweep(cfg, scales, 3, 4);
    CHECK(serial.csv == parallel.csv);
    REQUIRE(serial.cells.size() == parallel.cells.size());
    for (std::size_t i = 0; i < serial.cells.size(); ++i) {
        CHECK(serial.cells[i].sup_err == parallel.cells[i].sup_err);
        CHECK(serial.cells[i].seed == parallel.cells[i].seed);
    }
}

TEST_CASE("degenerate sweep reproduces the noiseless case") {
    auto cfg = quick("gauss45db.cfg", 20.0);
    const auto result = sweep(cfg, {0.0}, 2, 2);
    for (const auto& cell : result.cells) {
        CHECK_FALSE(cell.diverged);
        CHECK(cell.sup_err[0] < 1e-9); // algebraic channels exact without noise
        CHECK(cell.sup_err[2] < 1e-9);
    }
}

TEST_CASE("sweep medians order with the noise scale") {
    auto cfg = quick("gauss45db.cfg", 20.0);
    const std::vector<double> scales{0.5, 1.0, 2.0};
    const auto result = sweep(cfg, scales, 6, 2);
    auto median_sup = [&](std::size_t si) {
        std::vector<double> v;
        for (const auto& cell : result.cells)
            if (cell.scale == scales[si]) v.push_back(cell.sup_err[0]);
        std::sort(v.begin(), v.end());
        return 0.5 * (v[v.size() / 2] + v[(v.size() - 1) / 2]);
    };
    CHECK(median_sup(0) < median_sup(1));
    CHECK(median_sup(1) < median_sup(2));
}

TEST_CASE("halving the noise never inflates the observer errors") {
    // with identical seeds the draws scale exactly, so the post-settling
    // sup-errors respond monotonically (and roughly linearly) to the bounds
    const auto full = load_scenario(sgest::test::config_path("gauss45db.cfg"));
    const auto half = with_noise_scale(full, 0.5);
    const auto oc_full = execute(full);
    const auto oc_half = execute(half);
    for (std::size_t c : {1u, 3u, 4u}) { // x2, theta1, theta2 channels
        CHECK(oc_half.bounds.sup_err[c] <= 1.05 * oc_full.bounds.sup_err[c]);
    }
}

TEST_CASE("the noiseless run artifact meets the error thresholds row by row") {
    auto cfg = load_scenario(sgest::test::config_path("noiseless.cfg"));
    const auto tmp = std::filesystem::temp_directory_path() / "sgest_noiseless_art";
    std::filesystem::remove_all(tmp);
    cfg.outputs.dir = tmp.string();
    const auto art = run(cfg);
    std::ifstream in(art.timeseries);
    REQUIRE(in.good());
    std::string line, last;
    std::getline(in, line); // header
    while (std::getline(in, line))
        if (!line.empty()) last = line;
    std::vector<double> fields;
    std::stringstream ls(last);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(std::stod(f));
    REQUIRE(fields.size() == timeseries_columns().size());
    const double t = fields[0];
    CHECK(t == doctest::Approx(cfg.sim.duration));
    CHECK(std::abs(fields[16]) < 1e-9);  // err_x1
    CHECK(std::abs(fields[17]) < 1e-3);  // err_x2
    CHECK(std::abs(fields[18]) < 1e-9);  // err_x3
    const auto theta1 = cfg.generator.a1();
    const auto theta2 = cfg.generator.a2();
    CHECK(std::abs(fields[19]) / theta1 < 1e-3); // err_theta1
    CHECK(std::abs(fields[20]) / theta2 < 1e-3); // err_theta2
    std::filesystem::remove_all(tmp);
}

TEST_CASE("master seed override reseeds both stream families") {
    const auto cfg = quick("gauss45db.cfg", 10.0);
    const auto a = with_master_seed(cfg, 1);
    const auto b = with_master_seed(cfg, 2);
    CHECK(a.noise.seed != b.noise.seed);
    CHECK(a.excitation.seed != b.excitation.seed);
    const auto oc_a = execute(a);
    const auto oc_b = execute(b);
    CHECK(oc_a.primary.samples[100].y1 != oc_b.primary.samples[100].y1);
}

TEST_CASE("uniform noise family runs end to end with exact bounds") {
    auto cfg = quick("gauss45db.cfg", 20.0);
    cfg.noise.family = NoiseSpec::Family::Uniform;
    cfg.noise.uniform_halfwidth = {0.01, 5e-4, 0.008, 5e-4, 0.01, 0.01};
    const auto oc = execute(cfg);
    CHECK_FALSE(oc.diverged);
    CHECK(oc.noise_bounds.w_max[0] == 0.01);
    CHECK(oc.bounds.sup_err[0] <= 1.1 * oc.bounds.w_x1_max);
    CHECK(oc.bounds.sup_err[2] <= 1.1 * oc.bounds.w_x3_max);
    for (std::size_t i = 0; i < oc.primary.samples.size(); ++i)
        CHECK(std::abs(oc.primary.samples[i].y1 - oc.primary.terms[i].V_t) <= 0.01);
}

TEST_CASE("a kron scenario runs through the full pipeline") {
    auto cfg = quick("noiseless.cfg", 10.0);
    cfg.network.kind = NetworkConfig::Kind::Kron;
    cfg.network.n = 2;
    cfg.network.Y = {{0.55, -1.85}, {0.0, 2.0}, {0.0, 2.0}, {0.35, -1.9}};
    cfg.network.P_targets = {0.0, 0.45};
    cfg.network.V_targets = {1.01, 1.0};
    const auto oc = execute(cfg);
    CHECK_FALSE(oc.diverged);
    // the algebraic observer keeps its exactness on the measured machine
    CHECK(oc.bounds.sup_err[0] < 1e-9);
    CHECK(oc.bounds.sup_err[2] < 1e-9);
}
