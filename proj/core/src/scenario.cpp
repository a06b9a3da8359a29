#include "sgest/scenario.hpp"

#include "sgest/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace sgest {

using nlohmann::json;

namespace {

// Rejects keys outside the schema; a misspelled tuning knob must fail
// loudly instead of silently running defaults.
void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError(path + it.key() + ": unknown key");
    }
}

double need_num(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number())
        throw ConfigError(path + key + ": required number missing");
    return it->get<double>();
}

double opt_num(const json& obj, const char* key, double fallback,
               const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number())
        throw ConfigError(path + key + ": must be a number");
    return it->get<double>();
}

bool opt_bool(const json& obj, const char* key, bool fallback, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_boolean())
        throw ConfigError(path + key + ": must be a boolean");
    return it->get<bool>();
}

std::uint64_t need_u64(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_unsigned())
        throw ConfigError(path + key + ": required unsigned integer missing");
    return it->get<std::uint64_t>();
}

SignalSpec parse_signal(const json& obj, const std::string& path) {
    check_keys(obj, path, {"sines", "walk"});
    SignalSpec spec;
    if (auto it = obj.find("sines"); it != obj.end()) {
        if (!it->is_array()) throw ConfigError(path + "sines: must be an array");
        std::size_t i = 0;
        for (const auto& s : *it) {
            const std::string spath = path + "sines[" + std::to_string(i) + "].";
            check_keys(s, spath, {"amplitude", "freq_hz", "phase"});
            SineComponent c;
            c.amplitude = need_num(s, spath, "amplitude");
            c.freq_hz = need_num(s, spath, "freq_hz");
            c.phase = opt_num(s, "phase", 0.0, spath);
            spec.sines.push_back(c);
            ++i;
        }
    }
    if (auto it = obj.find("walk"); it != obj.end()) {
        const std::string wpath = path + "walk.";
        check_keys(*it, wpath, {"amplitude", "tau_s", "knot_dt"});
        spec.walk.amplitude = need_num(*it, wpath, "amplitude");
        spec.walk.tau_s = opt_num(*it, "tau_s", 10.0, wpath);
        spec.walk.knot_dt = opt_num(*it, "knot_dt", 0.2, wpath);
    }
    return spec;
}

json signal_to_json(const SignalSpec& spec) {
    json out = json::object();
    json sines = json::array();
    for (const auto& s : spec.sines)
        sines.push_back({{"amplitude", s.amplitude},
                         {"freq_hz", s.freq_hz},
                         {"phase", s.phase}});
    out["sines"] = sines;
    out["walk"] = {{"amplitude", spec.walk.amplitude},
                   {"tau_s", spec.walk.tau_s},
                   {"knot_dt", spec.walk.knot_dt}};
    return out;
}

NoiseSpec::Family family_from_string(const std::string& name) {
    if (name == "none") return NoiseSpec::Family::None;
    if (name == "gaussian") return NoiseSpec::Family::Gaussian;
    if (name == "laplacian") return NoiseSpec::Family::Laplacian;
    if (name == "uniform") return NoiseSpec::Family::Uniform;
    throw ConfigError("noise.family: must be one of none|gaussian|laplacian|uniform");
}

const char* family_to_string(NoiseSpec::Family f) {
    switch (f) {
    case NoiseSpec::Family::None: return "none";
    case NoiseSpec::Family::Gaussian: return "gaussian";
    case NoiseSpec::Family::Laplacian: return "laplacian";
    case NoiseSpec::Family::Uniform: return "uniform";
    }
    return "none";
}

ScenarioConfig extract_scenario(const json& root);

} // namespace

void NetworkConfig::validate() const {
    std::ostringstream bad;
    if (kind == Kind::Smib) {
        if (!(x_e > 0.0)) bad << "network.x_e: must be > 0\n";
        if (!(V_inf > 0.0)) bad << "network.V_inf: must be > 0\n";
        if (!(V_target > 0.0)) bad << "network.V_target: must be > 0\n";
    } else {
        if (n < 1) bad << "network.Y: must hold at least one machine\n";
        if (Y.size() != n * n) bad << "network.Y: must be square\n";
        for (std::size_t i = 0; i < n && Y.size() == n * n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (std::abs(Y[i * n + j] - Y[j * n + i]) > 1e-9) {
                    bad << "network.Y: must be symmetric\n";
                    i = n;
                    break;
                }
        if (P_targets.size() != n) bad << "network.P_target: must list one value per machine\n";
        if (V_targets.size() != n) bad << "network.V_target: must list one value per machine\n";
        for (double v : V_targets)
            if (!(v > 0.0)) {
                bad << "network.V_target: entries must be > 0\n";
                break;
            }
    }
    const std::string msg = bad.str();
    if (!msg.empty()) throw ConfigError(msg);
}

void ExcitationConfig::validate() const {
    theta_inf.validate("excitation.theta_inf.");
    tm.validate("excitation.tm.");
}

void SimConfig::validate() const {
    std::ostringstream bad;
    if (!(dt > 0.0) || dt > 0.010 + 1e-15)
        bad << "sim.dt: must lie in (0, 10 ms]\n";
    if (!(duration > 0.0)) bad << "sim.duration: must be > 0\n";
    if (!(pmu_rate > 0.0)) bad << "sim.pmu_rate: must be > 0\n";
    const std::string msg = bad.str();
    if (!msg.empty()) throw ConfigError(msg);
    // divisibility contract lives with the schedule
    (void)PmuSchedule::make(dt, pmu_rate);
    const double steps = duration / dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
        throw ConfigError("sim.duration: must be an integer multiple of sim.dt");
}

void ScenarioConfig::validate() const {
    std::string problems;
    auto collect = [&problems](const auto& fn) {
        try {
            fn();
        } catch (const ConfigError& e) {
            problems += e.what();
            if (!problems.empty() && problems.back() != '\n') problems += '\n';
        }
    };
    collect([&] { generator.validate("generator."); });
    collect([&] { exciter.validate("exciter."); });
    collect([&] { network.validate(); });
    collect([&] { excitation.validate(); });
    collect([&] { noise.validate("noise."); });
    collect([&] { estimator.validate("estimator."); });
    collect([&] { sim.validate(); });
    if (!problems.empty()) throw ConfigError(problems);
}

ScenarioConfig parse_scenario(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // byte offset -> line/column for a usable diagnostic
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream msg;
        msg << "config parse error at line " << line << ", column " << col << ": "
            << e.what();
        throw ConfigError(msg.str());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be an object");

    try {
        return extract_scenario(root);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

namespace {

ScenarioConfig extract_scenario(const json& root) {
    check_keys(root, "", {"generator", "exciter", "network", "excitation", "noise",
                          "estimator", "sim", "outputs"});
    for (const char* key : {"generator", "exciter", "network", "excitation", "noise",
                            "estimator", "sim"})
        if (!root.contains(key))
            throw ConfigError(std::string(key) + ": required section missing");

    ScenarioConfig cfg;

    {
        const json& g = root["generator"];
        check_keys(g, "generator.",
                   {"x_d", "x_dp", "x_q", "R_s", "H", "D", "T_d0p", "omega_s"});
        cfg.generator.x_d = need_num(g, "generator.", "x_d");
        cfg.generator.x_dp = need_num(g, "generator.", "x_dp");
        cfg.generator.x_q = need_num(g, "generator.", "x_q");
        cfg.generator.R_s = need_num(g, "generator.", "R_s");
        cfg.generator.H = need_num(g, "generator.", "H");
        cfg.generator.D = need_num(g, "generator.", "D");
        cfg.generator.T_d0p = need_num(g, "generator.", "T_d0p");
        cfg.generator.omega_s = need_num(g, "generator.", "omega_s");
    }
    {
        const json& e = root["exciter"];
        check_keys(e, "exciter.", {"K_A", "T_A", "E_f_min", "E_f_max", "V_ref",
                                   "pss_enabled", "K_pss", "T_w", "T_1", "T_2"});
        cfg.exciter.K_A = need_num(e, "exciter.", "K_A");
        cfg.exciter.T_A = need_num(e, "exciter.", "T_A");
        cfg.exciter.E_f_min = need_num(e, "exciter.", "E_f_min");
        cfg.exciter.E_f_max = need_num(e, "exciter.", "E_f_max");
        cfg.exciter.V_ref = opt_num(e, "V_ref", 0.0, "exciter.");
        cfg.exciter.pss_enabled = opt_bool(e, "pss_enabled", true, "exciter.");
        cfg.exciter.K_pss = opt_num(e, "K_pss", 0.0, "exciter.");
        cfg.exciter.T_w = opt_num(e, "T_w", 2.0, "exciter.");
        cfg.exciter.T_1 = opt_num(e, "T_1", 0.25, "exciter.");
        cfg.exciter.T_2 = opt_num(e, "T_2", 0.05, "exciter.");
    }
    {
        const json& nw = root["network"];
        auto kind_it = nw.find("kind");
        if (kind_it == nw.end() || !kind_it->is_string())
            throw ConfigError("network.kind: required string missing");
        const std::string kind = kind_it->get<std::string>();
        if (kind == "smib") {
            cfg.network.kind = NetworkConfig::Kind::Smib;
            check_keys(nw, "network.",
                       {"kind", "x_e", "V_inf", "theta_inf0", "P_target", "V_target"});
            cfg.network.x_e = need_num(nw, "network.", "x_e");
            cfg.network.V_inf = need_num(nw, "network.", "V_inf");
            cfg.network.theta_inf0 = opt_num(nw, "theta_inf0", 0.0, "network.");
            cfg.network.P_target = need_num(nw, "network.", "P_target");
            cfg.network.V_target = need_num(nw, "network.", "V_target");
        } else if (kind == "kron") {
            cfg.network.kind = NetworkConfig::Kind::Kron;
            check_keys(nw, "network.", {"kind", "Y_re", "Y_im", "P_target", "V_target"});
            auto re_it = nw.find("Y_re");
            auto im_it = nw.find("Y_im");
            if (re_it == nw.end() || im_it == nw.end() || !re_it->is_array() ||
                !im_it->is_array() || re_it->size() != im_it->size())
                throw ConfigError("network.Y_re/Y_im: required arrays of equal length");
            const auto total = re_it->size();
            const auto dim = static_cast<std::size_t>(std::llround(std::sqrt(
                static_cast<double>(total))));
            if (dim * dim != total)
                throw ConfigError("network.Y_re: length must be a perfect square");
            cfg.network.n = dim;
            cfg.network.Y.resize(total);
            for (std::size_t i = 0; i < total; ++i)
                cfg.network.Y[i] = {(*re_it)[i].get<double>(), (*im_it)[i].get<double>()};
            auto pt = nw.find("P_target");
            auto vt = nw.find("V_target");
            if (pt == nw.end() || !pt->is_array() || vt == nw.end() || !vt->is_array())
                throw ConfigError("network.P_target/V_target: required arrays missing");
            for (const auto& v : *pt) cfg.network.P_targets.push_back(v.get<double>());
            for (const auto& v : *vt) cfg.network.V_targets.push_back(v.get<double>());
        } else {
            throw ConfigError("network.kind: must be \"smib\" or \"kron\"");
        }
    }
    {
        const json& ex = root["excitation"];
        check_keys(ex, "excitation.", {"seed", "theta_inf", "tm"});
        cfg.excitation.seed = need_u64(ex, "excitation.", "seed");
        if (auto it = ex.find("theta_inf"); it != ex.end())
            cfg.excitation.theta_inf = parse_signal(*it, "excitation.theta_inf.");
        if (auto it = ex.find("tm"); it != ex.end())
            cfg.excitation.tm = parse_signal(*it, "excitation.tm.");
    }
    {
        const json& nz = root["noise"];
        check_keys(nz, "noise.", {"family", "snr_db", "truncation_k", "seed", "w_Tm_max",
                                  "uniform_halfwidth"});
        auto fam_it = nz.find("family");
        if (fam_it == nz.end() || !fam_it->is_string())
            throw ConfigError("noise.family: required string missing");
        cfg.noise.family = family_from_string(fam_it->get<std::string>());
        cfg.noise.snr_db = opt_num(nz, "snr_db", 45.0, "noise.");
        cfg.noise.truncation_k = opt_num(nz, "truncation_k", 4.0, "noise.");
        cfg.noise.seed = nz.contains("seed") ? need_u64(nz, "noise.", "seed") : 1;
        cfg.noise.w_Tm_max = opt_num(nz, "w_Tm_max", 0.0, "noise.");
        if (auto it = nz.find("uniform_halfwidth"); it != nz.end()) {
            if (!it->is_array() || it->size() != 6)
                throw ConfigError("noise.uniform_halfwidth: must be an array of 6 numbers");
            for (std::size_t i = 0; i < 6; ++i)
                cfg.noise.uniform_halfwidth[i] = (*it)[i].get<double>();
        } else if (cfg.noise.family == NoiseSpec::Family::Uniform) {
            throw ConfigError("noise.uniform_halfwidth: required for the uniform family");
        }
    }
    {
        const json& es = root["estimator"];
        check_keys(es, "estimator.", {"k", "gamma1", "gamma2", "lambda", "alpha_H",
                                      "theta1_init", "theta2_init", "x2I_init"});
        cfg.estimator.k = need_num(es, "estimator.", "k");
        cfg.estimator.gamma1 = need_num(es, "estimator.", "gamma1");
        cfg.estimator.gamma2 = need_num(es, "estimator.", "gamma2");
        cfg.estimator.lambda = need_num(es, "estimator.", "lambda");
        cfg.estimator.alpha_H = opt_num(es, "alpha_H", cfg.estimator.lambda / 2.0,
                                        "estimator.");
        cfg.estimator.theta_init = {opt_num(es, "theta1_init", 0.0, "estimator."),
                                    opt_num(es, "theta2_init", 0.0, "estimator.")};
        if (es.contains("x2I_init"))
            cfg.estimator.x2I_init = need_num(es, "estimator.", "x2I_init");
    }
    {
        const json& sm = root["sim"];
        check_keys(sm, "sim.", {"dt", "duration", "pmu_rate"});
        cfg.sim.dt = need_num(sm, "sim.", "dt");
        cfg.sim.duration = need_num(sm, "sim.", "duration");
        cfg.sim.pmu_rate = need_num(sm, "sim.", "pmu_rate");
    }
    if (root.contains("outputs")) {
        const json& o = root["outputs"];
        check_keys(o, "outputs.", {"dir", "timeseries", "bounds_report", "pe_report"});
        if (auto it = o.find("dir"); it != o.end()) {
            if (!it->is_string()) throw ConfigError("outputs.dir: must be a string");
            cfg.outputs.dir = it->get<std::string>();
        }
        cfg.outputs.timeseries = opt_bool(o, "timeseries", true, "outputs.");
        cfg.outputs.bounds_report = opt_bool(o, "bounds_report", true, "outputs.");
        cfg.outputs.pe_report = opt_bool(o, "pe_report", true, "outputs.");
    }
    return cfg;
}

} // namespace

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string serialize_scenario(const ScenarioConfig& c) {
    json root;
    root["generator"] = {{"x_d", c.generator.x_d},     {"x_dp", c.generator.x_dp},
                         {"x_q", c.generator.x_q},     {"R_s", c.generator.R_s},
                         {"H", c.generator.H},         {"D", c.generator.D},
                         {"T_d0p", c.generator.T_d0p}, {"omega_s", c.generator.omega_s}};
    root["exciter"] = {{"K_A", c.exciter.K_A},         {"T_A", c.exciter.T_A},
                       {"E_f_min", c.exciter.E_f_min}, {"E_f_max", c.exciter.E_f_max},
                       {"V_ref", c.exciter.V_ref},     {"pss_enabled", c.exciter.pss_enabled},
                       {"K_pss", c.exciter.K_pss},     {"T_w", c.exciter.T_w},
                       {"T_1", c.exciter.T_1},         {"T_2", c.exciter.T_2}};
    if (c.network.kind == NetworkConfig::Kind::Smib) {
        root["network"] = {{"kind", "smib"},
                           {"x_e", c.network.x_e},
                           {"V_inf", c.network.V_inf},
                           {"theta_inf0", c.network.theta_inf0},
                           {"P_target", c.network.P_target},
                           {"V_target", c.network.V_target}};
    } else {
        json re = json::array(), im = json::array();
        for (const auto& y : c.network.Y) {
            re.push_back(y.real());
            im.push_back(y.imag());
        }
        root["network"] = {{"kind", "kron"},
                           {"Y_re", re},
                           {"Y_im", im},
                           {"P_target", c.network.P_targets},
                           {"V_target", c.network.V_targets}};
    }
    root["excitation"] = {{"seed", c.excitation.seed},
                          {"theta_inf", signal_to_json(c.excitation.theta_inf)},
                          {"tm", signal_to_json(c.excitation.tm)}};
    root["noise"] = {{"family", family_to_string(c.noise.family)},
                     {"snr_db", c.noise.snr_db},
                     {"truncation_k", c.noise.truncation_k},
                     {"seed", c.noise.seed},
                     {"w_Tm_max", c.noise.w_Tm_max}};
    if (c.noise.family == NoiseSpec::Family::Uniform)
        root["noise"]["uniform_halfwidth"] = c.noise.uniform_halfwidth;
    root["estimator"] = {{"k", c.estimator.k},
                         {"gamma1", c.estimator.gamma1},
                         {"gamma2", c.estimator.gamma2},
                         {"lambda", c.estimator.lambda},
                         {"alpha_H", c.estimator.alpha_H},
                         {"theta1_init", c.estimator.theta_init[0]},
                         {"theta2_init", c.estimator.theta_init[1]}};
    if (c.estimator.x2I_init)
        root["estimator"]["x2I_init"] = *c.estimator.x2I_init;
    root["sim"] = {{"dt", c.sim.dt},
                   {"duration", c.sim.duration},
                   {"pmu_rate", c.sim.pmu_rate}};
    root["outputs"] = {{"dir", c.outputs.dir},
                       {"timeseries", c.outputs.timeseries},
                       {"bounds_report", c.outputs.bounds_report},
                       {"pe_report", c.outputs.pe_report}};
    return root.dump(2) + "\n";
}

std::uint64_t config_hash(const ScenarioConfig& config) {
    // identifies the run-determining content; where the artifacts land is
    // not part of the run identity
    ScenarioConfig canonical = config;
    canonical.outputs = OutputsConfig{};
    const std::string text = serialize_scenario(canonical);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace sgest
