#pragma once

#include "sgest/generator.hpp"
#include "sgest/network.hpp"
#include "sgest/scenario.hpp"

#include <filesystem>
#include <string>

namespace sgest::test {

inline std::filesystem::path config_path(const std::string& name) {
    return std::filesystem::path(SGEST_CONFIG_DIR) / name;
}

inline GeneratorParams default_params() {
    GeneratorParams p;
    p.x_d = 1.8;
    p.x_dp = 0.3;
    p.x_q = 1.7;
    p.R_s = 0.003;
    p.H = 5.0;
    p.D = 0.2;
    p.T_d0p = 8.0;
    p.omega_s = 2.0 * 3.14159265358979323846 * 60.0;
    return p;
}

inline ExciterParams default_exciter() {
    ExciterParams e;
    e.K_A = 100.0;
    e.T_A = 0.05;
    e.E_f_min = 0.0;
    e.E_f_max = 5.0;
    e.pss_enabled = true;
    e.K_pss = 0.05;
    e.T_w = 2.0;
    e.T_1 = 0.25;
    e.T_2 = 0.05;
    return e;
}

inline SmibNetwork default_smib() {
    SmibNetwork n;
    n.x_e = 0.3;
    n.V_inf = 1.0;
    n.theta_inf0 = 0.0;
    return n;
}

} // namespace sgest::test
