#include "sgest/pipeline.hpp"

#include "sgest/algebraic_observer.hpp"
#include "sgest/csv.hpp"
#include "sgest/errors.hpp"
#include "sgest/rng.hpp"
#include "sgest/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

namespace sgest {

using nlohmann::json;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// PMU-rate truth of the measured machine.
struct TruthSeries {
    double dt_pmu = 0.0;
    std::vector<double> t;
    std::vector<GeneratorState> states;
    std::vector<TerminalQuantities> terms;
};

TruthSeries simulate_smib(const ScenarioConfig& cfg) {
    const double duration = cfg.sim.duration;
    SmibNetwork smib;
    smib.x_e = cfg.network.x_e;
    smib.V_inf = cfg.network.V_inf;
    smib.theta_inf0 = cfg.network.theta_inf0;
    smib.theta_inf = Signal(cfg.excitation.theta_inf,
                            derive_seed(cfg.excitation.seed, 0x7468ULL), duration + 2.0);

    ExciterParams ep = cfg.exciter;
    const Equilibrium eq =
        init_equilibrium(smib, cfg.generator, ep, cfg.network.P_target, cfg.network.V_target);
    if (ep.V_ref == 0.0) ep.V_ref = eq.V_ref;

    const Signal tm_sig(cfg.excitation.tm, derive_seed(cfg.excitation.seed, 0x746dULL),
                        duration + 2.0);
    const TorqueSchedule tm{eq.T_m, &tm_sig};
    const NetworkModel net = smib;

    const auto sched = PmuSchedule::make(cfg.sim.dt, cfg.sim.pmu_rate);
    const auto n_steps = static_cast<long>(std::llround(duration / cfg.sim.dt));

    TruthSeries out;
    out.dt_pmu = sched.period;
    GeneratorState state = eq.state;
    for (long step = 0; step <= n_steps; ++step) {
        const double t = static_cast<double>(step) * cfg.sim.dt;
        if (sched.emits_at(step)) {
            out.t.push_back(t);
            out.states.push_back(state);
            out.terms.push_back(solve_terminal(state, net, cfg.generator, t,
                                               field_voltage(state, ep), tm.at(t)));
        }
        if (step < n_steps)
            state = integrate_step(state, net, cfg.generator, ep, tm, t, cfg.sim.dt);
    }
    return out;
}

TruthSeries simulate_kron(const ScenarioConfig& cfg) {
    const double duration = cfg.sim.duration;
    const std::size_t n = cfg.network.n;

    KronSystem sys;
    sys.net.n = n;
    sys.net.Y = cfg.network.Y;
    sys.params.assign(n, cfg.generator);
    sys.exciters.assign(n, cfg.exciter);

    KronEquilibrium eq =
        init_equilibrium_kron(sys, cfg.network.P_targets, cfg.network.V_targets);
    for (std::size_t i = 0; i < n; ++i)
        if (sys.exciters[i].V_ref == 0.0) sys.exciters[i].V_ref = eq.V_ref[i];

    std::vector<Signal> tm_sigs;
    std::vector<TorqueSchedule> tm(n);
    tm_sigs.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        tm_sigs.emplace_back(cfg.excitation.tm, derive_seed(cfg.excitation.seed, 0x746dULL, i),
                             duration + 2.0);
    for (std::size_t i = 0; i < n; ++i) tm[i] = TorqueSchedule{eq.T_m[i], &tm_sigs[i]};

    const auto sched = PmuSchedule::make(cfg.sim.dt, cfg.sim.pmu_rate);
    const auto n_steps = static_cast<long>(std::llround(duration / cfg.sim.dt));

    TruthSeries out;
    out.dt_pmu = sched.period;
    std::vector<GeneratorState> states = eq.states;
    for (long step = 0; step <= n_steps; ++step) {
        const double t = static_cast<double>(step) * cfg.sim.dt;
        if (sched.emits_at(step)) {
            auto terms = solve_terminal_kron(states, sys.net, sys.params);
            terms[0].E_f = field_voltage(states[0], sys.exciters[0]);
            terms[0].T_m = tm[0].at(t);
            out.t.push_back(t);
            out.states.push_back(states[0]);
            out.terms.push_back(terms[0]);
        }
        if (step < n_steps) states = integrate_step_kron(states, sys, tm, t, cfg.sim.dt);
    }
    return out;
}

TruthSeries simulate(const ScenarioConfig& cfg) {
    return cfg.network.kind == NetworkConfig::Kind::Smib ? simulate_smib(cfg)
                                                         : simulate_kron(cfg);
}

std::array<double, 6> channel_rms(const TruthSeries& truth) {
    std::array<double, 6> acc{};
    for (const auto& q : truth.terms) {
        const std::array<double, 6> v{q.V_t, q.theta_t, q.I_t, q.phi_t, q.P_t, q.Q_t};
        for (std::size_t c = 0; c < 6; ++c) acc[c] += v[c] * v[c];
    }
    for (auto& a : acc) a = std::sqrt(a / static_cast<double>(truth.terms.size()));
    return acc;
}

OperatingEnvelope measure_envelope(const TruthSeries& truth, const GeneratorParams& p) {
    OperatingEnvelope env;
    env.psi_nom_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < truth.terms.size(); ++i) {
        env.V_t_max = std::max(env.V_t_max, std::abs(truth.terms[i].V_t));
        env.I_t_max = std::max(env.I_t_max, std::abs(truth.terms[i].I_t));
        env.x3_max = std::max(env.x3_max, std::abs(truth.states[i].eqp));
        env.psi_nom_min = std::min(env.psi_nom_min, std::abs(nominal_psi(truth.terms[i], p)));
    }
    return env;
}

RunLog estimate_pass(const TruthSeries& truth, PmuSampler sampler,
                     const GeneratorParams& p, const EstimatorConfig& est_cfg) {
    const std::size_t n = truth.t.size();
    RunLog log;
    log.dt = truth.dt_pmu;
    log.t = truth.t;
    log.terms = truth.terms;
    log.delta.reserve(n);
    log.domega.reserve(n);
    log.eqp.reserve(n);
    for (const auto& s : truth.states) {
        log.delta.push_back(s.delta);
        log.domega.push_back(s.domega);
        log.eqp.push_back(s.eqp);
    }

    AdaptiveObserver observer(est_cfg, truth.dt_pmu);
    std::optional<AlgebraicEstimate> prev;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = truth.t[i];
        const PmuSample s = sampler.sample(truth.terms[i], t);
        try {
            const AlgebraicEstimate est = sgest::estimate(s, p, prev);
            prev = est;
            if (est.x3_nonpositive) ++log.x3_warnings;
            const double u = s.Tm_hat - est.Te_hat;
            const auto out = observer.step(t, est.x1_hat, u);
            log.samples.push_back(s);
            log.records.push_back(out.record);
            log.x1_hat.push_back(est.x1_hat);
            log.x3_hat.push_back(est.x3_hat);
            log.Te_hat.push_back(est.Te_hat);
            log.x2_hat.push_back(out.x2_hat);
            log.theta1_hat.push_back(out.theta_hat[0]);
            log.theta2_hat.push_back(out.theta_hat[1]);
        } catch (const EstimatorDivergence& e) {
            log.diverged = true;
            log.fault_time = e.t_fault;
            break;
        } catch (const DegenerateOperatingPoint&) {
            log.diverged = true;
            log.fault_time = t;
            break;
        }
    }
    // NaN-pad the estimate columns so every log spans the full run; the
    // sample/record vectors keep only the rows that actually happened.
    for (auto* col : {&log.x1_hat, &log.x2_hat, &log.x3_hat, &log.theta1_hat,
                      &log.theta2_hat, &log.Te_hat})
        col->resize(n, kNan);
    return log;
}

json bounds_report_json(const RunOutcome& oc) {
    const auto& b = oc.bounds;
    json rep;
    rep["analytic"] = {{"w_x1_max", b.w_x1_max},   {"w_psi_max", b.w_psi_max},
                       {"w_x3_max", b.w_x3_max},   {"w_Te_max", b.w_Te_max},
                       {"w_Delta_max", b.w_Delta_max}};
    rep["empirical"] = {
        {"sup_err",
         {{"x1", b.sup_err[0]},
          {"x2", b.sup_err[1]},
          {"x3", b.sup_err[2]},
          {"theta1", b.sup_err[3]},
          {"theta2", b.sup_err[4]}}},
        {"rms_err",
         {{"x1", b.rms_err[0]},
          {"x2", b.rms_err[1]},
          {"x3", b.rms_err[2]},
          {"theta1", b.rms_err[3]},
          {"theta2", b.rms_err[4]}}},
        {"rho", b.rho},
        {"zeta", b.zeta},
        {"settling_time", b.settling_time},
        {"finite", b.finite},
        {"freq_in_band_fraction", oc.freq_in_band_fraction},
        {"x3_warnings", oc.primary.x3_warnings},
        {"diverged", oc.diverged}};
    if (std::isfinite(b.fault_time)) rep["empirical"]["fault_time"] = b.fault_time;
    rep["theta_true"] = {{"theta1", oc.theta_true[0]}, {"theta2", oc.theta_true[1]}};
    return rep;
}

json pe_report_json(const PeReport& pe) {
    return json{{"window_T", pe.window_T},
                {"min_integral", pe.min_integral},
                {"mean_integral", pe.mean_integral},
                {"epsilon", pe.epsilon},
                {"pe_satisfied", pe.pe_satisfied}};
}

std::string hash_hex(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace

const std::vector<std::string>& timeseries_columns() {
    static const std::vector<std::string> cols{
        "t",       "delta",      "domega",     "eqp",        "x1_hat",  "x2_hat",
        "x3_hat",  "theta1_hat", "theta2_hat", "Delta",      "y1",      "y2",
        "y3",      "y4",         "y5",         "y6",         "err_x1",  "err_x2",
        "err_x3",  "err_theta1", "err_theta2"};
    return cols;
}

std::string timeseries_csv(const RunLog& log, const std::array<double, 2>& theta_true) {
    CsvWriter csv(timeseries_columns());
    const std::size_t rows = std::min(log.samples.size(), log.records.size());
    for (std::size_t i = 0; i < rows; ++i) {
        csv.begin_row();
        csv.field(log.t[i]);
        csv.field(log.delta[i]);
        csv.field(log.domega[i]);
        csv.field(log.eqp[i]);
        csv.field(log.x1_hat[i]);
        csv.field(log.x2_hat[i]);
        csv.field(log.x3_hat[i]);
        csv.field(log.theta1_hat[i]);
        csv.field(log.theta2_hat[i]);
        csv.field(log.records[i].Delta);
        csv.field(log.samples[i].y1);
        csv.field(log.samples[i].y2);
        csv.field(log.samples[i].y3);
        csv.field(log.samples[i].y4);
        csv.field(log.samples[i].y5);
        csv.field(log.samples[i].y6);
        csv.field(log.x1_hat[i] - log.delta[i]);
        csv.field(log.x2_hat[i] - log.domega[i]);
        csv.field(log.x3_hat[i] - log.eqp[i]);
        csv.field(log.theta1_hat[i] - theta_true[0]);
        csv.field(log.theta2_hat[i] - theta_true[1]);
    }
    return csv.str();
}

RunOutcome execute(const ScenarioConfig& cfg) {
    cfg.validate();

    const TruthSeries truth = simulate(cfg);
    const auto rms = channel_rms(truth);

    RunOutcome oc;
    oc.theta_true = {cfg.generator.a1(), cfg.generator.a2()};
    oc.envelope = measure_envelope(truth, cfg.generator);
    oc.noise_bounds = derive_bounds(cfg.noise, rms);

    NoiseSpec exact = cfg.noise;
    exact.family = NoiseSpec::Family::None;
    oc.nominal = estimate_pass(truth, PmuSampler(exact, rms), cfg.generator, cfg.estimator);
    if (cfg.noise.family == NoiseSpec::Family::None) {
        oc.primary = oc.nominal;
    } else {
        oc.primary =
            estimate_pass(truth, PmuSampler(cfg.noise, rms), cfg.generator, cfg.estimator);
    }
    oc.diverged = oc.primary.diverged || oc.nominal.diverged;
    oc.fault_time = oc.primary.diverged ? oc.primary.fault_time : oc.nominal.fault_time;

    const BoundReport analytic =
        algebraic_bounds(oc.noise_bounds, oc.envelope, cfg.generator);
    oc.bounds = run_statistics(oc.primary, oc.theta_true, cfg.estimator, kSettlingFraction,
                               &oc.nominal, analytic);

    std::size_t in_band = 0;
    const double band = 2.0 * 3.14159265358979323846 * kFreqBandHz;
    for (double w : oc.primary.domega)
        if (std::abs(w) <= band) ++in_band;
    oc.freq_in_band_fraction =
        static_cast<double>(in_band) / static_cast<double>(oc.primary.domega.size());

    std::vector<double> delta_series;
    delta_series.reserve(oc.primary.records.size());
    for (const auto& r : oc.primary.records) delta_series.push_back(r.Delta);
    const double window = std::min(kPeWindowSeconds, cfg.sim.duration / 3.0);
    try {
        oc.pe = pe_metric(delta_series, oc.primary.dt, window, 0.0);
    } catch (const ConfigError&) {
        oc.pe = PeReport{};
        oc.pe.window_T = window;
    }
    return oc;
}

RunArtifacts run(const ScenarioConfig& cfg, bool quiet) {
    const RunOutcome oc = execute(cfg);

    RunArtifacts art;
    art.dir = cfg.outputs.dir;
    art.config_hash = config_hash(cfg);
    art.diverged = oc.diverged;
    art.fault_time = oc.fault_time;

    std::error_code ec;
    std::filesystem::create_directories(art.dir, ec);
    if (ec) throw IoError("cannot create output directory " + art.dir.string());

    if (cfg.outputs.timeseries) {
        art.timeseries = art.dir / "timeseries.csv";
        write_file(art.timeseries, timeseries_csv(oc.primary, oc.theta_true));
    }
    if (cfg.outputs.bounds_report) {
        art.bounds_report = art.dir / "bounds_report.json";
        write_file(art.bounds_report, bounds_report_json(oc).dump(2) + "\n");
    }
    if (cfg.outputs.pe_report) {
        art.pe_report = art.dir / "pe_report.json";
        write_file(art.pe_report, pe_report_json(oc.pe).dump(2) + "\n");
    }
    art.manifest = art.dir / "manifest.json";
    json manifest;
    manifest["format"] = kArtifactFormat;
    manifest["version"] = kVersion;
    manifest["config_hash"] = hash_hex(art.config_hash);
    manifest["config"] = json::parse(serialize_scenario(cfg));
    write_file(art.manifest, manifest.dump(2) + "\n");

    if (!quiet) {
        std::cout << "run: " << art.dir.string() << " hash " << hash_hex(art.config_hash)
                  << (oc.diverged ? " DIVERGED" : "") << "\n";
    }
    return art;
}

ScenarioConfig with_master_seed(ScenarioConfig config, std::uint64_t master) {
    config.noise.seed = derive_seed(master, 0x6e6f6973ULL);
    config.excitation.seed = derive_seed(master, 0x65786369ULL);
    return config;
}

ScenarioConfig with_noise_scale(ScenarioConfig config, double multiplier) {
    if (!(multiplier >= 0.0))
        throw ConfigError("sweep: noise multipliers must be >= 0");
    if (multiplier == 0.0) {
        config.noise.family = NoiseSpec::Family::None;
        config.noise.w_Tm_max = 0.0;
        return config;
    }
    switch (config.noise.family) {
    case NoiseSpec::Family::None:
        break;
    case NoiseSpec::Family::Gaussian:
    case NoiseSpec::Family::Laplacian:
        config.noise.snr_db -= 20.0 * std::log10(multiplier);
        break;
    case NoiseSpec::Family::Uniform:
        for (auto& hw : config.noise.uniform_halfwidth) hw *= multiplier;
        break;
    }
    config.noise.w_Tm_max *= multiplier;
    return config;
}

SweepResult sweep(const ScenarioConfig& cfg, const std::vector<double>& scales,
                  int replicas, unsigned threads) {
    if (replicas < 1) throw ConfigError("sweep: replicas must be >= 1");
    if (scales.empty()) throw ConfigError("sweep: at least one multiplier required");
    cfg.validate();

    const std::uint64_t master =
        derive_seed(cfg.noise.seed, cfg.excitation.seed, 0x73777065ULL);

    SweepResult result;
    result.scales = scales;
    result.replicas = replicas;
    result.cells.resize(scales.size() * static_cast<std::size_t>(replicas));

    auto run_cell = [&](std::size_t idx) {
        const std::size_t si = idx / static_cast<std::size_t>(replicas);
        const int ri = static_cast<int>(idx % static_cast<std::size_t>(replicas));
        const std::uint64_t cell_seed = derive_seed(master, si, static_cast<std::uint64_t>(ri));

        ScenarioConfig c = with_noise_scale(cfg, scales[si]);
        c.noise.seed = derive_seed(cell_seed, 0x6eULL);
        c.excitation.seed = derive_seed(cell_seed, 0x65ULL);

        SweepCell cell;
        cell.scale = scales[si];
        cell.replica = ri;
        cell.seed = cell_seed;
        try {
            const RunOutcome oc = execute(c);
            cell.diverged = oc.diverged;
            cell.fault_time = oc.fault_time;
            cell.sup_err = oc.bounds.sup_err;
            cell.w_x1_max = oc.bounds.w_x1_max;
            cell.w_x3_max = oc.bounds.w_x3_max;
            cell.pe_satisfied = oc.pe.pe_satisfied;
        } catch (const SimulationFault& e) {
            cell.diverged = true;
            cell.fault_time = e.t_fault;
        }
        result.cells[idx] = cell;
    };

    const std::size_t total = result.cells.size();
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, total));
    if (workers == 1) {
        for (std::size_t i = 0; i < total; ++i) run_cell(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= total) return;
                    run_cell(i);
                }
            });
        for (auto& th : pool) th.join();
    }

    CsvWriter csv({"scale", "replica", "seed", "diverged", "fault_time", "sup_x1", "sup_x2",
                   "sup_x3", "sup_theta1", "sup_theta2", "w_x1_max", "w_x3_max",
                   "pe_satisfied"});
    for (const auto& cell : result.cells) {
        csv.begin_row();
        csv.field(cell.scale);
        csv.field(static_cast<double>(cell.replica));
        csv.field(hash_hex(cell.seed));
        csv.field(cell.diverged ? "1" : "0");
        csv.field(cell.fault_time);
        for (double v : cell.sup_err) csv.field(v);
        csv.field(cell.w_x1_max);
        csv.field(cell.w_x3_max);
        csv.field(cell.pe_satisfied ? "1" : "0");
    }
    result.csv = csv.str();
    return result;
}

} // namespace sgest
