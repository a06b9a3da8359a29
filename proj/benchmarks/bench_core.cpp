#include <benchmark/benchmark.h>

#include "sgest/adaptive_observer.hpp"
#include "sgest/algebraic_observer.hpp"
#include "sgest/network.hpp"
#include "sgest/pipeline.hpp"
#include "sgest/scenario.hpp"

#include <filesystem>

namespace {

using namespace sgest;

GeneratorParams bench_params() {
    GeneratorParams p;
    p.x_d = 1.8;
    p.x_dp = 0.3;
    p.x_q = 1.7;
    p.R_s = 0.003;
    p.H = 5.0;
    p.D = 0.2;
    return p;
}

ExciterParams bench_exciter() {
    ExciterParams e;
    e.K_A = 100.0;
    e.T_A = 0.05;
    e.V_ref = 1.04;
    return e;
}

void BM_TerminalSolve(benchmark::State& state) {
    const GeneratorParams p = bench_params();
    const NetworkModel net = SmibNetwork{};
    GeneratorState s;
    s.delta = 0.55;
    s.eqp = 1.03;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_terminal(s, net, p, 0.0));
    }
}
BENCHMARK(BM_TerminalSolve);

void BM_IntegrateStep(benchmark::State& state) {
    const GeneratorParams p = bench_params();
    SmibNetwork smib;
    const auto eq = init_equilibrium(smib, p, bench_exciter(), 0.7, 1.02);
    auto ep = bench_exciter();
    ep.V_ref = eq.V_ref;
    const NetworkModel net = smib;
    GeneratorState s = eq.state;
    double t = 0.0;
    for (auto _ : state) {
        s = integrate_step(s, net, p, ep, eq.T_m, t, 1e-3);
        t += 1e-3;
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_IntegrateStep);

void BM_AlgebraicEstimate(benchmark::State& state) {
    const GeneratorParams p = bench_params();
    const NetworkModel net = SmibNetwork{};
    GeneratorState s;
    s.delta = 0.55;
    s.eqp = 1.03;
    const auto q = solve_terminal(s, net, p, 0.0);
    PmuSample sample;
    sample.y1 = q.V_t;
    sample.y2 = q.theta_t;
    sample.y3 = q.I_t;
    sample.y4 = q.phi_t;
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate(sample, p));
    }
}
BENCHMARK(BM_AlgebraicEstimate);

void BM_EstimatorStep(benchmark::State& state) {
    EstimatorConfig cfg;
    cfg.gamma1 = cfg.gamma2 = 1e6;
    AdaptiveObserver obs(cfg, 0.02);
    double t = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(obs.step(t, 0.5 + 1e-4 * t, 0.01));
        t += 0.02;
    }
}
BENCHMARK(BM_EstimatorStep);

void BM_PipelinePerSimulatedSecond(benchmark::State& state) {
    auto cfg = load_scenario(std::filesystem::path(SGEST_CONFIG_DIR) / "gauss45db.cfg");
    cfg.sim.duration = 10.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(execute(cfg));
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * cfg.sim.duration));
}
BENCHMARK(BM_PipelinePerSimulatedSecond);

} // namespace

BENCHMARK_MAIN();
