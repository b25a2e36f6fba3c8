// Serial reference vs OpenMP element loop for the equilibrium residual and tangent.
#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>

#include "fatigue/staggered.hpp"

using namespace fatigue;

namespace {

struct Setup {
    FeModel fe;
    FieldSolution n;
    FeModel::Iterate it;

    Setup(double h, Exec exec) : fe(make_model(h, exec)), n(fe.initial()), it(fe.begin_step(n, 0.0)) {
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> u(-1e-3, 1e-3), a(0.0, 0.5);
        for (Eigen::Index i = 0; i < it.u.size(); ++i) it.u[i] = u(rng);
        for (Eigen::Index i = 0; i < it.alpha.size(); ++i) it.alpha[i] = a(rng);
    }

    static FeModel make_model(double h, Exec exec) {
        NotchGeometry g;
        g.h = h;
        MaterialSpec m;
        m.K = 71659.46;
        m.mu = 27297;
        m.surfaces = {{345, 2500, 0}};
        m.beta = 0.4;
        LoadSchedule ls;
        ls.steps_per_cycle = 8;
        ls.fixed = {{"bottom", {true, true}}};
        SolverConfig sc;
        sc.exec = exec;
        return FeModel(generate_double_notch(g), m, ls, sc);
    }
};

void assemble(benchmark::State& state, Exec exec) {
    const double h = 0.09 / static_cast<double>(state.range(0));
    Setup s(h, exec);
    Eigen::VectorXd R;
    SpMat K;
    for (auto _ : state) {
        s.fe.assemble_equilibrium(s.it, R, &K);
        benchmark::DoNotOptimize(R.data());
    }
    state.counters["elements"] = s.fe.mesh().n_elements();
    state.counters["threads"] = exec == Exec::Parallel ? omp_get_max_threads() : 1;
}

void BM_AssembleSerial(benchmark::State& state) { assemble(state, Exec::Serial); }
void BM_AssembleParallel(benchmark::State& state) { assemble(state, Exec::Parallel); }

}  // namespace

// Argument n sets the notched-mesh element size h = 0.09 / n.
BENCHMARK(BM_AssembleSerial)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
