#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dgq/dataset.hpp"
#include "dgq/envs.hpp"
#include "dgq/mdp.hpp"
#include "dgq/qlearn.hpp"
#include "dgq/rng.hpp"

using namespace dgq;

namespace {

EnvSpec bench_env(int S, int A) {
    std::mt19937_64 rng = make_rng(1, 990);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    EnvSpec env;
    env.num_states = S;
    env.num_actions = A;
    env.num_categories = 1;
    env.discount = 0.5;
    env.terminal.assign(static_cast<size_t>(S), 0);
    env.reward.assign(static_cast<size_t>(S), std::vector<double>(static_cast<size_t>(A)));
    env.transition.assign(static_cast<size_t>(S),
                          std::vector<std::vector<double>>(
                              static_cast<size_t>(A), std::vector<double>(static_cast<size_t>(S))));
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            env.reward[s][a] = unit(rng);
            double sum = 0.0;
            for (int sp = 0; sp < S; ++sp) sum += env.transition[s][a][static_cast<size_t>(sp)] = 0.1 + unit(rng);
            for (int sp = 0; sp < S; ++sp) env.transition[s][a][static_cast<size_t>(sp)] /= sum;
        }
    return env;
}

void bm_exact_policy_evaluation(benchmark::State& state) {
    int S = static_cast<int>(state.range(0));
    EnvSpec env = bench_env(S, 20);
    Policy pi = Policy::uniform(S, 20);
    for (auto _ : state) {
        ValueTable v = exact_policy_evaluation(env, pi, 1e-10);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(bm_exact_policy_evaluation)->Arg(10)->Arg(20)->Arg(50);

void bm_induced_argmax_policy(benchmark::State& state) {
    int A = static_cast<int>(state.range(0));
    EnvSpec env = bench_env(10, A);
    Policy pi = Policy::uniform(10, A);
    ActionValueTable q = exact_action_values(env, pi, 1e-10);
    for (auto _ : state) {
        Policy out = induced_argmax_policy(pi, q, 16);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(bm_induced_argmax_policy)->Arg(10)->Arg(50)->Arg(200);

void bm_td_step(benchmark::State& state) {
    EnvSpec env = bench_env(20, 20);
    QFunction q = QFunction::zeros(20, 20, false);
    FitConfig cfg;
    std::mt19937_64 rng = make_rng(2, 991);
    std::uniform_int_distribution<int> pick(0, 19);
    std::vector<Transition> batch(static_cast<size_t>(state.range(0)));
    for (auto& t : batch) {
        t.s = pick(rng);
        t.action = pick(rng);
        t.r = 1.0;
        t.s_next = pick(rng);
        t.action_next = pick(rng);
    }
    for (auto _ : state) benchmark::DoNotOptimize(td_step(q, batch, cfg));
}
BENCHMARK(bm_td_step)->Arg(32)->Arg(256)->Arg(2048);

void bm_value_iteration(benchmark::State& state) {
    int S = static_cast<int>(state.range(0));
    EnvSpec env = bench_env(S, 20);
    for (auto _ : state) {
        auto out = value_iteration(env, 1e-10);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(bm_value_iteration)->Arg(10)->Arg(20)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
