#include <exmig/annealing.hpp>

#include <benchmark/benchmark.h>

namespace {

std::vector<exmig::ScoredDiff> pool(int n)
{
    std::vector<exmig::ScoredDiff> out;
    for (int i = 0; i < n; ++i)
        out.push_back({{"h" + std::to_string(i)}, static_cast<double>(i % 11), exmig::DiffOrigin::Cause, 0});
    return out;
}

void BM_SelectAndCool(benchmark::State& state)
{
    const auto atomic = pool(static_cast<int>(state.range(0)));
    exmig::AnnealingParams params;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        exmig::AnnealingState st(params, atomic, ++seed);
        while (!st.should_terminate(0, 1e9)) {
            auto pick = st.select();
            if (!pick)
                break;
            st.penalize_and_cool(pick->diff);
        }
        benchmark::DoNotOptimize(st.temperature());
    }
}
BENCHMARK(BM_SelectAndCool)->Arg(4)->Arg(16)->Arg(64);

void BM_Softmax(benchmark::State& state)
{
    std::vector<double> scores;
    for (int i = 0; i < state.range(0); ++i)
        scores.push_back(i % 11);
    for (auto _ : state)
        benchmark::DoNotOptimize(exmig::softmax(scores, 3.2));
}
BENCHMARK(BM_Softmax)->Arg(8)->Arg(64);

} // namespace
