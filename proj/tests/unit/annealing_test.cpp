#include <exmig/annealing.hpp>
#include <exmig/errors.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace exmig;

namespace {

std::vector<ScoredDiff> atomic(std::initializer_list<double> scores)
{
    std::vector<ScoredDiff> out;
    int i = 0;
    for (double s : scores)
        out.push_back(ScoredDiff{{"h" + std::to_string(i++)}, s, DiffOrigin::Cause, 0});
    return out;
}

AnnealingParams no_combos()
{
    AnnealingParams p;
    p.no_combining = true;
    return p;
}

} // namespace

TEST(Softmax, ClosedForm)
{
    const auto p = softmax({10, 5, 0}, 10.0);
    const double z = std::exp(1.0) + std::exp(0.5) + 1.0;
    EXPECT_NEAR(p[0], std::exp(1.0) / z, 1e-12);
    EXPECT_NEAR(p[1], std::exp(0.5) / z, 1e-12);
    EXPECT_NEAR(p[2], 1.0 / z, 1e-12);
    EXPECT_TRUE(softmax({}, 1.0).empty());

    // Large scores must not overflow.
    const auto big = softmax({5000, 4999}, 0.5);
    EXPECT_NEAR(big[0] + big[1], 1.0, 1e-12);
    EXPECT_GT(big[0], big[1]);
}

TEST(Exploration, DepthTable)
{
    EXPECT_EQ(exploration_depth(10.0, 10.0, 3), 1);
    EXPECT_EQ(exploration_depth(8.0, 10.0, 3), 1);
    EXPECT_EQ(exploration_depth(6.4, 10.0, 3), 2);
    EXPECT_EQ(exploration_depth(10.0 / 3.0, 10.0, 3), 3);
    EXPECT_EQ(exploration_depth(1.0, 10.0, 3), 3);
    EXPECT_EQ(exploration_depth(0.01, 10.0, 3), 3);
    EXPECT_EQ(exploration_depth(5.0, 10.0, 1), 1);
}

TEST(Combos, AllPairsOfTopK)
{
    const auto combos = build_combos(atomic({1, 9, 5, 7, 3, 8}), 4);
    ASSERT_EQ(combos.size(), 6u); // C(4, 2)
    for (const auto& c : combos) {
        EXPECT_EQ(c.origin, DiffOrigin::Combo);
        EXPECT_TRUE(c.is_combo());
        EXPECT_NE(c.hunk_ids[0], "h0");
        EXPECT_NE(c.hunk_ids[1], "h0");
        EXPECT_NE(c.hunk_ids[0], "h4");
    }
    EXPECT_EQ(combos[0].hunk_ids, (std::vector<std::string>{"h1", "h5"}));
    EXPECT_DOUBLE_EQ(combos[0].score, 8.5);
    EXPECT_TRUE(build_combos(atomic({4}), 5).empty());
    EXPECT_EQ(build_combos(atomic({1, 2, 3}), 5).size(), 3u);
}

TEST(Combos, KeyIsOrderIndependent)
{
    ScoredDiff a{{"x", "y"}, 1, DiffOrigin::Combo, 0};
    ScoredDiff b{{"y", "x"}, 1, DiffOrigin::Combo, 0};
    EXPECT_EQ(a.key(), b.key());
}

TEST(MergeAtomic, HigherScoreWinsTiesKeepCause)
{
    std::vector<ScoredDiff> causing{{{"a"}, 10, DiffOrigin::Cause, 0}, {{"b"}, 5, DiffOrigin::Cause, 0}};
    std::vector<ScoredDiff> supporting{{{"b"}, 7, DiffOrigin::Support, 0},
                                       {{"a"}, 10, DiffOrigin::Support, 0},
                                       {{"c"}, 6, DiffOrigin::Support, 0}};
    const auto merged = merge_atomic(causing, supporting);
    ASSERT_EQ(merged.size(), 3u);
    EXPECT_EQ(merged[0].hunk_ids[0], "a");
    EXPECT_EQ(merged[0].origin, DiffOrigin::Cause);
    EXPECT_EQ(merged[1].hunk_ids[0], "b");
    EXPECT_EQ(merged[1].origin, DiffOrigin::Support);
    EXPECT_EQ(merged[1].score, 7);
    EXPECT_EQ(merged[2].hunk_ids[0], "c");
}

TEST(Params, Validation)
{
    AnnealingParams p;
    EXPECT_NO_THROW(p.validate());
    p.cooling_factor = 1.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.initial_temperature = 0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.max_depth = 0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.combo_top_k = 1;
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Annealing, ReachesFloorAfterElevenPenalties)
{
    std::vector<ScoredDiff> many;
    for (int i = 0; i < 20; ++i)
        many.push_back(ScoredDiff{{"h" + std::to_string(i)}, 10.0 - i * 0.1, DiffOrigin::Cause, 0});
    AnnealingState state(no_combos(), many, 7);
    int attempts = 0;
    double last = state.temperature();
    while (!state.should_terminate(0.0, 100.0)) {
        auto sel = state.select();
        ASSERT_TRUE(sel);
        state.penalize_and_cool(sel->diff);
        EXPECT_LT(state.temperature(), last);
        last = state.temperature();
        ++attempts;
    }
    EXPECT_EQ(attempts, 11);
    EXPECT_EQ(state.termination(0.0, 100.0), AnnealingState::Termination::TemperatureFloor);
}

TEST(Annealing, TerminationOrder)
{
    AnnealingState state(no_combos(), atomic({3}), 1);
    EXPECT_EQ(state.termination(5.0, 5.0), AnnealingState::Termination::Timeout);
    EXPECT_EQ(state.termination(0.0, 5.0), AnnealingState::Termination::None);
    auto sel = state.select();
    ASSERT_TRUE(sel);
    EXPECT_EQ(sel->candidates, 1u);
    EXPECT_DOUBLE_EQ(sel->probability, 1.0);
    EXPECT_TRUE(state.exhausted());
    EXPECT_FALSE(state.select());
    EXPECT_EQ(state.termination(0.0, 5.0), AnnealingState::Termination::Exhausted);
}

TEST(Annealing, PenaltyLowersScoreAndCools)
{
    AnnealingState state(no_combos(), atomic({5, 1}), 3);
    state.penalize_and_cool(state.atomic()[0]);
    EXPECT_DOUBLE_EQ(state.atomic()[0].score, 3.0);
    EXPECT_EQ(state.atomic()[0].penalty_count, 1);
    EXPECT_DOUBLE_EQ(state.temperature(), 8.0);
    state.penalize_and_cool(state.atomic()[1]);
    EXPECT_DOUBLE_EQ(state.atomic()[1].score, 0.0); // clamped
    EXPECT_EQ(state.exploration_depth(), 2);
}

TEST(Annealing, SeededSelectionIsDeterministic)
{
    auto run = [](std::uint64_t seed) {
        AnnealingState state(AnnealingParams{}, atomic({9, 8, 7, 6, 5, 4}), seed);
        std::vector<std::string> keys;
        while (auto sel = state.select()) {
            keys.push_back(sel->diff.key());
            state.penalize_and_cool(sel->diff);
            if (state.should_terminate(0.0, 1.0))
                break;
        }
        return keys;
    };
    EXPECT_EQ(run(7), run(7));
    EXPECT_NE(run(7), run(8));
}

TEST(Annealing, SamplingFrequenciesMatchSoftmax)
{
    const auto expected = softmax({10, 5, 0}, 10.0);
    std::array<int, 3> counts{};
    const int draws = 20000;
    for (int i = 0; i < draws; ++i) {
        AnnealingState state(no_combos(), atomic({10, 5, 0}), 1000 + i);
        const auto sel = state.select();
        ++counts[sel->diff.hunk_ids[0][1] - '0'];
    }
    for (int k = 0; k < 3; ++k)
        EXPECT_NEAR(static_cast<double>(counts[k]) / draws, expected[k], 0.015);
}

TEST(Annealing, CombosAreRebuiltFromPenalizedScores)
{
    AnnealingParams p;
    p.combo_top_k = 2;
    AnnealingState state(p, atomic({10, 9, 1}), 5);
    ASSERT_EQ(state.combos().size(), 1u);
    EXPECT_EQ(state.combos()[0].key(), "h0+h1");
    // Five penalties drop h0 below h2.
    state.penalize_and_cool(state.atomic()[0]);
    state.penalize_and_cool(state.atomic()[0]);
    state.penalize_and_cool(state.atomic()[0]);
    state.penalize_and_cool(state.atomic()[0]);
    state.penalize_and_cool(state.atomic()[0]);
    ASSERT_EQ(state.combos().size(), 1u);
    EXPECT_EQ(state.combos()[0].key(), "h1+h2");

    // A failed combo carries its penalty across rebuilds.
    const auto combo = state.combos()[0];
    state.penalize_and_cool(combo);
    EXPECT_DOUBLE_EQ(state.combos()[0].score, combo.score - p.penalty);
    EXPECT_EQ(state.combos()[0].penalty_count, 1);
}

TEST(Annealing, NoAnnealingPicksBestAndNeverIncreases)
{
    AnnealingParams p;
    p.no_annealing = true;
    AnnealingState state(p, atomic({10, 7, 7, 4, 2}), 11);
    const std::size_t pool = state.pool().size();
    double last = 1e9;
    std::size_t picks = 0;
    while (auto sel = state.select()) {
        EXPECT_LE(sel->diff.score, last);
        EXPECT_DOUBLE_EQ(sel->probability, 1.0);
        last = sel->diff.score;
        state.penalize_and_cool(sel->diff);
        ++picks;
    }
    EXPECT_EQ(picks, pool);
}

TEST(Annealing, NoCombiningHasNoCombos)
{
    AnnealingState state(no_combos(), atomic({10, 9, 8}), 1);
    EXPECT_TRUE(state.combos().empty());
    while (auto sel = state.select()) {
        EXPECT_FALSE(sel->diff.is_combo());
        state.penalize_and_cool(sel->diff);
    }
}
