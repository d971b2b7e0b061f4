#pragma once

#include <exmig/context.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace exmig {

struct AnnealingParams {
    double initial_temperature = 10.0;
    double cooling_factor = 0.8;
    double min_temperature = 1.0;
    int max_depth = 3;
    double penalty = 2.0;
    int combo_top_k = 5;
    bool no_annealing = false;  // pick the best untried candidate instead of sampling
    bool no_combining = false;  // never synthesize combo candidates
    std::size_t fallback_size = 10;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// All unordered pairs from the top-k atomic diffs, scored by the constituents' mean.
std::vector<ScoredDiff> build_combos(const std::vector<ScoredDiff>& atomic, int k);

/// exp(s/T) / sum exp(s'/T), computed with the max score subtracted.
std::vector<double> softmax(const std::vector<double>& scores, double temperature);

/// min(Dmax, 1 + floor(Dmax * (1 - T/T0))).
int exploration_depth(double temperature, double initial_temperature, int max_depth);

/// Merge causing and supporting lists into one atomic pool keyed by hunk id.
/// A hunk in both lists keeps the entry with the higher score.
std::vector<ScoredDiff> merge_atomic(const std::vector<ScoredDiff>& causing, const std::vector<ScoredDiff>& supporting);

class AnnealingState {
public:
    struct Selection {
        ScoredDiff diff;
        double probability = 1.0;
        std::size_t candidates = 0; // untried candidates at draw time
    };

    enum class Termination { None, TemperatureFloor, Timeout, Exhausted };

    AnnealingState(const AnnealingParams& params, std::vector<ScoredDiff> atomic, std::uint64_t seed);

    /// Draw one untried candidate; nullopt once every candidate has been tried.
    std::optional<Selection> select();

    /// Penalize a failed candidate, cool, and rebuild the combos.
    void penalize_and_cool(const ScoredDiff& failed);

    int exploration_depth() const;
    Termination termination(double elapsed_s, double budget_s) const;
    bool should_terminate(double elapsed_s, double budget_s) const
    {
        return termination(elapsed_s, budget_s) != Termination::None;
    }
    bool exhausted() const;

    double temperature() const { return m_temperature; }
    const AnnealingParams& params() const { return m_params; }
    const std::vector<ScoredDiff>& atomic() const { return m_atomic; }
    const std::vector<ScoredDiff>& combos() const { return m_combos; }
    /// Atomic candidates followed by combos.
    std::vector<ScoredDiff> pool() const;
    const std::set<std::string>& tried() const { return m_tried; }

    /// Untried candidates and their current selection probabilities.
    std::vector<std::pair<ScoredDiff, double>> distribution() const;

private:
    void rebuild_combos();
    double uniform01();

    AnnealingParams m_params;
    double m_temperature;
    std::vector<ScoredDiff> m_atomic;
    std::vector<ScoredDiff> m_combos;
    std::map<std::string, double> m_combo_offsets; // penalty carried by a combo across rebuilds
    std::map<std::string, int> m_combo_penalties;
    std::set<std::string> m_frozen_combos;        // combo identities when no_annealing is set
    std::set<std::string> m_tried;
    std::mt19937_64 m_rng;
};

std::string_view to_string(AnnealingState::Termination termination);

} // namespace exmig
