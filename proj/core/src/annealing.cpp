#include <exmig/annealing.hpp>
#include <exmig/errors.hpp>

#include <algorithm>
#include <cmath>

namespace exmig {

void AnnealingParams::validate() const
{
    if (!(initial_temperature > 0.0))
        throw ConfigError("annealing.initial_temperature must be positive");
    if (!(cooling_factor > 0.0 && cooling_factor < 1.0))
        throw ConfigError("annealing.cooling_factor must lie in (0, 1)");
    if (!(min_temperature > 0.0))
        throw ConfigError("annealing.min_temperature must be positive");
    if (max_depth < 1)
        throw ConfigError("annealing.max_depth must be at least 1");
    if (penalty < 0.0)
        throw ConfigError("annealing.penalty must be non-negative");
    if (combo_top_k < 2)
        throw ConfigError("annealing.combo_top_k must be at least 2");
}

std::string_view to_string(AnnealingState::Termination termination)
{
    switch (termination) {
    case AnnealingState::Termination::None: return "none";
    case AnnealingState::Termination::TemperatureFloor: return "temperature_floor";
    case AnnealingState::Termination::Timeout: return "timeout";
    case AnnealingState::Termination::Exhausted: return "exhausted";
    }
    return "none";
}

namespace {

std::vector<const ScoredDiff*> ranked(const std::vector<ScoredDiff>& atomic)
{
    std::vector<const ScoredDiff*> order;
    order.reserve(atomic.size());
    for (const auto& d : atomic)
        order.push_back(&d);
    std::stable_sort(order.begin(), order.end(),
                     [](const ScoredDiff* a, const ScoredDiff* b) { return a->score > b->score; });
    return order;
}

ScoredDiff make_combo(const ScoredDiff& a, const ScoredDiff& b)
{
    const bool a_first = a.score >= b.score;
    const ScoredDiff& hi = a_first ? a : b;
    const ScoredDiff& lo = a_first ? b : a;
    ScoredDiff combo;
    combo.hunk_ids = {hi.hunk_ids.front(), lo.hunk_ids.front()};
    combo.score = (a.score + b.score) / 2.0;
    combo.origin = DiffOrigin::Combo;
    return combo;
}

} // namespace

std::vector<ScoredDiff> build_combos(const std::vector<ScoredDiff>& atomic, int k)
{
    std::vector<ScoredDiff> out;
    if (atomic.size() < 2 || k < 2)
        return out;
    const auto order = ranked(atomic);
    const std::size_t top = std::min<std::size_t>(order.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < top; ++i)
        for (std::size_t j = i + 1; j < top; ++j)
            out.push_back(make_combo(*order[i], *order[j]));
    return out;
}

std::vector<double> softmax(const std::vector<double>& scores, double temperature)
{
    std::vector<double> p(scores.size());
    if (scores.empty())
        return p;
    const double top = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        p[i] = std::exp((scores[i] - top) / temperature);
        total += p[i];
    }
    for (auto& x : p)
        x /= total;
    return p;
}

int exploration_depth(double temperature, double initial_temperature, int max_depth)
{
    const double raw = static_cast<double>(max_depth) * (1.0 - temperature / initial_temperature);
    const int depth = 1 + static_cast<int>(std::floor(raw + 1e-9));
    return std::clamp(depth, 1, max_depth);
}

std::vector<ScoredDiff> merge_atomic(const std::vector<ScoredDiff>& causing, const std::vector<ScoredDiff>& supporting)
{
    std::vector<ScoredDiff> out;
    std::map<std::string, std::size_t> at;
    for (const auto* list : {&causing, &supporting}) {
        for (const auto& d : *list) {
            auto [it, inserted] = at.emplace(d.key(), out.size());
            if (inserted)
                out.push_back(d);
            else if (d.score > out[it->second].score)
                out[it->second] = d;
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const ScoredDiff& a, const ScoredDiff& b) { return a.score > b.score; });
    return out;
}

// ---------------------------------------------------------------------------

AnnealingState::AnnealingState(const AnnealingParams& params, std::vector<ScoredDiff> atomic, std::uint64_t seed)
    : m_params(params)
    , m_temperature(params.initial_temperature)
    , m_atomic(std::move(atomic))
    , m_rng(seed)
{
    m_params.validate();
    if (m_params.no_annealing && !m_params.no_combining)
        for (const auto& c : build_combos(m_atomic, m_params.combo_top_k))
            m_frozen_combos.insert(c.key());
    rebuild_combos();
}

void AnnealingState::rebuild_combos()
{
    m_combos.clear();
    if (m_params.no_combining)
        return;

    std::vector<ScoredDiff> fresh;
    if (m_params.no_annealing) {
        // Fixed candidate set: rescoring can only lower scores, so the
        // best-first order stays non-increasing.
        for (const auto& c : build_combos(m_atomic, static_cast<int>(m_atomic.size())))
            if (m_frozen_combos.contains(c.key()))
                fresh.push_back(c);
    } else {
        fresh = build_combos(m_atomic, m_params.combo_top_k);
    }
    for (auto& c : fresh) {
        const auto key = c.key();
        if (auto it = m_combo_offsets.find(key); it != m_combo_offsets.end())
            c.score = std::max(0.0, c.score - it->second);
        if (auto it = m_combo_penalties.find(key); it != m_combo_penalties.end())
            c.penalty_count = it->second;
        m_combos.push_back(std::move(c));
    }
}

std::vector<ScoredDiff> AnnealingState::pool() const
{
    std::vector<ScoredDiff> out = m_atomic;
    out.insert(out.end(), m_combos.begin(), m_combos.end());
    return out;
}

std::vector<std::pair<ScoredDiff, double>> AnnealingState::distribution() const
{
    std::vector<std::pair<ScoredDiff, double>> out;
    for (const auto& d : pool())
        if (!m_tried.contains(d.key()))
            out.emplace_back(d, 0.0);
    if (out.empty())
        return out;
    if (m_params.no_annealing) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < out.size(); ++i)
            if (out[i].first.score > out[best].first.score)
                best = i;
        out[best].second = 1.0;
        return out;
    }
    std::vector<double> scores;
    for (const auto& [d, p] : out)
        scores.push_back(d.score);
    const auto probs = softmax(scores, m_temperature);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i].second = probs[i];
    return out;
}

double AnnealingState::uniform01()
{
    return static_cast<double>(m_rng() >> 11) * 0x1.0p-53;
}

std::optional<AnnealingState::Selection> AnnealingState::select()
{
    const auto dist = distribution();
    if (dist.empty())
        return std::nullopt;

    std::size_t chosen = dist.size() - 1;
    if (m_params.no_annealing) {
        for (std::size_t i = 0; i < dist.size(); ++i)
            if (dist[i].second == 1.0) {
                chosen = i;
                break;
            }
    } else {
        const double u = uniform01();
        double cumulative = 0.0;
        for (std::size_t i = 0; i < dist.size(); ++i) {
            cumulative += dist[i].second;
            if (u < cumulative) {
                chosen = i;
                break;
            }
        }
    }
    m_tried.insert(dist[chosen].first.key());
    return Selection{dist[chosen].first, dist[chosen].second, dist.size()};
}

void AnnealingState::penalize_and_cool(const ScoredDiff& failed)
{
    const auto key = failed.key();
    if (failed.is_combo()) {
        m_combo_offsets[key] += m_params.penalty;
        ++m_combo_penalties[key];
    } else {
        for (auto& d : m_atomic) {
            if (d.key() == key) {
                d.score = std::max(0.0, d.score - m_params.penalty);
                ++d.penalty_count;
                break;
            }
        }
    }
    m_temperature *= m_params.cooling_factor;
    rebuild_combos();
}

int AnnealingState::exploration_depth() const
{
    return exmig::exploration_depth(m_temperature, m_params.initial_temperature, m_params.max_depth);
}

bool AnnealingState::exhausted() const
{
    const auto p = pool();
    return std::all_of(p.begin(), p.end(), [&](const ScoredDiff& d) { return m_tried.contains(d.key()); });
}

AnnealingState::Termination AnnealingState::termination(double elapsed_s, double budget_s) const
{
    if (m_temperature < m_params.min_temperature)
        return Termination::TemperatureFloor;
    if (elapsed_s >= budget_s)
        return Termination::Timeout;
    if (exhausted())
        return Termination::Exhausted;
    return Termination::None;
}

} // namespace exmig
