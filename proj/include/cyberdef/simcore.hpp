#ifndef CYBERDEF_SIMCORE_HPP
#define CYBERDEF_SIMCORE_HPP

// Discrete-tick attack/defence engine.
//
// One tick runs these phases in order, drawing from the world RNG only in
// the order listed:
//   1. cooldowns tick down; idle threats acquire a target (phishing picks a
//      fresh target every tick)
//   2. every engaged threat works on its target, ascending threat id
//   3. malware-infected nodes may spread to one healthy neighbour
//   4. the control centre spends its response budget
//   5. adaptive defences are adjusted when due
//   6. metrics are recorded
//   7. tick += 1

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "cyberdef/error.hpp"
#include "cyberdef/random.hpp"
#include "cyberdef/scenario_spec.hpp"

namespace cyberdef::sim {

inline constexpr int min_defense = 1;
inline constexpr int max_defense = 5;
inline constexpr int min_threat_level = 1;
inline constexpr int max_threat_level = 3;
inline constexpr int topology_degree = 4;

enum class HealthState { healthy, infected };
enum class ThreatKind { malware, phishing, ddos };

inline const char* to_string(ThreatKind k) {
    switch (k) {
    case ThreatKind::malware: return "malware";
    case ThreatKind::phishing: return "phishing";
    case ThreatKind::ddos: return "ddos";
    }
    return "?";
}

struct Node {
    int id = 0;
    int defense_level = min_defense;
    HealthState state = HealthState::healthy;
    std::optional<int> infected_since;
    std::optional<ThreatKind> infected_by; // drives lateral spread
    std::vector<int> neighbors;            // sorted ascending
    double x = 0.0;
    double y = 0.0;

    bool healthy() const { return state == HealthState::healthy; }
    bool operator==(const Node&) const = default;
};

struct Threat {
    int id = 0;
    ThreatKind kind = ThreatKind::malware;
    int level = min_threat_level;
    std::optional<int> target;
    int progress = 0;
    int cooldown = 0;

    bool engaged() const { return cooldown == 0 && target.has_value(); }
    bool operator==(const Threat&) const = default;
};

struct ControlCentre {
    int response_rate = 0;
    int actions_spent_this_tick = 0;

    bool operator==(const ControlCentre&) const = default;
};

struct WorldState {
    int tick = 0;
    std::vector<Node> nodes;
    std::vector<Threat> threats;
    ControlCentre control;
    Rng rng;
    bool adaptive = false;
    std::vector<double> health_history;

    bool operator==(const WorldState&) const = default;
};

struct TickMetrics {
    int tick = 0;
    int infected = 0;
    int healthy = 0;
    int active_threats = 0;
    double mean_defense = 0.0;
    double health = 0.0;

    bool operator==(const TickMetrics&) const = default;
};

struct RunSummary {
    int node_count = 0;
    int peak_infected = 0;
    int final_infected = 0;
    double mean_health = 1.0;
    std::optional<int> time_to_containment;

    double peak_fraction() const { return node_count ? double(peak_infected) / node_count : 0.0; }
    double final_fraction() const { return node_count ? double(final_infected) / node_count : 0.0; }

    bool operator==(const RunSummary&) const = default;
};

struct SimResult {
    std::vector<TickMetrics> series;
    RunSummary summary;
};

// ---------------------------------------------------------------------------
// Topology

namespace detail {

inline double dist2(const Node& a, const Node& b) {
    const double dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}

inline void link(std::vector<Node>& nodes, int a, int b) {
    auto add = [](std::vector<int>& v, int x) {
        auto it = std::lower_bound(v.begin(), v.end(), x);
        if (it == v.end() || *it != x) v.insert(it, x);
    };
    add(nodes[a].neighbors, b);
    add(nodes[b].neighbors, a);
}

inline std::vector<int> components(const std::vector<Node>& nodes) {
    std::vector<int> comp(nodes.size(), -1);
    int next = 0;
    for (std::size_t s = 0; s < nodes.size(); ++s) {
        if (comp[s] >= 0) continue;
        std::vector<int> stack{static_cast<int>(s)};
        comp[s] = next;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v : nodes[u].neighbors)
                if (comp[v] < 0) {
                    comp[v] = next;
                    stack.push_back(v);
                }
        }
        ++next;
    }
    return comp;
}

} // namespace detail

/// Links each node to its `degree` nearest neighbours (symmetric union),
/// then bridges components by repeatedly joining the closest node pair
/// between node 0's component and the rest, until connected.
inline void build_topology(std::vector<Node>& nodes, int degree = topology_degree) {
    const int n = static_cast<int>(nodes.size());
    for (auto& nd : nodes) nd.neighbors.clear();
    for (int i = 0; i < n; ++i) {
        std::vector<int> order;
        order.reserve(n - 1);
        for (int j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double da = detail::dist2(nodes[i], nodes[a]), db = detail::dist2(nodes[i], nodes[b]);
            return da != db ? da < db : a < b;
        });
        const int k = std::min<int>(degree, static_cast<int>(order.size()));
        for (int m = 0; m < k; ++m) detail::link(nodes, i, order[m]);
    }
    for (;;) {
        const auto comp = detail::components(nodes);
        if (std::all_of(comp.begin(), comp.end(), [](int c) { return c == 0; })) break;
        int best_a = -1, best_b = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int a = 0; a < n; ++a) {
            if (comp[a] != 0) continue;
            for (int b = 0; b < n; ++b) {
                if (comp[b] == 0) continue;
                const double d = detail::dist2(nodes[a], nodes[b]);
                if (d < best) {
                    best = d;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        detail::link(nodes, best_a, best_b);
    }
}

// ---------------------------------------------------------------------------
// Queries

inline int infected_count(const WorldState& w) {
    return static_cast<int>(std::count_if(w.nodes.begin(), w.nodes.end(), [](const Node& n) { return !n.healthy(); }));
}

inline double overall_health(const WorldState& w) {
    if (w.nodes.empty()) return 1.0;
    const int healthy = static_cast<int>(w.nodes.size()) - infected_count(w);
    return static_cast<double>(healthy) / static_cast<double>(w.nodes.size());
}

inline double mean_defense(const WorldState& w) {
    if (w.nodes.empty()) return 0.0;
    double s = 0.0;
    for (const auto& n : w.nodes) s += n.defense_level;
    return s / static_cast<double>(w.nodes.size());
}

inline int active_threat_count(const WorldState& w) {
    return static_cast<int>(std::count_if(w.threats.begin(), w.threats.end(), [](const Threat& t) { return t.engaged(); }));
}

/// Progress a threat must accumulate to compromise `node`. Phishing sees
/// only half the technical defence, rounded up.
inline int breach_threshold(ThreatKind kind, int defense_level, int breach_factor) {
    const int effective = kind == ThreatKind::phishing ? (defense_level + 1) / 2 : defense_level;
    return effective * breach_factor;
}

// ---------------------------------------------------------------------------
// Setup

inline WorldState init_world(const ScenarioSpec& spec, std::uint64_t seed) {
    validate(spec);
    WorldState w;
    w.rng = Rng(seed);
    w.adaptive = spec.adaptive();
    w.control.response_rate = spec.response_rate;

    w.nodes.resize(static_cast<std::size_t>(spec.node_count));
    for (int i = 0; i < spec.node_count; ++i) {
        auto& n = w.nodes[i];
        n.id = i;
        n.x = w.rng.unit();
        n.y = w.rng.unit();
    }
    build_topology(w.nodes);
    for (auto& n : w.nodes) {
        switch (spec.defense.kind) {
        case DefenseKind::uniform_random: n.defense_level = w.rng.uniform_int(min_defense, max_defense); break;
        case DefenseKind::fixed:
        case DefenseKind::adaptive: n.defense_level = spec.defense.level; break;
        }
    }
    w.threats.resize(static_cast<std::size_t>(spec.threat_count));
    for (int i = 0; i < spec.threat_count; ++i) {
        auto& t = w.threats[i];
        t.id = i;
        t.kind = static_cast<ThreatKind>(w.rng.uniform_int(0, 2));
        t.level = w.rng.uniform_int(min_threat_level, max_threat_level);
    }
    return w;
}

// ---------------------------------------------------------------------------
// Phases

struct AttackOutcome {
    int progress = 0;
    bool breached = false;
};

/// One tick of attack work by `threat` on `node` at time `tick`.
/// On breach the node is infected, and the threat resets and cools down.
inline AttackOutcome resolve_attack_step(Threat& threat, Node& node, const ScenarioSpec& spec, int tick) {
    threat.progress += threat.level;
    AttackOutcome out{threat.progress, false};
    if (threat.progress >= breach_threshold(threat.kind, node.defense_level, spec.breach_factor)) {
        out.breached = true;
        node.state = HealthState::infected;
        node.infected_since = tick;
        node.infected_by = threat.kind;
        threat.progress = 0;
        threat.target.reset();
        threat.cooldown = spec.respawn_delay;
    }
    return out;
}

namespace detail {

inline int pick_target(WorldState& w) {
    std::vector<int> healthy;
    for (const auto& n : w.nodes)
        if (n.healthy()) healthy.push_back(n.id);
    if (healthy.empty()) return static_cast<int>(w.rng.below(w.nodes.size()));
    return healthy[w.rng.below(healthy.size())];
}

} // namespace detail

/// Phase 1. Phishing keeps its accumulated progress when it moves on.
inline void acquire_targets(WorldState& w) {
    for (auto& t : w.threats) {
        if (t.cooldown > 0) --t.cooldown;
        if (t.cooldown > 0) continue;
        if (t.kind == ThreatKind::phishing || !t.target) t.target = detail::pick_target(w);
    }
}

/// Phase 2. Threats whose target is already infected hold position.
inline int run_attacks(WorldState& w, const ScenarioSpec& spec) {
    int breaches = 0;
    for (auto& t : w.threats) {
        if (!t.engaged()) continue;
        Node& n = w.nodes[*t.target];
        if (!n.healthy()) continue;
        if (resolve_attack_step(t, n, spec, w.tick).breached) ++breaches;
    }
    return breaches;
}

/// Phase 3. Sources are the malware-infected nodes at the start of the
/// phase; new infections this phase do not spread until next tick.
inline int spread_malware(WorldState& w, const ScenarioSpec& spec) {
    std::vector<int> sources;
    for (const auto& n : w.nodes)
        if (!n.healthy() && n.infected_by == ThreatKind::malware) sources.push_back(n.id);
    int spread = 0;
    for (int id : sources) {
        if (!w.rng.bernoulli(spec.spread_prob)) continue;
        std::vector<int> candidates;
        for (int nb : w.nodes[id].neighbors)
            if (w.nodes[nb].healthy()) candidates.push_back(nb);
        if (candidates.empty()) continue;
        Node& victim = w.nodes[candidates[w.rng.below(candidates.size())]];
        victim.state = HealthState::infected;
        victim.infected_since = w.tick;
        victim.infected_by = ThreatKind::malware;
        ++spread;
    }
    return spread;
}

struct ActionTally {
    int heals = 0;
    int neutralizations = 0;
};

/// Phase 4. Heal oldest infections first; only with no infection left does
/// the budget go to neutralizing the engaged threat with most progress.
inline ActionTally control_centre_act(WorldState& w, const ScenarioSpec& spec) {
    ActionTally tally;
    w.control.actions_spent_this_tick = 0;
    while (w.control.actions_spent_this_tick < w.control.response_rate) {
        Node* oldest = nullptr;
        for (auto& n : w.nodes) {
            if (n.healthy()) continue;
            if (!oldest || *n.infected_since < *oldest->infected_since) oldest = &n;
        }
        if (oldest) {
            oldest->state = HealthState::healthy;
            oldest->infected_since.reset();
            oldest->infected_by.reset();
            ++tally.heals;
            ++w.control.actions_spent_this_tick;
            continue;
        }
        Threat* top = nullptr;
        for (auto& t : w.threats) {
            if (!t.engaged()) continue;
            if (!top || t.progress > top->progress) top = &t;
        }
        if (!top) break;
        top->progress = 0;
        top->cooldown = spec.respawn_delay;
        top->target.reset();
        ++tally.neutralizations;
        ++w.control.actions_spent_this_tick;
    }
    return tally;
}

/// True when the adaptation check falls on the current tick.
inline bool adaptation_due(const WorldState& w, const AdaptationPolicy& p) {
    return (w.tick + 1) % p.adapt_interval == 0;
}

/// Phase 5. Raises every defence by one if health fell below the raise
/// threshold at any tick of the current interval; lowers by one if health
/// stayed above the lower threshold for the last `lower_dwell` ticks.
/// The window includes the current (not yet recorded) tick.
inline void adapt_defenses(WorldState& w, const AdaptationPolicy& p) {
    const double now = overall_health(w);
    const auto& h = w.health_history;

    double window_min = now;
    const std::size_t span = static_cast<std::size_t>(p.adapt_interval - 1);
    for (std::size_t i = h.size() > span ? h.size() - span : 0; i < h.size(); ++i)
        window_min = std::min(window_min, h[i]);

    int delta = 0;
    if (window_min < p.raise_threshold) {
        delta = 1;
    } else {
        const std::size_t need = static_cast<std::size_t>(p.lower_dwell - 1);
        bool calm = now > p.lower_threshold && h.size() >= need;
        for (std::size_t i = h.size() - std::min(need, h.size()); calm && i < h.size(); ++i)
            calm = h[i] > p.lower_threshold;
        if (calm) delta = -1;
    }
    if (delta == 0) return;
    for (auto& n : w.nodes) n.defense_level = std::clamp(n.defense_level + delta, min_defense, max_defense);
}

inline TickMetrics measure(const WorldState& w) {
    TickMetrics m;
    m.tick = w.tick;
    m.infected = infected_count(w);
    m.healthy = static_cast<int>(w.nodes.size()) - m.infected;
    m.active_threats = active_threat_count(w);
    m.mean_defense = mean_defense(w);
    m.health = overall_health(w);
    return m;
}

/// Advances one tick. Throws UsageError once tick_limit is reached.
inline TickMetrics step(WorldState& w, const ScenarioSpec& spec) {
    if (w.tick >= spec.tick_limit) throw UsageError("step: run already finished at tick " + std::to_string(w.tick));
    acquire_targets(w);
    run_attacks(w, spec);
    spread_malware(w, spec);
    control_centre_act(w, spec);
    if (w.adaptive && spec.adaptation && adaptation_due(w, *spec.adaptation)) adapt_defenses(w, *spec.adaptation);
    TickMetrics m = measure(w);
    w.health_history.push_back(m.health);
    ++w.tick;
    return m;
}

inline RunSummary summarize(std::span<const TickMetrics> series, const WorldState& w) {
    RunSummary s;
    s.node_count = static_cast<int>(w.nodes.size());
    s.final_infected = infected_count(w);
    s.peak_infected = s.final_infected;
    if (series.empty()) {
        s.mean_health = overall_health(w);
        if (s.final_infected == 0) s.time_to_containment = 0;
        return s;
    }
    double health_sum = 0.0;
    for (const auto& m : series) {
        s.peak_infected = std::max(s.peak_infected, m.infected);
        health_sum += m.health;
    }
    s.mean_health = health_sum / static_cast<double>(series.size());
    // first tick from which the infected count stays at zero to the end
    int t = static_cast<int>(series.size());
    while (t > 0 && series[t - 1].infected == 0) --t;
    if (t < static_cast<int>(series.size())) s.time_to_containment = series[t].tick;
    return s;
}

inline SimResult run(const ScenarioSpec& spec, std::uint64_t seed) {
    WorldState w = init_world(spec, seed);
    SimResult r;
    r.series.reserve(static_cast<std::size_t>(spec.tick_limit));
    while (w.tick < spec.tick_limit) r.series.push_back(step(w, spec));
    r.summary = summarize(r.series, w);
    return r;
}

} // namespace cyberdef::sim

#endif
