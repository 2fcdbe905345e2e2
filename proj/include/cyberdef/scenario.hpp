#ifndef CYBERDEF_SCENARIO_HPP
#define CYBERDEF_SCENARIO_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cyberdef/csv.hpp"
#include "cyberdef/error.hpp"
#include "cyberdef/scenario_spec.hpp"
#include "cyberdef/simcore.hpp"

namespace cyberdef {

// ---------------------------------------------------------------------------
// Built-in scenarios

/// Returns the variants of scenario `id` (s1..s4), in axis order.
inline std::vector<ScenarioSpec> builtin_scenario(const std::string& id) {
    std::vector<ScenarioSpec> out;
    if (id == "s1") {
        for (int threats : {10, 30, 100}) {
            ScenarioSpec s;
            s.name = "s1-threats-" + std::to_string(threats);
            s.threat_count = threats;
            s.response_rate = 5;
            s.defense = DefenseMode::random();
            out.push_back(s);
        }
    } else if (id == "s2") {
        for (int rate : {2, 8, 10}) {
            ScenarioSpec s;
            s.name = "s2-response-" + std::to_string(rate);
            s.threat_count = 20;
            s.response_rate = rate;
            s.defense = DefenseMode::random();
            out.push_back(s);
        }
    } else if (id == "s3") {
        for (int level : {1, 3, 5}) {
            ScenarioSpec s;
            s.name = "s3-defense-" + std::to_string(level);
            s.threat_count = 30;
            s.response_rate = 3;
            s.defense = DefenseMode::fixed(level);
            out.push_back(s);
        }
    } else if (id == "s4") {
        ScenarioSpec s;
        s.name = "s4-adaptive";
        s.threat_count = 10;
        s.response_rate = 5;
        s.tick_limit = 100;
        s.defense = DefenseMode::adaptive(calibration::adaptive_start_level);
        s.adaptation = AdaptationPolicy{};
        out.push_back(s);
    } else {
        throw ConfigError("unknown scenario id '" + id + "' (expected s1, s2, s3 or s4)");
    }
    for (const auto& s : out) validate(s);
    return out;
}

// ---------------------------------------------------------------------------
// Scenario files

namespace detail {

inline int parse_int_field(const std::string& key, const std::string& value, const std::string& where) {
    auto v = csv::parse_int(value);
    if (!v || *v < INT32_MIN || *v > INT32_MAX) throw FormatError(where + ": '" + key + "' expects an integer, got '" + value + "'");
    return static_cast<int>(*v);
}

inline double parse_real_field(const std::string& key, const std::string& value, const std::string& where) {
    auto v = csv::parse_double(value);
    if (!v || !std::isfinite(*v)) throw FormatError(where + ": '" + key + "' expects a number, got '" + value + "'");
    return *v;
}

} // namespace detail

/// Parses the flat `key = value` scenario format. `origin` labels errors.
inline ScenarioSpec parse_scenario(std::istream& in, const std::string& origin = "<scenario>") {
    ScenarioSpec s;
    AdaptationPolicy policy;
    bool want_adaptive = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = origin + ":" + std::to_string(lineno);
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = csv::trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) throw FormatError(where + ": expected 'key = value'");
        const std::string key(csv::trim(body.substr(0, eq)));
        const std::string value(csv::trim(body.substr(eq + 1)));
        if (key.empty()) throw FormatError(where + ": empty key");

        if (key == "name") s.name = value;
        else if (key == "nodes") s.node_count = detail::parse_int_field(key, value, where);
        else if (key == "ticks") s.tick_limit = detail::parse_int_field(key, value, where);
        else if (key == "threats") s.threat_count = detail::parse_int_field(key, value, where);
        else if (key == "response_rate") s.response_rate = detail::parse_int_field(key, value, where);
        else if (key == "breach_factor") s.breach_factor = detail::parse_int_field(key, value, where);
        else if (key == "spread_prob") s.spread_prob = detail::parse_real_field(key, value, where);
        else if (key == "respawn_delay") s.respawn_delay = detail::parse_int_field(key, value, where);
        else if (key == "adapt_interval") policy.adapt_interval = detail::parse_int_field(key, value, where);
        else if (key == "raise_threshold") policy.raise_threshold = detail::parse_real_field(key, value, where);
        else if (key == "lower_threshold") policy.lower_threshold = detail::parse_real_field(key, value, where);
        else if (key == "lower_dwell") policy.lower_dwell = detail::parse_int_field(key, value, where);
        else if (key == "defense") {
            if (value == "random") {
                s.defense = DefenseMode::random();
                want_adaptive = false;
            } else if (value == "adaptive") {
                s.defense = DefenseMode::adaptive(calibration::adaptive_start_level);
                want_adaptive = true;
            } else {
                s.defense = DefenseMode::fixed(detail::parse_int_field(key, value, where));
                want_adaptive = false;
            }
        } else {
            throw FormatError(where + ": unknown key '" + key + "'");
        }
    }
    if (want_adaptive) s.adaptation = policy;
    validate(s);
    return s;
}

inline ScenarioSpec load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "cannot open scenario file");
    return parse_scenario(in, path.string());
}

/// Renders a spec in the file format; parse_scenario inverts it.
inline std::string format_scenario(const ScenarioSpec& s) {
    std::ostringstream o;
    o << "name = " << s.name << "\n"
      << "nodes = " << s.node_count << "\n"
      << "ticks = " << s.tick_limit << "\n"
      << "threats = " << s.threat_count << "\n"
      << "response_rate = " << s.response_rate << "\n";
    switch (s.defense.kind) {
    case DefenseKind::uniform_random: o << "defense = random\n"; break;
    case DefenseKind::fixed: o << "defense = " << s.defense.level << "\n"; break;
    case DefenseKind::adaptive: o << "defense = adaptive\n"; break;
    }
    o << "breach_factor = " << s.breach_factor << "\n"
      << "spread_prob = " << csv::format_double(s.spread_prob) << "\n"
      << "respawn_delay = " << s.respawn_delay << "\n";
    if (s.adaptation) {
        o << "adapt_interval = " << s.adaptation->adapt_interval << "\n"
          << "raise_threshold = " << csv::format_double(s.adaptation->raise_threshold) << "\n"
          << "lower_threshold = " << csv::format_double(s.adaptation->lower_threshold) << "\n"
          << "lower_dwell = " << s.adaptation->lower_dwell << "\n";
    }
    return o.str();
}

// ---------------------------------------------------------------------------
// Sweeps

struct SeedSummary {
    std::uint64_t seed = 0;
    sim::RunSummary summary;
};

struct SweepAggregate {
    double mean_peak_fraction = 0.0;
    double min_peak_fraction = 0.0;
    double max_peak_fraction = 0.0;
    double mean_final_fraction = 0.0;
    double min_final_fraction = 0.0;
    double max_final_fraction = 0.0;
    std::optional<double> mean_time_to_containment; // over contained runs only
    int contained_runs = 0;
};

struct SweepResult {
    std::string axis_name;
    std::vector<std::string> axis_values;
    std::vector<std::string> scenario_names;
    std::vector<std::vector<SeedSummary>> runs; // [value][seed], sorted by seed
    std::vector<SweepAggregate> aggregates;
};

/// Name and per-spec values of the single field that varies across
/// `specs`; falls back to the scenario name.
inline std::pair<std::string, std::vector<std::string>> sweep_axis(const std::vector<ScenarioSpec>& specs) {
    auto varies = [&](auto get) {
        return std::any_of(specs.begin(), specs.end(), [&](const ScenarioSpec& s) { return get(s) != get(specs.front()); });
    };
    auto defense_text = [](const ScenarioSpec& s) {
        switch (s.defense.kind) {
        case DefenseKind::uniform_random: return std::string("random");
        case DefenseKind::adaptive: return std::string("adaptive");
        case DefenseKind::fixed: break;
        }
        return std::to_string(s.defense.level);
    };
    std::vector<std::string> values;
    auto collect = [&](auto get) {
        for (const auto& s : specs) values.push_back(get(s));
    };
    auto str = [](auto f) { return [f](const ScenarioSpec& s) { return std::to_string(f(s)); }; };
    if (varies([](const ScenarioSpec& s) { return s.threat_count; })) {
        collect(str([](const ScenarioSpec& s) { return s.threat_count; }));
        return {"threats", values};
    }
    if (varies([](const ScenarioSpec& s) { return s.response_rate; })) {
        collect(str([](const ScenarioSpec& s) { return s.response_rate; }));
        return {"response_rate", values};
    }
    if (varies(defense_text)) {
        collect(defense_text);
        return {"defense", values};
    }
    collect([](const ScenarioSpec& s) { return s.name; });
    return {"scenario", values};
}

inline SweepAggregate aggregate(const std::vector<SeedSummary>& runs) {
    SweepAggregate a;
    if (runs.empty()) return a;
    a.min_peak_fraction = a.min_final_fraction = std::numeric_limits<double>::infinity();
    a.max_peak_fraction = a.max_final_fraction = -std::numeric_limits<double>::infinity();
    double containment_sum = 0.0;
    for (const auto& r : runs) {
        const double peak = r.summary.peak_fraction(), fin = r.summary.final_fraction();
        a.mean_peak_fraction += peak;
        a.mean_final_fraction += fin;
        a.min_peak_fraction = std::min(a.min_peak_fraction, peak);
        a.max_peak_fraction = std::max(a.max_peak_fraction, peak);
        a.min_final_fraction = std::min(a.min_final_fraction, fin);
        a.max_final_fraction = std::max(a.max_final_fraction, fin);
        if (r.summary.time_to_containment) {
            containment_sum += *r.summary.time_to_containment;
            ++a.contained_runs;
        }
    }
    a.mean_peak_fraction /= static_cast<double>(runs.size());
    a.mean_final_fraction /= static_cast<double>(runs.size());
    if (a.contained_runs) a.mean_time_to_containment = containment_sum / a.contained_runs;
    return a;
}

/// Runs every (spec, seed) pair. Pairs run on up to `threads` workers
/// (0 = hardware concurrency); results are keyed by (spec index, seed), so
/// the output does not depend on scheduling or on the order of `seeds`.
inline SweepResult sweep(const std::vector<ScenarioSpec>& specs, const std::vector<std::uint64_t>& seeds, unsigned threads = 0) {
    if (specs.empty()) throw ConfigError("sweep: no scenarios given");
    if (seeds.empty()) throw ConfigError("sweep: no seeds given");
    for (const auto& s : specs) {
        try {
            validate(s);
        } catch (const ValidationError& e) {
            throw ValidationError(e.field(), "scenario '" + s.name + "': " + e.reason());
        }
    }
    std::vector<std::uint64_t> ordered = seeds;
    std::sort(ordered.begin(), ordered.end());

    SweepResult out;
    std::tie(out.axis_name, out.axis_values) = sweep_axis(specs);
    for (const auto& s : specs) out.scenario_names.push_back(s.name);
    out.runs.assign(specs.size(), std::vector<SeedSummary>(ordered.size()));

    const std::size_t total = specs.size() * ordered.size();
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (std::size_t job; (job = next.fetch_add(1)) < total;) {
            const std::size_t si = job / ordered.size(), ki = job % ordered.size();
            try {
                out.runs[si][ki] = {ordered[ki], sim::run(specs[si], ordered[ki]).summary};
            } catch (const std::exception& e) {
                std::lock_guard lock(failure_mu);
                if (!failure)
                    failure = std::make_exception_ptr(Error("sweep run (scenario '" + specs[si].name + "', seed " +
                                                            std::to_string(ordered[ki]) + "): " + e.what()));
            }
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    for (const auto& runs : out.runs) out.aggregates.push_back(aggregate(runs));
    return out;
}

// ---------------------------------------------------------------------------
// CSV export

inline constexpr const char* timeseries_header = "tick,infected,healthy,active_threats,mean_defense,health";
inline constexpr const char* sweep_header = "scenario,axis_value,seed,peak_infected,final_infected,mean_health,time_to_containment";

inline void write_timeseries(std::ostream& o, const std::vector<sim::TickMetrics>& series) {
    o << timeseries_header << "\n";
    for (const auto& m : series)
        o << m.tick << ',' << m.infected << ',' << m.healthy << ',' << m.active_threats << ','
          << csv::format_double(m.mean_defense) << ',' << csv::format_double(m.health) << "\n";
}

inline void export_timeseries(const sim::SimResult& result, const std::filesystem::path& path) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw IoError(path.string(), "cannot open for writing");
    write_timeseries(o, result.series);
    if (!o.flush()) throw IoError(path.string(), "write failed");
}

inline void write_sweep(std::ostream& o, const SweepResult& r) {
    o << sweep_header << "\n";
    for (std::size_t v = 0; v < r.runs.size(); ++v) {
        for (const auto& run : r.runs[v]) {
            const auto& s = run.summary;
            o << csv::escape(r.scenario_names[v]) << ',' << csv::escape(r.axis_values[v]) << ',' << run.seed << ','
              << s.peak_infected << ',' << s.final_infected << ',' << csv::format_double(s.mean_health) << ',';
            if (s.time_to_containment) o << *s.time_to_containment;
            o << "\n";
        }
    }
}

inline void export_sweep(const SweepResult& result, const std::filesystem::path& path) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw IoError(path.string(), "cannot open for writing");
    write_sweep(o, result);
    if (!o.flush()) throw IoError(path.string(), "write failed");
}

/// Reads back a time-series CSV written by export_timeseries.
inline std::vector<sim::TickMetrics> read_timeseries(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "cannot open");
    std::string line;
    if (!std::getline(in, line) || csv::trim(line) != timeseries_header)
        throw FormatError(path.string() + ": missing time-series header");
    std::vector<sim::TickMetrics> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        const auto f = csv::split(line);
        auto bad = [&] { return FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed row"); };
        if (f.size() != 6) throw bad();
        auto i0 = csv::parse_int(f[0]), i1 = csv::parse_int(f[1]), i2 = csv::parse_int(f[2]), i3 = csv::parse_int(f[3]);
        auto d4 = csv::parse_double(f[4]), d5 = csv::parse_double(f[5]);
        if (!i0 || !i1 || !i2 || !i3 || !d4 || !d5) throw bad();
        out.push_back({static_cast<int>(*i0), static_cast<int>(*i1), static_cast<int>(*i2), static_cast<int>(*i3), *d4, *d5});
    }
    return out;
}

/// One-line JSON-style summary used by the CLI.
inline std::string format_summary(const ScenarioSpec& spec, std::uint64_t seed, const sim::RunSummary& s) {
    std::ostringstream o;
    o << "{\"scenario\":\"" << spec.name << "\",\"seed\":" << seed << ",\"nodes\":" << spec.node_count
      << ",\"ticks\":" << spec.tick_limit << ",\"threats\":" << spec.threat_count
      << ",\"response_rate\":" << spec.response_rate << ",\"peak_infected\":" << s.peak_infected
      << ",\"final_infected\":" << s.final_infected << ",\"mean_health\":" << csv::format_double(s.mean_health)
      << ",\"time_to_containment\":";
    if (s.time_to_containment) o << *s.time_to_containment;
    else o << "null";
    o << "}";
    return o.str();
}

} // namespace cyberdef

#endif
