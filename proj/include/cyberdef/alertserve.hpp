#ifndef CYBERDEF_ALERTSERVE_HPP
#define CYBERDEF_ALERTSERVE_HPP

// Alert categorization, the append-only alert and feedback logs, and drift
// evaluation. The HTTP layer lives in alertserve_http.hpp.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "cyberdef/csv.hpp"
#include "cyberdef/detect/model.hpp"
#include "cyberdef/error.hpp"
#include "cyberdef/evalmetrics.hpp"
#include "cyberdef/flows.hpp"

namespace cyberdef::serve {

using Json = nlohmann::json;

enum class Severity { none, low, medium, high };

inline const char* to_string(Severity s) {
    switch (s) {
    case Severity::none: return "none";
    case Severity::low: return "low";
    case Severity::medium: return "medium";
    case Severity::high: return "high";
    }
    return "?";
}

inline Severity severity_from(std::string_view s) {
    const auto n = flows::normalize_name(s);
    if (n == "none") return Severity::none;
    if (n == "low") return Severity::low;
    if (n == "medium") return Severity::medium;
    if (n == "high") return Severity::high;
    throw ConfigError("unknown severity '" + std::string(s) + "'");
}

/// Environment variable that overrides the API key file.
inline constexpr const char* api_key_env = "CYBERDEF_API_KEY";

struct ServeConfig {
    std::string api_key;
    std::string host = "127.0.0.1";
    int port = 8080;
    double high_threshold = 0.9;
    double medium_threshold = 0.6;
    std::map<Severity, std::string> sop_table = {
        {Severity::low, "SOP-LOW"}, {Severity::medium, "SOP-MEDIUM"}, {Severity::high, "SOP-HIGH"}};
    std::size_t window = 500;
    double accuracy_floor = 0.95;
    std::string benign_class = "BENIGN";
    std::filesystem::path log_dir = ".";
    std::size_t max_body_bytes = 64 * 1024;
};

inline void validate(const ServeConfig& c) {
    if (c.api_key.empty()) throw ValidationError("api_key", "must not be empty");
    if (!(c.medium_threshold > 0.0 && c.medium_threshold < c.high_threshold && c.high_threshold <= 1.0))
        throw ValidationError("thresholds", "need 0 < medium < high <= 1");
    if (c.window < 1) throw ValidationError("window", "must be at least 1");
    if (!(c.accuracy_floor >= 0.0 && c.accuracy_floor <= 1.0)) throw ValidationError("accuracy_floor", "must lie in [0, 1]");
    if (c.port < 0 || c.port > 65535) throw ValidationError("port", "must lie in [0, 65535]");
    for (auto s : {Severity::low, Severity::medium, Severity::high})
        if (!c.sop_table.contains(s) || c.sop_table.at(s).empty())
            throw ValidationError("sop_table", std::string("no playbook id for severity '") + to_string(s) + "'");
}

/// Reads `severity = sop_id` lines; '#' starts a comment. Entries override
/// the defaults.
inline std::map<Severity, std::string> parse_sop_table(std::istream& in, const std::string& origin,
                                                       std::map<Severity, std::string> table = ServeConfig{}.sop_table) {
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        const auto t = csv::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) throw FormatError(origin + ":" + std::to_string(no) + ": expected 'severity = sop_id'");
        Severity s;
        try {
            s = severity_from(csv::trim(t.substr(0, eq)));
        } catch (const ConfigError& e) {
            throw FormatError(origin + ":" + std::to_string(no) + ": " + e.what());
        }
        if (s == Severity::none) throw FormatError(origin + ":" + std::to_string(no) + ": severity 'none' has no playbook");
        table[s] = std::string(csv::trim(t.substr(eq + 1)));
    }
    return table;
}

struct Categorization {
    Severity severity = Severity::none;
    std::optional<std::string> sop_id;

    bool operator==(const Categorization&) const = default;
};

/// Benign predictions raise nothing; otherwise the predicted attack class's
/// score picks the severity band.
inline Categorization categorize(const PredictionResult& pred, const ServeConfig& cfg) {
    if (pred.predicted == cfg.benign_class) return {};
    const double s = pred.top_score();
    const Severity sev = s >= cfg.high_threshold ? Severity::high : s >= cfg.medium_threshold ? Severity::medium : Severity::low;
    auto it = cfg.sop_table.find(sev);
    return {sev, it == cfg.sop_table.end() ? std::nullopt : std::optional<std::string>(it->second)};
}

inline std::string utc_now_iso() {
    const auto now = std::chrono::system_clock::now();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min,
                  tm.tm_sec, static_cast<int>(ms));
    return buf;
}

struct Alert {
    std::uint64_t alert_id = 0;
    std::string received_at;
    PredictionResult prediction;
    Severity severity = Severity::none;
    std::optional<std::string> sop_id;
    std::string model_version;
};

struct FeedbackEntry {
    std::uint64_t alert_id = 0;
    std::string actual_label;
    std::string recorded_at;
};

inline Json alert_json(const Alert& a) {
    return {{"alert_id", a.alert_id},
            {"received_at", a.received_at},
            {"classes", a.prediction.classes},
            {"scores", a.prediction.scores},
            {"predicted", a.prediction.predicted},
            {"severity", to_string(a.severity)},
            {"sop_id", a.sop_id ? Json(*a.sop_id) : Json(nullptr)},
            {"model_version", a.model_version}};
}

inline Alert alert_from_json(const Json& j) {
    Alert a;
    a.alert_id = j.at("alert_id").get<std::uint64_t>();
    a.received_at = j.at("received_at").get<std::string>();
    a.prediction.classes = j.at("classes").get<std::vector<std::string>>();
    a.prediction.scores = j.at("scores").get<std::vector<double>>();
    a.prediction.predicted = j.at("predicted").get<std::string>();
    a.severity = severity_from(j.at("severity").get<std::string>());
    if (!j.at("sop_id").is_null()) a.sop_id = j.at("sop_id").get<std::string>();
    a.model_version = j.at("model_version").get<std::string>();
    return a;
}

inline Json feedback_json(const FeedbackEntry& f) {
    return {{"alert_id", f.alert_id}, {"actual_label", f.actual_label}, {"recorded_at", f.recorded_at}};
}

inline FeedbackEntry feedback_from_json(const Json& j) {
    return {j.at("alert_id").get<std::uint64_t>(), j.at("actual_label").get<std::string>(), j.at("recorded_at").get<std::string>()};
}

struct DriftReport {
    std::size_t window = 0;
    std::size_t pairs = 0;   // matched pairs evaluated (<= window)
    std::size_t correct = 0;
    std::optional<double> accuracy; // empty when no pairs exist
    bool low_sample = false;        // fewer pairs than the window
    bool retrain_recommended = false;
    double accuracy_floor = 0.0;
};

/// Accuracy over the most recent `cfg.window` (alert, feedback) pairs.
/// Each alert counts once, with its latest feedback label, positioned at
/// the time of that latest feedback.
inline DriftReport evaluate_feedback(std::span<const Alert> alerts, std::span<const FeedbackEntry> feedback, const ServeConfig& cfg) {
    std::unordered_map<std::uint64_t, const Alert*> by_id;
    for (const auto& a : alerts) by_id[a.alert_id] = &a;
    std::unordered_map<std::uint64_t, std::size_t> latest;
    for (std::size_t i = 0; i < feedback.size(); ++i)
        if (by_id.contains(feedback[i].alert_id)) latest[feedback[i].alert_id] = i;
    std::vector<std::size_t> order;
    for (const auto& [id, i] : latest) order.push_back(i);
    std::sort(order.begin(), order.end());
    if (order.size() > cfg.window) order.erase(order.begin(), order.end() - static_cast<std::ptrdiff_t>(cfg.window));

    DriftReport r;
    r.window = cfg.window;
    r.accuracy_floor = cfg.accuracy_floor;
    r.pairs = order.size();
    for (auto i : order)
        if (by_id.at(feedback[i].alert_id)->prediction.predicted == feedback[i].actual_label) ++r.correct;
    r.low_sample = r.pairs < cfg.window;
    if (r.pairs > 0) {
        r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.pairs);
        r.retrain_recommended = *r.accuracy < cfg.accuracy_floor;
    }
    return r;
}

inline Json drift_json(const DriftReport& r) {
    return {{"window", r.window},
            {"pairs", r.pairs},
            {"correct", r.correct},
            {"accuracy", r.accuracy ? Json(*r.accuracy) : Json(nullptr)},
            {"low_sample", r.low_sample},
            {"retrain_recommended", r.retrain_recommended},
            {"accuracy_floor", r.accuracy_floor}};
}

inline constexpr const char* alert_log_name = "alerts.ndjson";
inline constexpr const char* feedback_log_name = "feedback.ndjson";

/// In-memory view plus the two NDJSON logs. All mutation goes through one
/// mutex, so ids are assigned and lines appended in the same order. Existing
/// logs in `dir` are loaded, and ids continue after the largest one seen.
class AlertStore {
public:
    explicit AlertStore(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        load(alert_path(), [&](const Json& j) {
            alerts_.push_back(alert_from_json(j));
            index_[alerts_.back().alert_id] = alerts_.size() - 1;
            next_id_ = std::max(next_id_, alerts_.back().alert_id + 1);
        });
        load(feedback_path(), [&](const Json& j) {
            feedback_.push_back(feedback_from_json(j));
            seen_.insert({feedback_.back().alert_id, feedback_.back().actual_label});
        });
        alert_out_.open(alert_path(), std::ios::app | std::ios::binary);
        feedback_out_.open(feedback_path(), std::ios::app | std::ios::binary);
        if (!alert_out_) throw IoError(alert_path().string(), "cannot open alert log");
        if (!feedback_out_) throw IoError(feedback_path().string(), "cannot open feedback log");
    }

    std::filesystem::path alert_path() const { return dir_ / alert_log_name; }
    std::filesystem::path feedback_path() const { return dir_ / feedback_log_name; }

    Alert issue(const PredictionResult& pred, const Categorization& cat, const std::string& model_version) {
        std::lock_guard lock(mu_);
        Alert a{next_id_++, utc_now_iso(), pred, cat.severity, cat.sop_id, model_version};
        alert_out_ << alert_json(a).dump() << '\n';
        alert_out_.flush();
        alerts_.push_back(a);
        index_[a.alert_id] = alerts_.size() - 1;
        return a;
    }

    /// Appends unless the identical (alert_id, label) pair is already
    /// recorded. Returns whether a line was written.
    bool record_feedback(std::uint64_t alert_id, const std::string& actual_label) {
        std::lock_guard lock(mu_);
        if (!index_.contains(alert_id)) throw NotFoundError("no alert with id " + std::to_string(alert_id));
        if (!seen_.insert({alert_id, actual_label}).second) return false;
        FeedbackEntry f{alert_id, actual_label, utc_now_iso()};
        feedback_out_ << feedback_json(f).dump() << '\n';
        feedback_out_.flush();
        feedback_.push_back(std::move(f));
        return true;
    }

    DriftReport drift(const ServeConfig& cfg) const {
        std::lock_guard lock(mu_);
        return evaluate_feedback(alerts_, feedback_, cfg);
    }

    std::size_t alert_count() const {
        std::lock_guard lock(mu_);
        return alerts_.size();
    }

    std::vector<Alert> alerts() const {
        std::lock_guard lock(mu_);
        return alerts_;
    }

    std::vector<FeedbackEntry> feedback() const {
        std::lock_guard lock(mu_);
        return feedback_;
    }

    void flush() {
        std::lock_guard lock(mu_);
        alert_out_.flush();
        feedback_out_.flush();
    }

private:
    template <typename F>
    static void load(const std::filesystem::path& p, F&& f) {
        std::ifstream in(p, std::ios::binary);
        if (!in) return;
        std::string line;
        std::size_t no = 0;
        while (std::getline(in, line)) {
            ++no;
            if (csv::trim(line).empty()) continue;
            try {
                f(Json::parse(line));
            } catch (const Json::exception& e) {
                throw FormatError(p.string() + ":" + std::to_string(no) + ": " + e.what());
            }
        }
    }

    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::uint64_t next_id_ = 1;
    std::vector<Alert> alerts_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
    std::vector<FeedbackEntry> feedback_;
    std::set<std::pair<std::uint64_t, std::string>> seen_;
    std::ofstream alert_out_;
    std::ofstream feedback_out_;
};

/// Schema a served model expects: its numeric slots plus every identifier
/// field it was trained with.
inline flows::SchemaPtr serving_schema(const detect::TrainedModel& m) {
    auto s = std::make_shared<flows::FeatureSchema>();
    for (const auto& slot : m.params.slots)
        if (slot.kind == detect::SlotKind::numeric) s->names.push_back(slot.name);
    for (const auto& f : m.params.input_fields) {
        if (f == "source_ip") s->has_source_ip = true;
        if (f == "destination_ip") s->has_destination_ip = true;
        if (f == "timestamp") s->has_timestamp = true;
        if (f == "source_port") s->has_source_port = true;
        if (f == "destination_port") s->has_destination_port = true;
        if (f == "protocol") s->has_protocol = true;
    }
    return s;
}

/// Parses a predict request body: a JSON object of field name to value
/// (number or text). Names match the ingestion CSV headers loosely; unknown
/// fields are ignored and absent numeric features are imputed.
inline flows::FlowRecord parse_flow_body(const std::string& body, const flows::SchemaPtr& schema) {
    Json j;
    try {
        j = Json::parse(body);
    } catch (const Json::exception&) {
        throw ValidationError("body", "not valid JSON");
    }
    if (!j.is_object()) throw ValidationError("body", "expected a JSON object of field/value pairs");
    flows::FlowRecord r;
    r.schema = schema;
    r.values.assign(schema->names.size(), std::numeric_limits<double>::quiet_NaN());
    std::size_t recognized = 0;
    auto text = [](const std::string& key, const Json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number()) return csv::format_double(v.get<double>());
        if (v.is_null()) return {};
        throw ValidationError(key, "expected a number or text value");
    };
    auto number = [&](const std::string& key, const Json& v) -> double {
        if (v.is_number()) return v.get<double>();
        const auto t = text(key, v);
        if (csv::trim(t).empty()) return std::numeric_limits<double>::quiet_NaN();
        auto d = csv::parse_double(t);
        if (!d) throw ValidationError(key, "not numeric: '" + t + "'");
        return *d;
    };
    auto integer = [&](const std::string& key, const Json& v) -> std::optional<int> {
        const double d = number(key, v);
        if (!std::isfinite(d)) return std::nullopt;
        return static_cast<int>(d);
    };
    for (const auto& [key, v] : j.items()) {
        switch (flows::classify_column(key)) {
        case flows::Column::flow_id: r.flow_id = text(key, v); break;
        case flows::Column::source_ip: r.source_ip = text(key, v); ++recognized; break;
        case flows::Column::destination_ip: r.destination_ip = text(key, v); ++recognized; break;
        case flows::Column::source_port: r.source_port = integer(key, v); ++recognized; break;
        case flows::Column::destination_port: r.destination_port = integer(key, v); ++recognized; break;
        case flows::Column::protocol: r.protocol = integer(key, v); ++recognized; break;
        case flows::Column::timestamp: r.timestamp = text(key, v); ++recognized; break;
        case flows::Column::label: break;
        case flows::Column::numeric:
            if (auto i = schema->find(key)) {
                r.values[*i] = number(key, v);
                ++recognized;
            }
            break;
        }
    }
    if (recognized == 0) throw ValidationError("body", "no recognised flow fields");
    return r;
}

} // namespace cyberdef::serve

#endif
