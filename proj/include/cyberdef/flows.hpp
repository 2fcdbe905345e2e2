#ifndef CYBERDEF_FLOWS_HPP
#define CYBERDEF_FLOWS_HPP

// CICIDS2017-style flow records: CSV ingestion, a schema-compatible
// synthetic generator, and deterministic train/test splitting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cyberdef/csv.hpp"
#include "cyberdef/error.hpp"
#include "cyberdef/random.hpp"

namespace cyberdef::flows {

/// Lowercase, with spaces, '_', '-' and '.' removed, so "Flow_Packets",
/// " Flow Packets" and "flow-packets" compare equal.
inline std::string normalize_name(std::string_view name) {
    std::string out;
    for (char c : csv::trim(name)) {
        if (c == ' ' || c == '_' || c == '-' || c == '.' || c == '\t') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

/// Header-name match that also ignores a trailing per-second unit, so the
/// short name "Flow_Packets" finds the "Flow Packets/s" column.
inline bool same_feature(std::string_view a, std::string_view b) {
    auto strip = [](std::string s) {
        if (s.size() > 2 && s.ends_with("/s")) s.resize(s.size() - 2);
        return s;
    };
    const auto na = normalize_name(a), nb = normalize_name(b);
    return na == nb || strip(na) == strip(nb);
}

enum class Column { flow_id, source_ip, destination_ip, source_port, destination_port, protocol, timestamp, label, numeric };

inline Column classify_column(std::string_view header) {
    static const std::unordered_map<std::string, Column> roles = {
        {"flowid", Column::flow_id},           {"sourceip", Column::source_ip},
        {"srcip", Column::source_ip},          {"destinationip", Column::destination_ip},
        {"dstip", Column::destination_ip},     {"sourceport", Column::source_port},
        {"srcport", Column::source_port},      {"destinationport", Column::destination_port},
        {"dstport", Column::destination_port}, {"protocol", Column::protocol},
        {"timestamp", Column::timestamp},      {"label", Column::label},
    };
    auto it = roles.find(normalize_name(header));
    return it == roles.end() ? Column::numeric : it->second;
}

/// Numeric feature names shared by every record of one dataset, plus which
/// identifier columns the source carried.
struct FeatureSchema {
    std::vector<std::string> names;
    bool has_flow_id = false;
    bool has_source_ip = false;
    bool has_destination_ip = false;
    bool has_source_port = false;
    bool has_destination_port = false;
    bool has_protocol = false;
    bool has_timestamp = false;

    std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (normalize_name(names[i]) == normalize_name(name)) return i;
        for (std::size_t i = 0; i < names.size(); ++i)
            if (same_feature(names[i], name)) return i;
        return std::nullopt;
    }

    bool operator==(const FeatureSchema&) const = default;
};

using SchemaPtr = std::shared_ptr<const FeatureSchema>;

struct FlowRecord {
    std::optional<std::string> flow_id;
    std::string source_ip;
    std::string destination_ip;
    std::optional<int> source_port;
    std::optional<int> destination_port;
    std::optional<int> protocol;
    std::string timestamp;
    SchemaPtr schema;
    std::vector<double> values; // aligned with schema->names; NaN = missing
    std::optional<std::string> label;

    /// Value of numeric feature `name`, or nullopt if the schema lacks it.
    std::optional<double> feature(std::string_view name) const {
        if (!schema) return std::nullopt;
        auto i = schema->find(name);
        if (!i) return std::nullopt;
        return values[*i];
    }
};

struct Dataset {
    std::vector<FlowRecord> records;
    std::vector<std::string> class_names; // sorted, distinct
    std::string source;
    SchemaPtr schema;

    std::size_t size() const { return records.size(); }
};

/// Recomputes class_names from the records' labels.
inline void refresh_classes(Dataset& ds) {
    std::set<std::string> labels;
    for (const auto& r : ds.records)
        if (r.label) labels.insert(*r.label);
    ds.class_names.assign(labels.begin(), labels.end());
}

inline std::map<std::string, std::size_t> class_counts(const Dataset& ds) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : ds.records)
        if (r.label) ++counts[*r.label];
    return counts;
}

/// Seconds since midnight for CICIDS-style stamps such as
/// "4/7/2017 8:55", "04/07/2017 08:55:12 PM" or a bare "13:05:00".
inline std::optional<double> seconds_of_day(std::string_view ts) {
    ts = csv::trim(ts);
    const auto colon = ts.find(':');
    if (colon == std::string_view::npos || colon == 0) return std::nullopt;
    std::size_t hs = colon;
    while (hs > 0 && std::isdigit(static_cast<unsigned char>(ts[hs - 1]))) --hs;
    auto read_num = [&](std::size_t& pos) -> std::optional<int> {
        std::size_t start = pos;
        while (pos < ts.size() && std::isdigit(static_cast<unsigned char>(ts[pos]))) ++pos;
        if (pos == start || pos - start > 2) return std::nullopt;
        return std::stoi(std::string(ts.substr(start, pos - start)));
    };
    std::size_t pos = hs;
    auto h = read_num(pos);
    if (!h || pos != colon) return std::nullopt;
    ++pos;
    auto m = read_num(pos);
    if (!m) return std::nullopt;
    int sec = 0;
    if (pos < ts.size() && ts[pos] == ':') {
        ++pos;
        auto s = read_num(pos);
        if (!s) return std::nullopt;
        sec = *s;
        if (pos < ts.size() && ts[pos] == '.') // fractional seconds are ignored
            while (pos < ts.size() && ts[pos] != ' ') ++pos;
    }
    int hour = *h;
    std::string rest = normalize_name(ts.substr(pos));
    if (rest == "pm" && hour < 12) hour += 12;
    else if (rest == "am" && hour == 12) hour = 0;
    else if (!rest.empty() && rest != "am" && rest != "pm") return std::nullopt;
    if (hour > 23 || *m > 59 || sec > 60) return std::nullopt;
    return hour * 3600.0 + *m * 60.0 + sec;
}

// ---------------------------------------------------------------------------
// CSV ingestion

/// Outcome of reading one data row. `record` is empty on failure, in which
/// case `error` says why and the identifier fields hold whatever was
/// recoverable from the raw text.
struct RowResult {
    std::size_t row = 0; // 1-based data row number (header excluded)
    std::optional<FlowRecord> record;
    std::string error;
    std::string flow_id;
    std::string source_ip;
    std::string destination_ip;
    std::optional<std::string> label;
};

/// Streaming reader: parses the header once, then one row per next().
class FlowCsvReader {
public:
    explicit FlowCsvReader(const std::filesystem::path& path) : path_(path.string()), in_(path, std::ios::binary) {
        if (!in_) throw IoError(path_, "cannot open flow CSV");
        std::string header;
        if (!std::getline(in_, header) || csv::trim(header).empty()) throw FormatError(path_ + ": missing header row");
        if (header.size() >= 3 && static_cast<unsigned char>(header[0]) == 0xEF) header.erase(0, 3); // UTF-8 BOM
        init(csv::split(header));
    }

    const SchemaPtr& schema() const { return schema_; }
    bool has_label() const { return label_col_.has_value(); }
    const std::vector<std::string>& header() const { return header_; }

    /// Fills `out` with the next non-blank row; false at end of file.
    bool next(RowResult& out) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (csv::trim(line).empty()) continue;
            out = parse_row(line);
            return true;
        }
        return false;
    }

private:
    void init(const std::vector<std::string>& raw) {
        auto schema = std::make_shared<FeatureSchema>();
        std::map<std::string, int> seen;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            std::string name(csv::trim(raw[i]));
            if (name.empty()) throw FormatError(path_ + ": empty column name at position " + std::to_string(i + 1));
            header_.push_back(name);
            const Column role = classify_column(name);
            roles_.push_back(role);
            switch (role) {
            case Column::flow_id: schema->has_flow_id = true; break;
            case Column::source_ip: schema->has_source_ip = true; break;
            case Column::destination_ip: schema->has_destination_ip = true; break;
            case Column::source_port: schema->has_source_port = true; break;
            case Column::destination_port: schema->has_destination_port = true; break;
            case Column::protocol: schema->has_protocol = true; break;
            case Column::timestamp: schema->has_timestamp = true; break;
            case Column::label: label_col_ = i; break;
            case Column::numeric: {
                // CICIDS2017 repeats "Fwd Header Length"; later copies get a suffix
                const int dup = seen[normalize_name(name)]++;
                if (dup) name += "." + std::to_string(dup);
                feature_pos_.push_back(schema->names.size());
                schema->names.push_back(name);
                continue;
            }
            }
            feature_pos_.push_back(SIZE_MAX);
        }
        schema_ = std::move(schema);
    }

    RowResult parse_row(const std::string& line) {
        RowResult r;
        r.row = line_no_;
        const auto fields = csv::split(line);
        auto grab = [&](Column c) -> std::string {
            for (std::size_t i = 0; i < roles_.size() && i < fields.size(); ++i)
                if (roles_[i] == c) return std::string(csv::trim(fields[i]));
            return {};
        };
        r.flow_id = grab(Column::flow_id);
        r.source_ip = grab(Column::source_ip);
        r.destination_ip = grab(Column::destination_ip);
        if (label_col_ && *label_col_ < fields.size()) {
            std::string l(csv::trim(fields[*label_col_]));
            if (!l.empty()) r.label = l;
        }
        if (fields.size() != roles_.size()) {
            r.error = "row " + std::to_string(r.row) + ": expected " + std::to_string(roles_.size()) + " fields, found " +
                      std::to_string(fields.size());
            return r;
        }
        FlowRecord rec;
        rec.schema = schema_;
        rec.values.assign(schema_->names.size(), std::numeric_limits<double>::quiet_NaN());
        rec.label = r.label;
        auto port = [&](std::size_t i, const char* what) -> std::optional<int> {
            auto t = csv::trim(fields[i]);
            if (t.empty()) return std::nullopt;
            auto v = csv::parse_double(t);
            if (!v) throw FormatError(std::string("column '") + header_[i] + "' (" + what + ") is not numeric: '" + std::string(t) + "'");
            if (!std::isfinite(*v)) return std::nullopt;
            return static_cast<int>(*v);
        };
        try {
            for (std::size_t i = 0; i < fields.size(); ++i) {
                switch (roles_[i]) {
                case Column::flow_id: rec.flow_id = r.flow_id; break;
                case Column::source_ip: rec.source_ip = r.source_ip; break;
                case Column::destination_ip: rec.destination_ip = r.destination_ip; break;
                case Column::source_port: rec.source_port = port(i, "port"); break;
                case Column::destination_port: rec.destination_port = port(i, "port"); break;
                case Column::protocol: rec.protocol = port(i, "protocol"); break;
                case Column::timestamp: rec.timestamp = std::string(csv::trim(fields[i])); break;
                case Column::label: break;
                case Column::numeric: {
                    auto t = csv::trim(fields[i]);
                    if (t.empty()) break; // missing, stays NaN
                    auto v = csv::parse_double(t);
                    if (!v) throw FormatError("column '" + header_[i] + "' is not numeric: '" + std::string(t) + "'");
                    rec.values[feature_pos_[i]] = *v;
                    break;
                }
                }
            }
        } catch (const FormatError& e) {
            r.error = "row " + std::to_string(r.row) + ": " + e.what();
            return r;
        }
        r.record = std::move(rec);
        return r;
    }

    std::string path_;
    std::ifstream in_;
    std::vector<std::string> header_;
    std::vector<Column> roles_;
    std::vector<std::size_t> feature_pos_;
    std::optional<std::size_t> label_col_;
    SchemaPtr schema_;
    std::size_t line_no_ = 0;
};

/// Reads a whole flow CSV. Any malformed row is an error naming the row.
inline Dataset read_flows_csv(const std::filesystem::path& path) {
    FlowCsvReader reader(path);
    Dataset ds;
    ds.schema = reader.schema();
    ds.source = path.string();
    RowResult row;
    while (reader.next(row)) {
        if (!row.record) throw FormatError(path.string() + ": " + row.error);
        ds.records.push_back(std::move(*row.record));
    }
    refresh_classes(ds);
    return ds;
}

inline void write_flows_csv(const Dataset& ds, std::ostream& o) {
    const FeatureSchema empty;
    const FeatureSchema& s = ds.schema ? *ds.schema : empty;
    std::vector<std::string> cols;
    if (s.has_flow_id) cols.push_back("Flow ID");
    if (s.has_source_ip) cols.push_back("Source IP");
    if (s.has_source_port) cols.push_back("Source Port");
    if (s.has_destination_ip) cols.push_back("Destination IP");
    if (s.has_destination_port) cols.push_back("Destination Port");
    if (s.has_protocol) cols.push_back("Protocol");
    if (s.has_timestamp) cols.push_back("Timestamp");
    for (const auto& n : s.names) cols.push_back(n);
    cols.push_back("Label");
    for (std::size_t i = 0; i < cols.size(); ++i) o << (i ? "," : "") << csv::escape(cols[i]);
    o << "\n";
    auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
    for (const auto& r : ds.records) {
        std::string line;
        bool first = true;
        auto field = [&](const std::string& f) {
            if (!first) line.push_back(',');
            first = false;
            line += csv::escape(f);
        };
        if (s.has_flow_id) field(r.flow_id.value_or(""));
        if (s.has_source_ip) field(r.source_ip);
        if (s.has_source_port) field(opt(r.source_port));
        if (s.has_destination_ip) field(r.destination_ip);
        if (s.has_destination_port) field(opt(r.destination_port));
        if (s.has_protocol) field(opt(r.protocol));
        if (s.has_timestamp) field(r.timestamp);
        for (double v : r.values) field(std::isnan(v) ? std::string() : csv::format_double(v));
        field(r.label.value_or(""));
        o << line << "\n";
    }
}

inline void write_flows_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw IoError(path.string(), "cannot open for writing");
    write_flows_csv(ds, o);
    if (!o.flush()) throw IoError(path.string(), "write failed");
}

// ---------------------------------------------------------------------------
// Synthetic generator

/// Numeric columns of the CICIDS2017 flow CSVs, in file order (the
/// duplicated "Fwd Header Length" column is omitted).
inline const std::vector<std::string>& cicids_feature_names() {
    static const std::vector<std::string> names = {
        "Flow Duration", "Total Fwd Packets", "Total Backward Packets", "Total Length of Fwd Packets",
        "Total Length of Bwd Packets", "Fwd Packet Length Max", "Fwd Packet Length Min", "Fwd Packet Length Mean",
        "Fwd Packet Length Std", "Bwd Packet Length Max", "Bwd Packet Length Min", "Bwd Packet Length Mean",
        "Bwd Packet Length Std", "Flow Bytes/s", "Flow Packets/s", "Flow IAT Mean", "Flow IAT Std", "Flow IAT Max",
        "Flow IAT Min", "Fwd IAT Total", "Fwd IAT Mean", "Fwd IAT Std", "Fwd IAT Max", "Fwd IAT Min", "Bwd IAT Total",
        "Bwd IAT Mean", "Bwd IAT Std", "Bwd IAT Max", "Bwd IAT Min", "Fwd PSH Flags", "Bwd PSH Flags", "Fwd URG Flags",
        "Bwd URG Flags", "Fwd Header Length", "Bwd Header Length", "Fwd Packets/s", "Bwd Packets/s",
        "Min Packet Length", "Max Packet Length", "Packet Length Mean", "Packet Length Std", "Packet Length Variance",
        "FIN Flag Count", "SYN Flag Count", "RST Flag Count", "PSH Flag Count", "ACK Flag Count", "URG Flag Count",
        "CWE Flag Count", "ECE Flag Count", "Down/Up Ratio", "Average Packet Size", "Avg Fwd Segment Size",
        "Avg Bwd Segment Size", "Fwd Avg Bytes/Bulk", "Fwd Avg Packets/Bulk", "Fwd Avg Bulk Rate",
        "Bwd Avg Bytes/Bulk", "Bwd Avg Packets/Bulk", "Bwd Avg Bulk Rate", "Subflow Fwd Packets", "Subflow Fwd Bytes",
        "Subflow Bwd Packets", "Subflow Bwd Bytes", "Init_Win_bytes_forward", "Init_Win_bytes_backward",
        "act_data_pkt_fwd", "min_seg_size_forward", "Active Mean", "Active Std", "Active Max", "Active Min",
        "Idle Mean", "Idle Std", "Idle Max", "Idle Min",
    };
    return names;
}

struct SynthClass {
    std::string name;
    double proportion = 0.0;
};

struct Separability {
    bool perfect = true;
    double noise_rate = 0.0; // used when !perfect

    static Separability perfectly() { return {true, 0.0}; }
    static Separability noisy(double rate) { return {false, rate}; }
};

struct SynthSpec {
    std::size_t row_count = 0;
    std::vector<SynthClass> classes = default_classes();
    Separability separability = Separability::perfectly();
    std::uint64_t seed = 0;

    static std::vector<SynthClass> default_classes() {
        return {{"BENIGN", 0.970}, {"FTP-Patator", 0.018}, {"SSH-Patator", 0.012}};
    }
    /// Proportions of the reference confusion matrix (43166 / 786 / 537).
    static std::vector<SynthClass> reference_classes() {
        const double total = 43166.0 + 786.0 + 537.0;
        return {{"BENIGN", 43166.0 / total}, {"FTP-Patator", 786.0 / total}, {"SSH-Patator", 537.0 / total}};
    }
};

inline void validate(const SynthSpec& s) {
    if (s.classes.empty()) throw ValidationError("classes", "at least one class is required");
    double sum = 0.0;
    std::set<std::string> names;
    for (const auto& c : s.classes) {
        if (!(c.proportion >= 0.0)) throw ValidationError("proportion", "class '" + c.name + "' has a negative proportion");
        if (c.name.empty()) throw ValidationError("classes", "empty class name");
        if (!names.insert(c.name).second) throw ValidationError("classes", "duplicate class '" + c.name + "'");
        sum += c.proportion;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("proportion", "class proportions must sum to 1");
    if (!s.separability.perfect && !(s.separability.noise_rate >= 0.0 && s.separability.noise_rate <= 1.0))
        throw ValidationError("separability", "noise rate must lie in [0, 1]");
}

/// Rounded class counts, largest-remainder corrected to sum to `total`
/// (ties go to the earlier class).
inline std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& proportions) {
    std::vector<std::size_t> counts(proportions.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < proportions.size(); ++i) {
        const double exact = proportions[i] * static_cast<double>(total);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[i];
        remainders.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](auto& a, auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k, ++assigned) ++counts[remainders[k].second];
    for (std::size_t k = 0; assigned > total && k < remainders.size(); ++k) // proportions summing a hair above 1
        if (counts[remainders[remainders.size() - 1 - k].second] > 0) {
            --counts[remainders[remainders.size() - 1 - k].second];
            --assigned;
        }
    return counts;
}

namespace detail {

struct ClassProfile {
    std::vector<std::string> source_pool;
    std::vector<std::string> destination_pool;
    std::vector<int> destination_ports;
    int protocol = 6;
    int start_second = 0; // activity window, seconds of day
    int end_second = 0;
};

inline ClassProfile profile_for(const std::string& name, std::size_t index) {
    const auto n = normalize_name(name);
    if (n == "benign")
        return {{"192.168.10.3", "192.168.10.5", "192.168.10.8", "192.168.10.9", "192.168.10.12", "192.168.10.14",
                 "192.168.10.15", "192.168.10.16", "192.168.10.17", "192.168.10.19", "192.168.10.25"},
                {"8.8.8.8", "104.16.207.165", "23.194.142.15", "172.217.10.98", "192.168.10.3", "52.84.145.73"},
                {80, 443, 53, 123, 137, 389, 445, 8080},
                6,
                8 * 3600,
                17 * 3600};
    if (n == "ftppatator") return {{"172.16.0.1", "172.16.0.2"}, {"192.168.10.50"}, {21}, 6, 9 * 3600 + 20 * 60, 10 * 3600 + 20 * 60};
    if (n == "sshpatator") return {{"172.16.0.3", "172.16.0.4"}, {"192.168.10.50"}, {22}, 6, 14 * 3600, 15 * 3600};
    // generic attack class: its own pool and port
    const std::string ip = "10.99." + std::to_string(index) + ".1";
    return {{ip}, {"192.168.10.51"}, {10000 + static_cast<int>(index)}, 6, 12 * 3600, 13 * 3600};
}

// features that are identically zero in CICIDS2017
inline bool always_zero(const std::string& f) {
    static const std::set<std::string> zero = {"Bwd PSH Flags", "Fwd URG Flags", "Bwd URG Flags", "CWE Flag Count",
                                               "Fwd Avg Bytes/Bulk", "Fwd Avg Packets/Bulk", "Fwd Avg Bulk Rate",
                                               "Bwd Avg Bytes/Bulk", "Bwd Avg Packets/Bulk", "Bwd Avg Bulk Rate"};
    return zero.contains(f);
}

inline std::string format_timestamp(int seconds) {
    const int h = seconds / 3600, m = (seconds / 60) % 60, s = seconds % 60;
    char buf[32];
    std::snprintf(buf, sizeof buf, "4/7/2017 %d:%02d:%02d", h, m, s);
    return buf;
}

} // namespace detail

/// Generates a labelled dataset with the CICIDS2017 column layout.
///
/// Each class draws numeric features from its own Gaussian, truncated to
/// three standard deviations. Under perfect separability the class means of
/// every non-constant feature are spaced far enough apart that the
/// truncated ranges are disjoint; under noisy(rate) the means sit close
/// together and a `rate` fraction of rows take another class's features.
inline Dataset synth_dataset(const SynthSpec& spec) {
    validate(spec);
    Rng rng(spec.seed);
    auto schema = std::make_shared<FeatureSchema>();
    schema->names = cicids_feature_names();
    schema->has_flow_id = schema->has_source_ip = schema->has_destination_ip = true;
    schema->has_source_port = schema->has_destination_port = schema->has_protocol = schema->has_timestamp = true;

    std::vector<double> proportions;
    for (const auto& c : spec.classes) proportions.push_back(c.proportion);
    const auto counts = apportion(spec.row_count, proportions);

    const std::size_t nf = schema->names.size();
    const std::size_t nc = spec.classes.size();
    // per-feature scale spans several orders of magnitude, like real flow stats
    std::vector<double> scale(nf);
    for (std::size_t f = 0; f < nf; ++f) scale[f] = std::pow(10.0, static_cast<double>(f % 5));
    const double gap = spec.separability.perfect ? 3.0 : 0.5;
    const double sd = spec.separability.perfect ? 0.2 : 0.4;

    std::vector<detail::ClassProfile> profiles;
    for (std::size_t c = 0; c < nc; ++c) profiles.push_back(detail::profile_for(spec.classes[c].name, c));

    auto draw_features = [&](std::size_t c, std::vector<double>& values) {
        for (std::size_t f = 0; f < nf; ++f) {
            if (detail::always_zero(schema->names[f])) {
                values[f] = 0.0;
                continue;
            }
            // rotate class order per feature so no single feature is monotone in class index
            const double slot = static_cast<double>((c + f) % nc);
            const double mean = scale[f] * (1.0 + gap * slot);
            const double z = std::clamp(rng.normal(), -3.0, 3.0);
            values[f] = mean + z * sd * scale[f];
        }
    };

    Dataset ds;
    ds.schema = schema;
    ds.source = "synthetic(seed=" + std::to_string(spec.seed) + ")";
    ds.records.reserve(spec.row_count);
    for (std::size_t c = 0; c < nc; ++c) {
        const auto& p = profiles[c];
        for (std::size_t k = 0; k < counts[c]; ++k) {
            FlowRecord r;
            r.schema = schema;
            r.label = spec.classes[c].name;
            r.source_ip = p.source_pool[rng.below(p.source_pool.size())];
            r.destination_ip = p.destination_pool[rng.below(p.destination_pool.size())];
            r.source_port = rng.uniform_int(32768, 60999);
            r.destination_port = p.destination_ports[rng.below(p.destination_ports.size())];
            r.protocol = p.protocol;
            r.timestamp = detail::format_timestamp(rng.uniform_int(p.start_second, p.end_second - 1));
            r.flow_id = r.destination_ip + "-" + r.source_ip + "-" + std::to_string(*r.destination_port) + "-" +
                        std::to_string(*r.source_port) + "-" + std::to_string(*r.protocol);
            std::size_t feature_class = c;
            if (!spec.separability.perfect && nc > 1 && rng.bernoulli(spec.separability.noise_rate))
                feature_class = (c + 1 + rng.below(nc - 1)) % nc;
            r.values.resize(nf);
            draw_features(feature_class, r.values);
            ds.records.push_back(std::move(r));
        }
    }
    rng.shuffle(std::span<FlowRecord>(ds.records));
    refresh_classes(ds);
    return ds;
}

// ---------------------------------------------------------------------------
// Splitting

struct Split {
    Dataset train;
    Dataset test;
};

namespace detail {

inline Dataset subset(const Dataset& ds, std::vector<std::size_t> idx, const std::string& tag) {
    std::sort(idx.begin(), idx.end());
    Dataset out;
    out.schema = ds.schema;
    out.source = ds.source + tag;
    out.records.reserve(idx.size());
    for (auto i : idx) out.records.push_back(ds.records[i]);
    refresh_classes(out);
    return out;
}

} // namespace detail

/// Deterministic partition into train and test. With `stratified`, each
/// class contributes its share of the test set (largest-remainder
/// rounding, at least one record on each side).
inline Split split(const Dataset& ds, double test_fraction, std::uint64_t seed, bool stratified) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("test_fraction", "must lie strictly between 0 and 1");
    Rng rng(seed);
    std::vector<std::size_t> train_idx, test_idx;
    if (!stratified) {
        std::vector<std::size_t> all(ds.size());
        std::iota(all.begin(), all.end(), 0);
        rng.shuffle(std::span<std::size_t>(all));
        const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(ds.size())));
        test_idx.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_test));
        train_idx.assign(all.begin() + static_cast<std::ptrdiff_t>(n_test), all.end());
    } else {
        std::map<std::string, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (!ds.records[i].label) throw ValidationError("label", "stratified split needs every record labelled (row " + std::to_string(i + 1) + ")");
            by_class[*ds.records[i].label].push_back(i);
        }
        std::vector<double> shares;
        for (const auto& [name, idx] : by_class) {
            if (idx.size() < 2)
                throw ValidationError("label", "class '" + name + "' has " + std::to_string(idx.size()) +
                                                   " record(s); stratified split needs at least 2");
            shares.push_back(static_cast<double>(idx.size()) / static_cast<double>(ds.size()));
        }
        const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(ds.size())));
        auto quota = apportion(n_test, shares);
        std::size_t c = 0;
        for (auto& [name, idx] : by_class) {
            const std::size_t q = std::clamp<std::size_t>(quota[c++], 1, idx.size() - 1);
            rng.shuffle(std::span<std::size_t>(idx));
            test_idx.insert(test_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(q));
            train_idx.insert(train_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(q), idx.end());
        }
    }
    return {detail::subset(ds, std::move(train_idx), "#train"), detail::subset(ds, std::move(test_idx), "#test")};
}

} // namespace cyberdef::flows

#endif
