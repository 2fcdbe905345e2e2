#ifndef CYBERDEF_DETECT_PREPROCESS_HPP
#define CYBERDEF_DETECT_PREPROCESS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cyberdef/error.hpp"
#include "cyberdef/flows.hpp"

namespace cyberdef::detect {

/// Whether IPs and timestamps become model inputs. They rank high on
/// CICIDS2017 but encode capture-session artefacts, so excluding them
/// guards against leakage.
enum class IdentifierPolicy { include, exclude };

enum class SlotKind { source_ip, destination_ip, timestamp, source_port, destination_port, protocol, numeric };

inline const char* slot_name(SlotKind k) {
    switch (k) {
    case SlotKind::source_ip: return "source_ip";
    case SlotKind::destination_ip: return "destination_ip";
    case SlotKind::timestamp: return "timestamp";
    case SlotKind::source_port: return "source_port";
    case SlotKind::destination_port: return "destination_port";
    case SlotKind::protocol: return "protocol";
    case SlotKind::numeric: return "numeric";
    }
    return "?";
}

struct NumericStats {
    double median = 0.0;
    double mean = 0.0;
    double stddev = 0.0; // 0 marks a constant feature
};

/// One position of the encoded feature vector.
struct Slot {
    SlotKind kind = SlotKind::numeric;
    std::string name;                          // input field name
    NumericStats stats;                        // numeric-like slots
    std::map<std::string, double> frequencies; // categorical slots
};

struct PreprocessParams {
    IdentifierPolicy policy = IdentifierPolicy::include;
    std::vector<Slot> slots;
    /// Every input field the training schema carried, including identifier
    /// fields the policy left out of `slots`.
    std::vector<std::string> input_fields;

    std::optional<std::size_t> slot_of(const std::string& field) const {
        for (std::size_t i = 0; i < slots.size(); ++i)
            if (slots[i].name == field) return i;
        return std::nullopt;
    }
};

namespace detail {

inline bool categorical(SlotKind k) { return k == SlotKind::source_ip || k == SlotKind::destination_ip; }

inline std::optional<double> optional_int(const std::optional<int>& v) {
    return v ? std::optional<double>(*v) : std::nullopt;
}

/// Raw numeric value of a non-categorical slot; NaN when missing.
inline double raw_value(const Slot& s, const flows::FlowRecord& r, std::size_t feature_pos) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    switch (s.kind) {
    case SlotKind::timestamp: return flows::seconds_of_day(r.timestamp).value_or(nan);
    case SlotKind::source_port: return optional_int(r.source_port).value_or(nan);
    case SlotKind::destination_port: return optional_int(r.destination_port).value_or(nan);
    case SlotKind::protocol: return optional_int(r.protocol).value_or(nan);
    case SlotKind::numeric: return r.values[feature_pos];
    default: return nan;
    }
}

inline double median_of(std::vector<double> v) {
    const std::size_t n = v.size(), mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (n % 2) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return lo + (hi - lo) / 2.0;
}

} // namespace detail

/// Maps records of one schema onto a fitted slot layout. Construction
/// checks the schema once; encode() is then allocation-free.
class Encoder {
public:
    Encoder(const PreprocessParams& params, const flows::FeatureSchema& schema) : params_(&params) {
        for (const auto& s : params.slots) {
            std::size_t pos = SIZE_MAX;
            bool present = true;
            switch (s.kind) {
            case SlotKind::source_ip: present = schema.has_source_ip; break;
            case SlotKind::destination_ip: present = schema.has_destination_ip; break;
            case SlotKind::timestamp: present = schema.has_timestamp; break;
            case SlotKind::source_port: present = schema.has_source_port; break;
            case SlotKind::destination_port: present = schema.has_destination_port; break;
            case SlotKind::protocol: present = schema.has_protocol; break;
            case SlotKind::numeric: {
                auto i = schema.find(s.name);
                present = i.has_value();
                if (i) pos = *i;
                break;
            }
            }
            if (!present) throw SchemaError(s.name, "record schema lacks feature '" + s.name + "'");
            positions_.push_back(pos);
        }
    }

    std::size_t width() const { return params_->slots.size(); }

    void encode(const flows::FlowRecord& r, std::span<double> out) const {
        const auto& slots = params_->slots;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            const Slot& s = slots[i];
            if (detail::categorical(s.kind)) {
                const auto& key = s.kind == SlotKind::source_ip ? r.source_ip : r.destination_ip;
                auto it = s.frequencies.find(key);
                out[i] = it == s.frequencies.end() ? 0.0 : it->second;
                continue;
            }
            double v = detail::raw_value(s, r, positions_[i]);
            if (!std::isfinite(v)) v = s.stats.median;
            out[i] = s.stats.stddev > 0.0 ? (v - s.stats.mean) / s.stats.stddev : 0.0;
        }
    }

    std::vector<double> encode(const flows::FlowRecord& r) const {
        std::vector<double> out(width());
        encode(r, out);
        return out;
    }

private:
    const PreprocessParams* params_;
    std::vector<std::size_t> positions_;
};

/// Learns imputation, scaling and categorical frequency tables from
/// `train` only. Medians use finite values; mean and stddev are taken
/// after imputation.
inline PreprocessParams preprocess_fit(const flows::Dataset& train, IdentifierPolicy policy = IdentifierPolicy::include) {
    if (train.records.empty()) throw ValidationError("train", "cannot fit preprocessing on an empty dataset");
    if (!train.schema) throw ValidationError("train", "dataset has no schema");
    const auto& schema = *train.schema;
    PreprocessParams p;
    p.policy = policy;

    const bool ids = policy == IdentifierPolicy::include;
    auto add = [&](bool present, SlotKind k, bool use) {
        if (!present) return;
        p.input_fields.push_back(slot_name(k));
        if (use) p.slots.push_back({k, slot_name(k), {}, {}});
    };
    add(schema.has_source_ip, SlotKind::source_ip, ids);
    add(schema.has_destination_ip, SlotKind::destination_ip, ids);
    add(schema.has_timestamp, SlotKind::timestamp, ids);
    add(schema.has_source_port, SlotKind::source_port, true);
    add(schema.has_destination_port, SlotKind::destination_port, true);
    add(schema.has_protocol, SlotKind::protocol, true);
    for (const auto& name : schema.names) {
        p.input_fields.push_back(name);
        p.slots.push_back({SlotKind::numeric, name, {}, {}});
    }

    const double n = static_cast<double>(train.records.size());
    std::size_t feature_pos = 0;
    for (auto& s : p.slots) {
        if (detail::categorical(s.kind)) {
            std::map<std::string, std::size_t> counts;
            for (const auto& r : train.records) ++counts[s.kind == SlotKind::source_ip ? r.source_ip : r.destination_ip];
            for (const auto& [k, c] : counts) s.frequencies[k] = static_cast<double>(c) / n;
            continue;
        }
        const std::size_t pos = s.kind == SlotKind::numeric ? feature_pos++ : 0;
        std::vector<double> raw;
        raw.reserve(train.records.size());
        std::vector<double> finite;
        for (const auto& r : train.records) {
            const double v = detail::raw_value(s, r, pos);
            raw.push_back(v);
            if (std::isfinite(v)) finite.push_back(v);
        }
        if (finite.empty()) throw ValidationError(s.name, "feature has no finite training values");
        s.stats.median = detail::median_of(std::move(finite));
        double sum = 0.0;
        for (double& v : raw) {
            if (!std::isfinite(v)) v = s.stats.median;
            sum += v;
        }
        s.stats.mean = sum / n;
        double ss = 0.0;
        for (double v : raw) ss += (v - s.stats.mean) * (v - s.stats.mean);
        s.stats.stddev = std::sqrt(ss / n);
        // tiny spreads are float noise around a constant column
        if (s.stats.stddev <= 1e-12 * std::max(1.0, std::abs(s.stats.mean))) s.stats.stddev = 0.0;
    }
    return p;
}

/// Encodes a single record. Throws SchemaError naming the first feature
/// the record lacks.
inline std::vector<double> preprocess_apply(const PreprocessParams& params, const flows::FlowRecord& record) {
    if (!record.schema) throw SchemaError(params.slots.empty() ? "" : params.slots.front().name, "record has no schema");
    return Encoder(params, *record.schema).encode(record);
}

/// Row-major matrix of encoded records.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

inline Matrix encode_all(const PreprocessParams& params, const flows::Dataset& ds) {
    Matrix m(ds.records.size(), params.slots.size());
    if (ds.records.empty()) return m;
    if (!ds.schema) throw SchemaError("", "dataset has no schema");
    Encoder enc(params, *ds.schema);
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const auto& r = ds.records[i];
        if (r.schema && r.schema != ds.schema) Encoder(params, *r.schema).encode(r, m.row(i));
        else enc.encode(r, m.row(i));
    }
    return m;
}

} // namespace cyberdef::detect

#endif
