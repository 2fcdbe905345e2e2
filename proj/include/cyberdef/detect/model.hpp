#ifndef CYBERDEF_DETECT_MODEL_HPP
#define CYBERDEF_DETECT_MODEL_HPP

// Training with automatic selection among the three classifiers, single and
// batch prediction, and the CRDM model file.

#include <array>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cyberdef/csv.hpp"
#include "cyberdef/detect/classifiers.hpp"
#include "cyberdef/detect/preprocess.hpp"
#include "cyberdef/error.hpp"
#include "cyberdef/evalmetrics.hpp"
#include "cyberdef/flows.hpp"

namespace cyberdef::detect {

struct TrainConfig {
    std::size_t min_class_count = 5;
    double validation_fraction = 0.2;
    IdentifierPolicy policy = IdentifierPolicy::include;
    TreeParams tree;
    KnnParams knn;
};

struct CandidateScore {
    ClassifierKind kind = ClassifierKind::decision_tree;
    double macro_f1 = 0.0;
};

struct TrainedModel {
    PreprocessParams params;
    Classifier classifier;
    std::vector<std::string> class_order;
    std::vector<CandidateScore> selection_report; // tree, naive_bayes, knn
    std::string version;                          // 16 hex digits
    std::uint64_t train_seed = 0;

    ClassifierKind kind() const { return kind_of(classifier); }
};

// ---------------------------------------------------------------------------
// Serialization helpers

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream o;
    o << std::hex << std::setw(16) << std::setfill('0') << v;
    return o.str();
}

namespace detail {

inline SlotKind slot_kind_from(const std::string& s) {
    for (auto k : {SlotKind::source_ip, SlotKind::destination_ip, SlotKind::timestamp, SlotKind::source_port, SlotKind::destination_port,
                   SlotKind::protocol, SlotKind::numeric})
        if (s == slot_name(k)) return k;
    throw FormatError("unknown slot kind '" + s + "'");
}

} // namespace detail

inline Json params_to_json(const PreprocessParams& p) {
    Json slots = Json::array();
    for (const auto& s : p.slots) {
        Json j = {{"kind", slot_name(s.kind)}, {"name", s.name}};
        if (detail::categorical(s.kind)) j["frequencies"] = s.frequencies;
        else j["stats"] = {{"median", s.stats.median}, {"mean", s.stats.mean}, {"stddev", s.stats.stddev}};
        slots.push_back(std::move(j));
    }
    return {{"policy", p.policy == IdentifierPolicy::include ? "include" : "exclude"}, {"input_fields", p.input_fields}, {"slots", slots}};
}

inline PreprocessParams params_from_json(const Json& j) {
    PreprocessParams p;
    const auto policy = j.at("policy").get<std::string>();
    if (policy != "include" && policy != "exclude") throw FormatError("unknown identifier policy '" + policy + "'");
    p.policy = policy == "include" ? IdentifierPolicy::include : IdentifierPolicy::exclude;
    p.input_fields = j.at("input_fields").get<std::vector<std::string>>();
    for (const auto& js : j.at("slots")) {
        Slot s;
        s.kind = detail::slot_kind_from(js.at("kind").get<std::string>());
        s.name = js.at("name").get<std::string>();
        if (detail::categorical(s.kind)) {
            s.frequencies = js.at("frequencies").get<std::map<std::string, double>>();
        } else {
            const auto& st = js.at("stats");
            s.stats = {st.at("median").get<double>(), st.at("mean").get<double>(), st.at("stddev").get<double>()};
        }
        p.slots.push_back(std::move(s));
    }
    return p;
}

/// Everything fitted, i.e. what the version hash covers.
inline Json content_json(const TrainedModel& m) {
    Json sel = Json::array();
    for (const auto& c : m.selection_report) sel.push_back({{"kind", to_string(c.kind)}, {"macro_f1", c.macro_f1}});
    return {{"params", params_to_json(m.params)},
            {"classifier", classifier_to_json(m.classifier)},
            {"class_order", m.class_order},
            {"selection_report", sel}};
}

inline std::string compute_version(const TrainedModel& m) { return hex64(fnv1a64(content_json(m).dump())); }

// ---------------------------------------------------------------------------
// Training

namespace detail {

inline std::vector<std::size_t> label_indices(const flows::Dataset& ds, const std::vector<std::string>& order) {
    std::vector<std::size_t> y;
    y.reserve(ds.records.size());
    for (const auto& r : ds.records)
        y.push_back(static_cast<std::size_t>(std::lower_bound(order.begin(), order.end(), *r.label) - order.begin()));
    return y;
}

inline double validation_macro_f1(const Classifier& c, const Matrix& x, std::span<const std::size_t> y,
                                  const std::vector<std::string>& order) {
    std::vector<std::size_t> pred(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) pred[r] = make_prediction(order, predict_scores(c, x.row(r))).predicted_index();
    return metrics::f1(metrics::confusion_from_indices(order, y, pred)).macro;
}

} // namespace detail

/// Fits preprocessing and all three candidates on the training part of a
/// stratified internal split, then keeps the best validation macro-F1.
/// Ties prefer decision_tree, then naive_bayes, then knn.
inline TrainedModel train(const flows::Dataset& data, const TrainConfig& config, std::uint64_t seed) {
    if (data.records.empty()) throw ValidationError("Label", "training set is empty");
    std::map<std::string, std::size_t> counts;
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const auto& l = data.records[i].label;
        if (!l) throw ValidationError("Label", "record " + std::to_string(i + 1) + " has no label");
        ++counts[*l];
    }
    if (counts.size() < 2)
        throw ValidationError("Label", "only one class ('" + counts.begin()->first + "') present; need at least 2 to learn a boundary");
    for (const auto& [name, n] : counts)
        if (n < config.min_class_count)
            throw ValidationError("Label", "class '" + name + "' has " + std::to_string(n) + " record(s); need at least " +
                                               std::to_string(config.min_class_count));

    TrainedModel m;
    m.train_seed = seed;
    for (const auto& [name, n] : counts) m.class_order.push_back(name);

    const auto parts = flows::split(data, config.validation_fraction, seed, true);
    m.params = preprocess_fit(parts.train, config.policy);
    const Matrix xt = encode_all(m.params, parts.train);
    const Matrix xv = encode_all(m.params, parts.test);
    const auto yt = detail::label_indices(parts.train, m.class_order);
    const auto yv = detail::label_indices(parts.test, m.class_order);
    const std::size_t k = m.class_order.size();

    std::vector<Classifier> candidates;
    DecisionTree tree(config.tree);
    tree.fit(xt, yt, k);
    candidates.emplace_back(std::move(tree));
    GaussianNaiveBayes nb;
    nb.fit(xt, yt, k);
    candidates.emplace_back(std::move(nb));
    KNearest knn(config.knn);
    knn.fit(xt, yt, k, seed ^ 0x6b6e6eULL);
    candidates.emplace_back(std::move(knn));

    std::size_t best = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double f = detail::validation_macro_f1(candidates[i], xv, yv, m.class_order);
        m.selection_report.push_back({kind_of(candidates[i]), f});
        if (f > m.selection_report[best].macro_f1) best = i;
    }
    m.classifier = std::move(candidates[best]);
    m.version = compute_version(m);
    return m;
}

// ---------------------------------------------------------------------------
// Prediction

/// Reusable predictor bound to one record schema. Cheap to copy around;
/// the model must outlive it.
class Predictor {
public:
    Predictor(const TrainedModel& model, const flows::FeatureSchema& schema)
        : model_(&model), encoder_(model.params, schema), buf_(encoder_.width()) {}

    PredictionResult operator()(const flows::FlowRecord& r) {
        encoder_.encode(r, buf_);
        return make_prediction(model_->class_order, predict_scores(model_->classifier, buf_));
    }

private:
    const TrainedModel* model_;
    Encoder encoder_;
    std::vector<double> buf_;
};

inline PredictionResult predict(const TrainedModel& model, const flows::FlowRecord& record) {
    if (!record.schema) throw SchemaError(model.params.slots.empty() ? "" : model.params.slots.front().name, "record has no schema");
    return Predictor(model, *record.schema)(record);
}

inline PredictionResult predict_encoded(const TrainedModel& model, std::span<const double> row) {
    return make_prediction(model.class_order, predict_scores(model.classifier, row));
}

// ---------------------------------------------------------------------------
// Model file
//
//   bytes 0-3    "CRDM"
//   bytes 4-7    format version, u32 little endian
//   bytes 8-15   FNV-1a 64 checksum of the payload, u64 little endian
//   bytes 16-23  payload length, u64 little endian
//   bytes 24-    payload: UTF-8 JSON {format, version, train_seed, content}

inline constexpr std::uint32_t model_format_version = 1;
inline constexpr std::array<char, 4> model_magic = {'C', 'R', 'D', 'M'};

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& in, std::size_t at) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

} // namespace detail

inline std::string serialize_model(const TrainedModel& m) {
    const Json doc = {{"format", "cyberdef-model"}, {"version", m.version}, {"train_seed", m.train_seed}, {"content", content_json(m)}};
    const std::string payload = doc.dump();
    std::string out(model_magic.begin(), model_magic.end());
    detail::put_le<std::uint32_t>(out, model_format_version);
    detail::put_le<std::uint64_t>(out, fnv1a64(payload));
    detail::put_le<std::uint64_t>(out, payload.size());
    return out + payload;
}

inline TrainedModel deserialize_model(const std::string& bytes) {
    constexpr std::size_t header = 24;
    if (bytes.size() < 8 || !std::equal(model_magic.begin(), model_magic.end(), bytes.begin()))
        throw FormatError("not a model file (bad magic)");
    const auto format = detail::get_le<std::uint32_t>(bytes, 4);
    if (format > model_format_version)
        throw UnsupportedVersionError("model file format " + std::to_string(format) + " is newer than supported format " +
                                      std::to_string(model_format_version));
    if (format == 0) throw FormatError("model file format 0 is invalid");
    if (bytes.size() < header) throw FormatError("model file truncated in header");
    const auto checksum = detail::get_le<std::uint64_t>(bytes, 8);
    const auto length = detail::get_le<std::uint64_t>(bytes, 16);
    if (bytes.size() - header != length)
        throw FormatError("model file payload is " + std::to_string(bytes.size() - header) + " bytes, header says " + std::to_string(length));
    const std::string payload = bytes.substr(header);
    if (fnv1a64(payload) != checksum) throw FormatError("model file checksum mismatch (corrupt file)");
    TrainedModel m;
    try {
        const Json doc = Json::parse(payload);
        if (doc.at("format").get<std::string>() != "cyberdef-model") throw FormatError("unexpected payload format tag");
        const auto& c = doc.at("content");
        m.params = params_from_json(c.at("params"));
        m.classifier = classifier_from_json(c.at("classifier"));
        m.class_order = c.at("class_order").get<std::vector<std::string>>();
        for (const auto& s : c.at("selection_report"))
            m.selection_report.push_back({classifier_kind_from(s.at("kind").get<std::string>()), s.at("macro_f1").get<double>()});
        m.train_seed = doc.at("train_seed").get<std::uint64_t>();
        m.version = doc.at("version").get<std::string>();
    } catch (const Json::exception& e) {
        throw FormatError(std::string("model payload malformed: ") + e.what());
    }
    if (compute_version(m) != m.version) throw FormatError("model content does not match its version hash " + m.version);
    return m;
}

inline void save_model(const TrainedModel& m, const std::filesystem::path& path) {
    const std::string bytes = serialize_model(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open model file for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) throw IoError(path.string(), "write failed");
}

inline TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open model file");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return deserialize_model(ss.str());
    } catch (const UnsupportedVersionError& e) {
        throw UnsupportedVersionError(path.string() + ": " + e.what());
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Batch prediction

struct BatchFailure {
    std::size_t row = 0;
    std::string reason;
};

struct BatchReport {
    std::size_t total_items = 0;
    std::size_t predicted_items = 0;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    std::chrono::duration<double> elapsed{0};
    std::vector<BatchFailure> failures;
};

inline std::filesystem::path failures_path(const std::filesystem::path& output) {
    auto p = output;
    p += ".failures.csv";
    return p;
}

inline std::string batch_header(const TrainedModel& m) {
    std::string h = "flow_id,source_ip,destination_ip,predicted";
    for (const auto& c : m.class_order) h += "," + csv::escape("score_" + c);
    return h;
}

/// Streams `input` row by row. Every row yields one output line; rows that
/// fail to parse or encode keep their identifiers and leave the prediction
/// and score fields empty. Reasons go to `<output>.failures.csv`.
inline BatchReport batch_predict(const TrainedModel& model, const std::filesystem::path& input, const std::filesystem::path& output) {
    const auto start = std::chrono::steady_clock::now();
    flows::FlowCsvReader reader(input); // throws before any output exists
    std::ofstream out(output, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(output.string(), "cannot open batch output for writing");
    out << batch_header(model) << "\n";

    std::optional<Predictor> predictor;
    std::string schema_problem;
    try {
        predictor.emplace(model, *reader.schema());
    } catch (const SchemaError& e) {
        schema_problem = e.what();
    }

    BatchReport rep;
    flows::RowResult row;
    while (reader.next(row)) {
        ++rep.total_items;
        std::string reason = row.error;
        std::optional<PredictionResult> pred;
        if (reason.empty()) {
            if (!predictor) reason = "row " + std::to_string(row.row) + ": " + schema_problem;
            else pred = (*predictor)(*row.record);
        }
        out << csv::escape(row.flow_id) << ',' << csv::escape(row.source_ip) << ',' << csv::escape(row.destination_ip) << ',';
        if (pred) {
            out << csv::escape(pred->predicted);
            for (double s : pred->scores) out << ',' << csv::format_double(s);
            ++rep.succeeded;
        } else {
            for (std::size_t i = 0; i < model.class_order.size(); ++i) out << ',';
            rep.failures.push_back({row.row, reason});
            ++rep.failed;
        }
        out << '\n';
    }
    rep.predicted_items = rep.succeeded;
    out.flush();
    if (!out) throw IoError(output.string(), "write failed");

    const auto fpath = failures_path(output);
    std::ofstream fo(fpath, std::ios::binary | std::ios::trunc);
    if (!fo) throw IoError(fpath.string(), "cannot open failure log for writing");
    fo << "row,reason\n";
    for (const auto& f : rep.failures) fo << f.row << ',' << csv::escape(f.reason) << '\n';

    rep.elapsed = std::chrono::steady_clock::now() - start;
    return rep;
}

inline std::string format_batch_report(const BatchReport& r) {
    std::ostringstream o;
    o << "Total Items: " << r.total_items << "\n"
      << "Predicted Items: " << r.predicted_items << "\n"
      << "Succeeded: " << r.succeeded << "\n"
      << "Failed: " << r.failed << "\n"
      << "Elapsed: " << std::fixed << std::setprecision(3) << r.elapsed.count() << " s\n";
    return o.str();
}

inline std::string format_selection_report(const TrainedModel& m) {
    std::ostringstream o;
    o << "candidate        validation_macro_f1\n";
    for (const auto& c : m.selection_report)
        o << std::left << std::setw(17) << to_string(c.kind) << csv::format_double(c.macro_f1) << (c.kind == m.kind() ? "  *" : "") << "\n";
    o << "selected: " << to_string(m.kind()) << "\nversion: " << m.version << "\n";
    return o.str();
}

} // namespace cyberdef::detect

#endif
