#ifndef CYBERDEF_DETECT_EVALUATE_HPP
#define CYBERDEF_DETECT_EVALUATE_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cyberdef/detect/model.hpp"
#include "cyberdef/evalmetrics.hpp"
#include "cyberdef/random.hpp"

namespace cyberdef::detect {

struct FeatureImportance {
    std::string feature;
    double score = 0.0; // mean macro-F1 drop
};

namespace detail {

inline std::vector<std::size_t> truth_indices(const TrainedModel& m, const flows::Dataset& ds) {
    std::vector<std::size_t> y;
    y.reserve(ds.records.size());
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const auto& l = ds.records[i].label;
        if (!l) throw ValidationError("Label", "record " + std::to_string(i + 1) + " has no label");
        auto it = std::find(m.class_order.begin(), m.class_order.end(), *l);
        if (it == m.class_order.end()) throw MetricError("unknown class label '" + *l + "'");
        y.push_back(static_cast<std::size_t>(it - m.class_order.begin()));
    }
    return y;
}

inline double macro_f1_on(const TrainedModel& m, const Matrix& x, std::span<const std::size_t> y) {
    std::vector<std::size_t> pred(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) pred[r] = predict_encoded(m, x.row(r)).predicted_index();
    return metrics::f1(metrics::confusion_from_indices(m.class_order, y, pred)).macro;
}

} // namespace detail

/// Permutation importance over the model's input fields. Each field's
/// encoded column is shuffled (seeded per field and repeat) and the drop in
/// macro-F1 averaged over `repeats`. Fields the model never reads score 0.
/// `max_rows` > 0 evaluates on a seeded subsample of that size.
inline std::vector<FeatureImportance> permutation_importance(const TrainedModel& model, const flows::Dataset& data, std::size_t repeats,
                                                             std::uint64_t seed, std::size_t max_rows = 0) {
    if (repeats < 1) throw ValidationError("repeats", "must be at least 1");
    const flows::Dataset* ds = &data;
    flows::Dataset sample;
    if (max_rows > 0 && data.records.size() > max_rows) {
        std::vector<std::size_t> idx(data.records.size());
        std::iota(idx.begin(), idx.end(), 0);
        Rng rng(seed ^ 0x5a4d504cULL);
        rng.shuffle(std::span<std::size_t>(idx));
        idx.resize(max_rows);
        sample = flows::detail::subset(data, std::move(idx), "#importance");
        ds = &sample;
    }
    const Matrix base = encode_all(model.params, *ds);
    const auto y = detail::truth_indices(model, *ds);
    const double baseline = detail::macro_f1_on(model, base, y);

    std::vector<FeatureImportance> out;
    Matrix work = base;
    for (std::size_t fi = 0; fi < model.params.input_fields.size(); ++fi) {
        const auto& field = model.params.input_fields[fi];
        const auto slot = model.params.slot_of(field);
        if (!slot) {
            out.push_back({field, 0.0});
            continue;
        }
        const std::size_t c = *slot;
        std::vector<double> column(base.rows);
        for (std::size_t r = 0; r < base.rows; ++r) column[r] = base.at(r, c);
        const bool constant = std::all_of(column.begin(), column.end(), [&](double v) { return v == column.front(); });
        if (constant) {
            out.push_back({field, 0.0});
            continue;
        }
        double total = 0.0;
        for (std::size_t rep = 0; rep < repeats; ++rep) {
            Rng rng(seed + 0x9e3779b97f4a7c15ULL * (fi + 1) + rep);
            std::vector<double> shuffled = column;
            rng.shuffle(std::span<double>(shuffled));
            for (std::size_t r = 0; r < base.rows; ++r) work.at(r, c) = shuffled[r];
            total += baseline - detail::macro_f1_on(model, work, y);
        }
        for (std::size_t r = 0; r < base.rows; ++r) work.at(r, c) = column[r];
        out.push_back({field, total / static_cast<double>(repeats)});
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.score != b.score ? a.score > b.score : a.feature < b.feature;
    });
    return out;
}

struct EvalReport {
    std::string model_version;
    metrics::ConfusionMatrix confusion;
    double f1_micro = 0.0;
    double f1_macro = 0.0;
    std::vector<double> f1_per_class;
    double roc_auc_macro_ovr = 0.0;
    double pr_auc_macro_ovr = 0.0;
    double log_loss = 0.0;
    std::vector<FeatureImportance> importances;
};

struct EvalOptions {
    std::size_t importance_repeats = 3;
    std::size_t importance_max_rows = 5000; // 0 = all rows
    std::uint64_t seed = 1;
    bool importance = true;
};

/// Scores `data` with `model`. `dropped_truths` are labels of records that
/// could not be parsed; they count in the Dropped column.
inline EvalReport evaluate(const TrainedModel& model, const flows::Dataset& data, std::span<const std::string> dropped_truths = {},
                           const EvalOptions& opt = {}) {
    EvalReport rep;
    rep.model_version = model.version;
    const auto y = detail::truth_indices(model, data);
    std::vector<PredictionResult> preds;
    std::vector<std::vector<double>> scores;
    std::vector<std::string> truths;
    if (!data.records.empty()) {
        const Matrix x = encode_all(model.params, data);
        for (std::size_t r = 0; r < x.rows; ++r) {
            preds.push_back(predict_encoded(model, x.row(r)));
            scores.push_back(preds.back().scores);
            truths.push_back(*data.records[r].label);
        }
    }
    rep.confusion = metrics::confusion(model.class_order, preds, truths, dropped_truths);
    const auto f = metrics::f1(rep.confusion);
    rep.f1_micro = f.micro;
    rep.f1_macro = f.macro;
    rep.f1_per_class = f.per_class;
    rep.roc_auc_macro_ovr = metrics::roc_auc(scores, y, model.class_order).macro;
    rep.pr_auc_macro_ovr = metrics::pr_auc(scores, y, model.class_order).macro;
    rep.log_loss = metrics::log_loss(scores, y);
    if (opt.importance) rep.importances = permutation_importance(model, data, opt.importance_repeats, opt.seed, opt.importance_max_rows);
    return rep;
}

/// Streams a labelled flow CSV: parseable rows are evaluated, malformed
/// rows are dropped and counted under their label.
inline EvalReport evaluate_file(const TrainedModel& model, const std::filesystem::path& path, const EvalOptions& opt = {}) {
    flows::FlowCsvReader reader(path);
    if (!reader.has_label()) throw ValidationError("Label", path.string() + " has no Label column");
    flows::Dataset ds;
    ds.schema = reader.schema();
    ds.source = path.string();
    std::vector<std::string> dropped;
    flows::RowResult row;
    while (reader.next(row)) {
        if (!row.label) throw ValidationError("Label", "row " + std::to_string(row.row) + " has no label");
        if (row.record) ds.records.push_back(std::move(*row.record));
        else dropped.push_back(*row.label);
    }
    flows::refresh_classes(ds);
    return evaluate(model, ds, dropped, opt);
}

inline Json eval_report_json(const EvalReport& r) {
    Json imp = Json::array();
    for (const auto& f : r.importances) imp.push_back({{"feature", f.feature}, {"score", f.score}});
    return {{"report", "cyberdef-eval"},
            {"schema_version", 1},
            {"model_version", r.model_version},
            {"class_order", r.confusion.class_order},
            {"confusion", {{"counts", r.confusion.counts}, {"dropped", r.confusion.dropped}}},
            {"records", r.confusion.total()},
            {"f1_micro", r.f1_micro},
            {"f1_macro", r.f1_macro},
            {"f1_per_class", r.f1_per_class},
            {"roc_auc_macro_ovr", r.roc_auc_macro_ovr},
            {"pr_auc_macro_ovr", r.pr_auc_macro_ovr},
            {"log_loss", r.log_loss},
            {"importances", imp}};
}

inline void write_eval_report(const EvalReport& r, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open report for writing");
    out << eval_report_json(r).dump(2) << "\n";
    if (!out.flush()) throw IoError(path.string(), "write failed");
}

inline std::string format_eval_summary(const EvalReport& r, std::size_t top_features = 10) {
    std::ostringstream o;
    o << metrics::format_confusion(r.confusion) << "\n"
      << "f1_micro: " << csv::format_double(r.f1_micro) << "\n"
      << "f1_macro: " << csv::format_double(r.f1_macro) << "\n"
      << "roc_auc_macro_ovr: " << csv::format_double(r.roc_auc_macro_ovr) << "\n"
      << "pr_auc_macro_ovr: " << csv::format_double(r.pr_auc_macro_ovr) << "\n"
      << "log_loss: " << csv::format_double(r.log_loss) << "\n";
    if (!r.importances.empty()) {
        o << "top features (mean macro-F1 drop):\n";
        for (std::size_t i = 0; i < std::min(top_features, r.importances.size()); ++i)
            o << "  " << r.importances[i].feature << " " << csv::format_double(r.importances[i].score) << "\n";
    }
    return o.str();
}

} // namespace cyberdef::detect

#endif
