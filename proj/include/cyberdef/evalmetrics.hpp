#ifndef CYBERDEF_EVALMETRICS_HPP
#define CYBERDEF_EVALMETRICS_HPP

// Multiclass evaluation: confusion matrix with a Dropped column, micro and
// macro F1, one-vs-rest ROC AUC and average precision, and log loss.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <memory>
#include <numeric>
#include <sstream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cyberdef/error.hpp"

namespace cyberdef {

/// Scores over `classes` (same order), and the argmax class. Ties in the
/// argmax go to the lexicographically smallest class name.
struct PredictionResult {
    std::vector<std::string> classes;
    std::vector<double> scores;
    std::string predicted;

    std::size_t predicted_index() const {
        return static_cast<std::size_t>(std::find(classes.begin(), classes.end(), predicted) - classes.begin());
    }
    double top_score() const { return scores.empty() ? 0.0 : scores[predicted_index()]; }
};

/// Normalizes `scores` to sum to 1 and picks the argmax.
inline PredictionResult make_prediction(const std::vector<std::string>& classes, std::vector<double> scores) {
    double sum = 0.0;
    for (double s : scores) sum += s;
    if (sum > 0.0 && std::isfinite(sum)) {
        for (double& s : scores) s /= sum;
    } else {
        for (double& s : scores) s = 1.0 / static_cast<double>(scores.size());
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best] || (scores[i] == scores[best] && classes[i] < classes[best])) best = i;
    return {classes, std::move(scores), classes.empty() ? std::string() : classes[best]};
}

namespace metrics {

struct ConfusionMatrix {
    std::vector<std::string> class_order;
    std::vector<std::vector<std::size_t>> counts; // [true][predicted]
    std::vector<std::size_t> dropped;             // per true class

    explicit ConfusionMatrix(std::vector<std::string> order = {})
        : class_order(std::move(order)),
          counts(class_order.size(), std::vector<std::size_t>(class_order.size(), 0)),
          dropped(class_order.size(), 0) {}

    std::size_t size() const { return class_order.size(); }

    std::size_t total() const {
        std::size_t t = 0;
        for (std::size_t i = 0; i < size(); ++i) t += row_total(i);
        return t;
    }
    std::size_t row_total(std::size_t i) const {
        return std::accumulate(counts[i].begin(), counts[i].end(), std::size_t{0}) + dropped[i];
    }
    bool diagonal() const {
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = 0; j < size(); ++j)
                if (i != j && counts[i][j]) return false;
        return true;
    }
};

namespace detail {

inline std::size_t class_index(const std::vector<std::string>& order, const std::string& name) {
    auto it = std::find(order.begin(), order.end(), name);
    if (it == order.end()) throw MetricError("unknown class label '" + name + "'");
    return static_cast<std::size_t>(it - order.begin());
}

} // namespace detail

/// Tallies true x predicted classes; `dropped_truths` are the true labels of
/// records that failed before a prediction was made.
inline ConfusionMatrix confusion(const std::vector<std::string>& class_order, std::span<const PredictionResult> preds,
                                 std::span<const std::string> truths, std::span<const std::string> dropped_truths = {}) {
    if (preds.size() != truths.size())
        throw MetricError("confusion: " + std::to_string(preds.size()) + " predictions but " + std::to_string(truths.size()) + " labels");
    ConfusionMatrix cm(class_order);
    for (std::size_t r = 0; r < preds.size(); ++r)
        ++cm.counts[detail::class_index(class_order, truths[r])][detail::class_index(class_order, preds[r].predicted)];
    for (const auto& t : dropped_truths) ++cm.dropped[detail::class_index(class_order, t)];
    return cm;
}

/// Index-based variant used on hot paths (model selection, importance).
inline ConfusionMatrix confusion_from_indices(const std::vector<std::string>& class_order, std::span<const std::size_t> truths,
                                              std::span<const std::size_t> predicted) {
    if (truths.size() != predicted.size()) throw MetricError("confusion: label/prediction length mismatch");
    ConfusionMatrix cm(class_order);
    for (std::size_t r = 0; r < truths.size(); ++r) ++cm.counts[truths[r]][predicted[r]];
    return cm;
}

struct F1Scores {
    double micro = 0.0;
    double macro = 0.0;
    std::vector<double> per_class;
};

/// Per-class F1 from the matrix; dropped records count as false negatives.
/// A class with no true and no predicted members scores 0.
inline F1Scores f1(const ConfusionMatrix& cm) {
    const std::size_t k = cm.size();
    if (cm.total() == 0) throw MetricError("f1: confusion matrix is empty");
    F1Scores out;
    std::size_t tp_all = 0, fp_all = 0, fn_all = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const std::size_t tp = cm.counts[c][c];
        std::size_t fp = 0, fn = cm.dropped[c];
        for (std::size_t o = 0; o < k; ++o) {
            if (o == c) continue;
            fp += cm.counts[o][c];
            fn += cm.counts[c][o];
        }
        tp_all += tp;
        fp_all += fp;
        fn_all += fn;
        const double denom = 2.0 * tp + fp + fn;
        out.per_class.push_back(denom > 0 ? 2.0 * tp / denom : 0.0);
    }
    const double micro_denom = 2.0 * tp_all + fp_all + fn_all;
    out.micro = micro_denom > 0 ? 2.0 * tp_all / micro_denom : 0.0;
    out.macro = k ? std::accumulate(out.per_class.begin(), out.per_class.end(), 0.0) / static_cast<double>(k) : 0.0;
    return out;
}

/// Binary ROC AUC by the Mann-Whitney rank statistic; ties count 1/2.
inline double binary_roc_auc(std::span<const double> scores, std::span<const bool> positive) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    double rank_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t m = i; m < j; ++m)
            if (positive[order[m]]) {
                rank_sum += avg_rank;
                ++pos;
            }
        i = j;
    }
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) throw MetricError("roc_auc: need at least one positive and one negative");
    const double p = static_cast<double>(pos);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

/// Average precision: sum over descending distinct score thresholds of
/// (recall increase) x (precision at that threshold).
inline double average_precision(std::span<const double> scores, std::span<const bool> positive) {
    const std::size_t n = scores.size();
    const auto total_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
    if (total_pos == 0) throw MetricError("pr_auc: no positive records");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
    double ap = 0.0, prev_recall = 0.0;
    std::size_t tp = 0, seen = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            if (positive[order[j]]) ++tp;
            ++j;
        }
        seen = j;
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(seen);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return ap;
}

/// Per-class one-vs-rest values and their unweighted mean.
struct OvrScore {
    double macro = 0.0;
    std::vector<double> per_class;
};

namespace detail {

template <typename BinaryMetric>
OvrScore one_vs_rest(std::span<const std::vector<double>> scores, std::span<const std::size_t> truths,
                     const std::vector<std::string>& class_order, BinaryMetric metric, const char* what) {
    if (scores.size() != truths.size()) throw MetricError(std::string(what) + ": score/label length mismatch");
    OvrScore out;
    std::vector<double> col(scores.size());
    std::unique_ptr<bool[]> pos(new bool[scores.size()]);
    for (std::size_t c = 0; c < class_order.size(); ++c) {
        for (std::size_t r = 0; r < scores.size(); ++r) {
            col[r] = scores[r][c];
            pos[r] = truths[r] == c;
        }
        try {
            out.per_class.push_back(metric(std::span<const double>(col), std::span<const bool>(pos.get(), scores.size())));
        } catch (const MetricError& e) {
            throw MetricError(std::string(what) + ": class '" + class_order[c] + "' is undefined (" + e.what() + ")");
        }
    }
    out.macro = out.per_class.empty() ? 0.0
                                      : std::accumulate(out.per_class.begin(), out.per_class.end(), 0.0) /
                                            static_cast<double>(out.per_class.size());
    return out;
}

} // namespace detail

inline OvrScore roc_auc(std::span<const std::vector<double>> scores, std::span<const std::size_t> truths,
                        const std::vector<std::string>& class_order) {
    return detail::one_vs_rest(scores, truths, class_order, binary_roc_auc, "roc_auc");
}

inline OvrScore pr_auc(std::span<const std::vector<double>> scores, std::span<const std::size_t> truths,
                       const std::vector<std::string>& class_order) {
    return detail::one_vs_rest(scores, truths, class_order, average_precision, "pr_auc");
}

inline constexpr double log_loss_eps = 1e-15;

/// Mean of -ln(score of the true class), scores clipped to [eps, 1-eps].
inline double log_loss(std::span<const std::vector<double>> scores, std::span<const std::size_t> truths) {
    if (scores.size() != truths.size()) throw MetricError("log_loss: score/label length mismatch");
    if (scores.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t r = 0; r < scores.size(); ++r) {
        const double p = std::clamp(scores[r][truths[r]], log_loss_eps, 1.0 - log_loss_eps);
        sum -= std::log(p);
    }
    return sum / static_cast<double>(scores.size());
}

/// Fixed-width table with a trailing Dropped column.
inline std::string format_confusion(const ConfusionMatrix& cm) {
    std::size_t w = std::string("True label").size();
    for (const auto& c : cm.class_order) w = std::max(w, c.size());
    std::size_t cw = std::string("Dropped").size();
    for (const auto& c : cm.class_order) cw = std::max(cw, c.size());
    for (const auto& row : cm.counts)
        for (auto v : row) cw = std::max(cw, std::to_string(v).size());
    std::ostringstream o;
    o << std::left << std::setw(static_cast<int>(w)) << "True label";
    for (const auto& c : cm.class_order) o << "  " << std::right << std::setw(static_cast<int>(cw)) << c;
    o << "  " << std::setw(static_cast<int>(cw)) << "Dropped" << "\n";
    for (std::size_t i = 0; i < cm.size(); ++i) {
        o << std::left << std::setw(static_cast<int>(w)) << cm.class_order[i];
        for (auto v : cm.counts[i]) o << "  " << std::right << std::setw(static_cast<int>(cw)) << v;
        o << "  " << std::right << std::setw(static_cast<int>(cw)) << cm.dropped[i] << "\n";
    }
    return o.str();
}

} // namespace metrics
} // namespace cyberdef

#endif
