#ifndef CYBERDEF_DETECT_CLASSIFIERS_HPP
#define CYBERDEF_DETECT_CLASSIFIERS_HPP

// From-scratch classifiers over encoded feature matrices. Every classifier
// returns one score per class; callers normalize via make_prediction.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "cyberdef/detect/preprocess.hpp"
#include "cyberdef/error.hpp"
#include "cyberdef/random.hpp"

namespace cyberdef::detect {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Decision tree

struct TreeParams {
    int max_depth = 12;
    std::size_t min_leaf = 5;
};

/// Best split found for one node: rows with x[feature] <= threshold go left.
struct SplitChoice {
    std::size_t feature = 0;
    double threshold = 0.0;
    double weighted_gini = 0.0;
};

inline double gini(std::span<const std::size_t> counts, std::size_t total) {
    if (total == 0) return 0.0;
    double s = 0.0;
    for (auto c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        s += p * p;
    }
    return 1.0 - s;
}

/// CART classifier with gini impurity. Leaves score each class as
/// (count + 1) / (n + classes), so no score is ever exactly zero.
class DecisionTree {
public:
    struct Node {
        int feature = -1; // -1 = leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        std::vector<double> scores;
    };

    DecisionTree() = default;
    explicit DecisionTree(TreeParams p) : params_(p) {}

    void fit(const Matrix& x, std::span<const std::size_t> y, std::size_t n_classes) {
        n_classes_ = n_classes;
        nodes_.clear();
        std::vector<std::size_t> rows(x.rows);
        std::iota(rows.begin(), rows.end(), 0);
        build(x, y, rows, 0);
    }

    std::vector<double> predict_scores(std::span<const double> row) const {
        int i = 0;
        while (nodes_[i].feature >= 0) i = row[nodes_[i].feature] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
        return nodes_[i].scores;
    }

    /// Best gini split over `rows`, ties going to the lower feature index
    /// and then the lower threshold. Empty if no split leaves at least
    /// min_leaf rows on each side or none lowers the impurity.
    std::optional<SplitChoice> best_split(const Matrix& x, std::span<const std::size_t> y, std::span<const std::size_t> rows) const {
        const std::size_t n = rows.size();
        std::vector<std::size_t> total(n_classes_, 0);
        for (auto r : rows) ++total[y[r]];
        const double parent = gini(total, n);
        std::optional<SplitChoice> best;
        std::vector<std::pair<double, std::size_t>> col(n);
        std::vector<std::size_t> left(n_classes_), right(n_classes_);
        for (std::size_t f = 0; f < x.cols; ++f) {
            for (std::size_t i = 0; i < n; ++i) col[i] = {x.at(rows[i], f), y[rows[i]]};
            std::sort(col.begin(), col.end());
            std::fill(left.begin(), left.end(), 0);
            right = total;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                ++left[col[i].second];
                --right[col[i].second];
                const std::size_t nl = i + 1, nr = n - nl;
                if (col[i].first == col[i + 1].first) continue;
                if (nl < params_.min_leaf || nr < params_.min_leaf) continue;
                const double w = (static_cast<double>(nl) * gini(left, nl) + static_cast<double>(nr) * gini(right, nr)) /
                                 static_cast<double>(n);
                if (!best || w < best->weighted_gini) {
                    double thr = col[i].first + (col[i + 1].first - col[i].first) / 2.0;
                    if (!(thr < col[i + 1].first)) thr = col[i].first;
                    best = SplitChoice{f, thr, w};
                }
            }
        }
        if (best && !(best->weighted_gini < parent - 1e-12)) best.reset();
        return best;
    }

    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t n_classes() const { return n_classes_; }
    const TreeParams& params() const { return params_; }

    int depth() const { return nodes_.empty() ? 0 : depth_of(0); }

    Json to_json() const {
        Json nodes = Json::array();
        for (const auto& n : nodes_)
            nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}, {"scores", n.scores}});
        return {{"max_depth", params_.max_depth}, {"min_leaf", params_.min_leaf}, {"n_classes", n_classes_}, {"nodes", nodes}};
    }

    static DecisionTree from_json(const Json& j) {
        DecisionTree t({j.at("max_depth").get<int>(), j.at("min_leaf").get<std::size_t>()});
        t.n_classes_ = j.at("n_classes").get<std::size_t>();
        for (const auto& n : j.at("nodes")) {
            Node node{n.at("feature").get<int>(), n.at("threshold").get<double>(), n.at("left").get<int>(), n.at("right").get<int>(),
                      n.at("scores").get<std::vector<double>>()};
            t.nodes_.push_back(std::move(node));
        }
        const int count = static_cast<int>(t.nodes_.size());
        for (const auto& n : t.nodes_) {
            const bool leaf = n.feature < 0;
            if (leaf ? n.scores.size() != t.n_classes_ : (n.left <= 0 || n.left >= count || n.right <= 0 || n.right >= count))
                throw FormatError("decision tree: malformed node table");
        }
        if (t.nodes_.empty()) throw FormatError("decision tree: no nodes");
        return t;
    }

private:
    int build(const Matrix& x, std::span<const std::size_t> y, std::vector<std::size_t>& rows, int depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        std::vector<std::size_t> counts(n_classes_, 0);
        for (auto r : rows) ++counts[y[r]];
        const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
        std::optional<SplitChoice> split;
        if (!pure && depth < params_.max_depth && rows.size() >= 2 * params_.min_leaf) split = best_split(x, y, rows);
        if (!split) {
            auto& leaf = nodes_[id];
            leaf.scores.resize(n_classes_);
            const double denom = static_cast<double>(rows.size() + n_classes_);
            for (std::size_t c = 0; c < n_classes_; ++c) leaf.scores[c] = (static_cast<double>(counts[c]) + 1.0) / denom;
            return id;
        }
        std::vector<std::size_t> l, r;
        for (auto row : rows) (x.at(row, split->feature) <= split->threshold ? l : r).push_back(row);
        rows.clear();
        rows.shrink_to_fit();
        nodes_[id].feature = static_cast<int>(split->feature);
        nodes_[id].threshold = split->threshold;
        const int li = build(x, y, l, depth + 1);
        const int ri = build(x, y, r, depth + 1);
        nodes_[id].left = li;
        nodes_[id].right = ri;
        return id;
    }

    int depth_of(int i) const {
        if (nodes_[i].feature < 0) return 0;
        return 1 + std::max(depth_of(nodes_[i].left), depth_of(nodes_[i].right));
    }

    TreeParams params_;
    std::size_t n_classes_ = 0;
    std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Gaussian naive Bayes

class GaussianNaiveBayes {
public:
    static constexpr double variance_floor = 1e-9;

    void fit(const Matrix& x, std::span<const std::size_t> y, std::size_t n_classes) {
        log_prior_.assign(n_classes, 0.0);
        mean_.assign(n_classes, std::vector<double>(x.cols, 0.0));
        var_.assign(n_classes, std::vector<double>(x.cols, 0.0));
        std::vector<std::size_t> counts(n_classes, 0);
        for (std::size_t r = 0; r < x.rows; ++r) {
            ++counts[y[r]];
            for (std::size_t f = 0; f < x.cols; ++f) mean_[y[r]][f] += x.at(r, f);
        }
        for (std::size_t c = 0; c < n_classes; ++c)
            for (auto& m : mean_[c]) m = counts[c] ? m / static_cast<double>(counts[c]) : 0.0;
        for (std::size_t r = 0; r < x.rows; ++r)
            for (std::size_t f = 0; f < x.cols; ++f) {
                const double d = x.at(r, f) - mean_[y[r]][f];
                var_[y[r]][f] += d * d;
            }
        for (std::size_t c = 0; c < n_classes; ++c) {
            for (auto& v : var_[c]) v = std::max(counts[c] ? v / static_cast<double>(counts[c]) : 0.0, variance_floor);
            log_prior_[c] = counts[c] ? std::log(static_cast<double>(counts[c]) / static_cast<double>(x.rows))
                                      : -std::numeric_limits<double>::infinity();
        }
    }

    /// Posterior class probabilities (softmax of the joint log-likelihoods).
    std::vector<double> predict_scores(std::span<const double> row) const {
        const std::size_t k = log_prior_.size();
        std::vector<double> lp(k);
        for (std::size_t c = 0; c < k; ++c) {
            double s = log_prior_[c];
            for (std::size_t f = 0; f < row.size(); ++f) {
                const double d = row[f] - mean_[c][f];
                s -= 0.5 * std::log(2.0 * std::numbers::pi * var_[c][f]) + d * d / (2.0 * var_[c][f]);
            }
            lp[c] = s;
        }
        const double mx = *std::max_element(lp.begin(), lp.end());
        double z = 0.0;
        for (auto& v : lp) {
            v = std::exp(v - mx);
            z += v;
        }
        for (auto& v : lp) v /= z;
        return lp;
    }

    const std::vector<std::vector<double>>& means() const { return mean_; }
    const std::vector<std::vector<double>>& variances() const { return var_; }

    Json to_json() const {
        Json priors = Json::array();
        for (double p : log_prior_) priors.push_back(std::isfinite(p) ? Json(p) : Json(nullptr));
        return {{"log_prior", priors}, {"mean", mean_}, {"var", var_}};
    }

    static GaussianNaiveBayes from_json(const Json& j) {
        GaussianNaiveBayes nb;
        for (const auto& p : j.at("log_prior")) nb.log_prior_.push_back(p.is_null() ? -std::numeric_limits<double>::infinity() : p.get<double>());
        nb.mean_ = j.at("mean").get<std::vector<std::vector<double>>>();
        nb.var_ = j.at("var").get<std::vector<std::vector<double>>>();
        if (nb.mean_.size() != nb.log_prior_.size() || nb.var_.size() != nb.log_prior_.size())
            throw FormatError("naive bayes: inconsistent class tables");
        return nb;
    }

private:
    std::vector<double> log_prior_;
    std::vector<std::vector<double>> mean_;
    std::vector<std::vector<double>> var_;
};

// ---------------------------------------------------------------------------
// k nearest neighbours

struct KnnParams {
    std::size_t k = 5;
    std::size_t max_reference = 4000; // reference rows kept, stratified
};

/// Euclidean k-NN. Scores are add-one smoothed vote fractions,
/// (votes + 1) / (k + classes). Distance ties go to the earlier reference.
class KNearest {
public:
    KNearest() = default;
    explicit KNearest(KnnParams p) : params_(p) {}

    void fit(const Matrix& x, std::span<const std::size_t> y, std::size_t n_classes, std::uint64_t seed) {
        n_classes_ = n_classes;
        std::vector<std::size_t> keep(x.rows);
        std::iota(keep.begin(), keep.end(), 0);
        if (x.rows > params_.max_reference) {
            // stratified subsample, proportional per class, at least one row each
            std::vector<std::vector<std::size_t>> by_class(n_classes);
            for (std::size_t r = 0; r < x.rows; ++r) by_class[y[r]].push_back(r);
            Rng rng(seed);
            keep.clear();
            for (auto& rows : by_class) {
                if (rows.empty()) continue;
                auto quota = static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * params_.max_reference / x.rows));
                quota = std::clamp<std::size_t>(quota, 1, rows.size());
                rng.shuffle(std::span<std::size_t>(rows));
                keep.insert(keep.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(quota));
            }
            std::sort(keep.begin(), keep.end());
        }
        ref_ = Matrix(keep.size(), x.cols);
        labels_.clear();
        for (std::size_t i = 0; i < keep.size(); ++i) {
            std::copy_n(x.row(keep[i]).begin(), x.cols, ref_.row(i).begin());
            labels_.push_back(y[keep[i]]);
        }
    }

    std::vector<double> predict_scores(std::span<const double> row) const {
        const std::size_t k = std::min(params_.k, ref_.rows);
        std::vector<std::pair<double, std::size_t>> d(ref_.rows);
        for (std::size_t i = 0; i < ref_.rows; ++i) {
            double s = 0.0;
            const auto r = ref_.row(i);
            for (std::size_t f = 0; f < row.size(); ++f) {
                const double t = row[f] - r[f];
                s += t * t;
            }
            d[i] = {s, i};
        }
        std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
        std::vector<double> scores(n_classes_, 1.0);
        for (std::size_t i = 0; i < k; ++i) scores[labels_[d[i].second]] += 1.0;
        for (auto& s : scores) s /= static_cast<double>(k + n_classes_);
        return scores;
    }

    std::size_t reference_rows() const { return ref_.rows; }

    Json to_json() const {
        return {{"k", params_.k}, {"max_reference", params_.max_reference}, {"n_classes", n_classes_},
                {"cols", ref_.cols}, {"labels", labels_}, {"reference", ref_.data}};
    }

    static KNearest from_json(const Json& j) {
        KNearest m({j.at("k").get<std::size_t>(), j.at("max_reference").get<std::size_t>()});
        m.n_classes_ = j.at("n_classes").get<std::size_t>();
        m.labels_ = j.at("labels").get<std::vector<std::size_t>>();
        m.ref_.cols = j.at("cols").get<std::size_t>();
        m.ref_.data = j.at("reference").get<std::vector<double>>();
        m.ref_.rows = m.labels_.size();
        if (m.ref_.rows * m.ref_.cols != m.ref_.data.size()) throw FormatError("knn: reference table size mismatch");
        for (auto l : m.labels_)
            if (l >= m.n_classes_) throw FormatError("knn: label out of range");
        return m;
    }

private:
    KnnParams params_;
    std::size_t n_classes_ = 0;
    Matrix ref_;
    std::vector<std::size_t> labels_;
};

// ---------------------------------------------------------------------------

enum class ClassifierKind { decision_tree, naive_bayes, knn };

inline const char* to_string(ClassifierKind k) {
    switch (k) {
    case ClassifierKind::decision_tree: return "decision_tree";
    case ClassifierKind::naive_bayes: return "naive_bayes";
    case ClassifierKind::knn: return "knn";
    }
    return "?";
}

inline ClassifierKind classifier_kind_from(const std::string& s) {
    if (s == "decision_tree") return ClassifierKind::decision_tree;
    if (s == "naive_bayes") return ClassifierKind::naive_bayes;
    if (s == "knn") return ClassifierKind::knn;
    throw FormatError("unknown classifier kind '" + s + "'");
}

using Classifier = std::variant<DecisionTree, GaussianNaiveBayes, KNearest>;

inline ClassifierKind kind_of(const Classifier& c) { return static_cast<ClassifierKind>(c.index()); }

inline std::vector<double> predict_scores(const Classifier& c, std::span<const double> row) {
    return std::visit([&](const auto& m) { return m.predict_scores(row); }, c);
}

inline Json classifier_to_json(const Classifier& c) {
    return {{"kind", to_string(kind_of(c))}, {"state", std::visit([](const auto& m) { return m.to_json(); }, c)}};
}

inline Classifier classifier_from_json(const Json& j) {
    const auto& state = j.at("state");
    switch (classifier_kind_from(j.at("kind").get<std::string>())) {
    case ClassifierKind::decision_tree: return DecisionTree::from_json(state);
    case ClassifierKind::naive_bayes: return GaussianNaiveBayes::from_json(state);
    case ClassifierKind::knn: return KNearest::from_json(state);
    }
    throw FormatError("unreachable classifier kind");
}

} // namespace cyberdef::detect

#endif
