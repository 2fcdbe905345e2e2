#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cyberdef/detect/classifiers.hpp"

using namespace cyberdef;
using namespace cyberdef::detect;

namespace {

struct Tiny {
    Matrix x;
    std::vector<std::size_t> y;
    std::size_t classes = 0;
};

Tiny random_tiny(Rng& rng) {
    Tiny t;
    const std::size_t rows = 4 + rng.below(12), cols = 1 + rng.below(3);
    t.classes = 2 + rng.below(2);
    t.x = Matrix(rows, cols);
    for (auto& v : t.x.data) v = static_cast<double>(rng.below(5)); // small alphabet forces ties
    for (std::size_t r = 0; r < rows; ++r) t.y.push_back(rng.below(t.classes));
    return t;
}

double oracle_gini(const std::vector<std::size_t>& labels, std::size_t classes) {
    if (labels.empty()) return 0.0;
    std::vector<double> c(classes, 0.0);
    for (auto l : labels) c[l] += 1.0;
    double s = 0;
    for (double v : c) s += (v / labels.size()) * (v / labels.size());
    return 1.0 - s;
}

/// Tries every feature and every midpoint between consecutive distinct
/// values, partitioning the rows directly.
std::optional<SplitChoice> oracle_split(const Tiny& t, std::size_t min_leaf) {
    const double parent = oracle_gini(t.y, t.classes);
    std::optional<SplitChoice> best;
    for (std::size_t f = 0; f < t.x.cols; ++f) {
        std::vector<double> vals;
        for (std::size_t r = 0; r < t.x.rows; ++r) vals.push_back(t.x.at(r, f));
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            const double thr = (vals[i] + vals[i + 1]) / 2.0;
            std::vector<std::size_t> l, r;
            for (std::size_t row = 0; row < t.x.rows; ++row) (t.x.at(row, f) <= thr ? l : r).push_back(t.y[row]);
            if (l.size() < min_leaf || r.size() < min_leaf) continue;
            const double w = (l.size() * oracle_gini(l, t.classes) + r.size() * oracle_gini(r, t.classes)) / t.x.rows;
            if (!best || w < best->weighted_gini - 1e-12) best = SplitChoice{f, thr, w};
        }
    }
    if (best && !(best->weighted_gini < parent - 1e-12)) best.reset();
    return best;
}

Matrix column(std::vector<double> v) {
    Matrix m(v.size(), 1);
    m.data = std::move(v);
    return m;
}

} // namespace

TEST(Gini, KnownValues) {
    const std::size_t pure[] = {4, 0};
    const std::size_t even[] = {2, 2};
    const std::size_t three[] = {1, 1, 1};
    EXPECT_EQ(gini(pure, 4), 0.0);
    EXPECT_DOUBLE_EQ(gini(even, 4), 0.5);
    EXPECT_DOUBLE_EQ(gini(three, 3), 2.0 / 3.0);
}

TEST(Tree, BestSplitMatchesExhaustiveOracle) {
    Rng rng(20240);
    for (int trial = 0; trial < 50; ++trial) {
        const auto t = random_tiny(rng);
        for (std::size_t min_leaf : {1u, 2u}) {
            DecisionTree tree({12, min_leaf});
            tree.fit(t.x, t.y, t.classes);
            std::vector<std::size_t> rows(t.x.rows);
            std::iota(rows.begin(), rows.end(), 0);
            const auto got = tree.best_split(t.x, t.y, rows);
            const auto want = oracle_split(t, min_leaf);
            ASSERT_EQ(got.has_value(), want.has_value()) << "trial " << trial;
            if (!want) continue;
            EXPECT_NEAR(got->weighted_gini, want->weighted_gini, 1e-12) << "trial " << trial;
            EXPECT_EQ(got->feature, want->feature) << "trial " << trial;
            EXPECT_EQ(got->threshold, want->threshold) << "trial " << trial;
        }
    }
}

TEST(Tree, DepthOneOnBinaryFeature) {
    const auto x = column({0, 0, 0, 1, 1, 1});
    const std::vector<std::size_t> y = {0, 0, 0, 1, 1, 1};
    DecisionTree tree({12, 1});
    tree.fit(x, y, 2);
    EXPECT_EQ(tree.depth(), 1);
    ASSERT_EQ(tree.nodes().size(), 3u);
    EXPECT_EQ(tree.nodes()[0].threshold, 0.5);
    const double zero[] = {0}, one[] = {1};
    EXPECT_EQ(tree.predict_scores(zero), (std::vector<double>{4.0 / 5.0, 1.0 / 5.0}));
    EXPECT_EQ(tree.predict_scores(one), (std::vector<double>{1.0 / 5.0, 4.0 / 5.0}));
}

TEST(Tree, MinLeafAndDepthLimitsHold) {
    Rng rng(5);
    Matrix x(400, 3);
    std::vector<std::size_t> y(400);
    for (std::size_t r = 0; r < 400; ++r) {
        for (std::size_t c = 0; c < 3; ++c) x.at(r, c) = rng.normal();
        y[r] = rng.below(3);
    }
    DecisionTree tree({4, 7});
    tree.fit(x, y, 3);
    EXPECT_LE(tree.depth(), 4);
    // count rows landing in each leaf
    std::map<const std::vector<double>*, int> hits;
    for (std::size_t r = 0; r < 400; ++r) {
        int i = 0;
        while (tree.nodes()[i].feature >= 0)
            i = x.at(r, tree.nodes()[i].feature) <= tree.nodes()[i].threshold ? tree.nodes()[i].left : tree.nodes()[i].right;
        ++hits[&tree.nodes()[i].scores];
    }
    for (const auto& [leaf, n] : hits) EXPECT_GE(n, 7);
    for (const auto& n : tree.nodes()) {
        if (n.feature < 0) {
            EXPECT_NEAR(std::accumulate(n.scores.begin(), n.scores.end(), 0.0), 1.0, 1e-12);
        }
    }
}

TEST(Tree, MemorizesDistinctPointsWithUnitLeaves) {
    Rng rng(8);
    Matrix x(60, 2);
    std::vector<std::size_t> y(60);
    for (std::size_t r = 0; r < 60; ++r) {
        x.at(r, 0) = static_cast<double>(r);
        x.at(r, 1) = rng.unit();
        y[r] = rng.below(3);
    }
    DecisionTree tree({64, 1});
    tree.fit(x, y, 3);
    for (std::size_t r = 0; r < 60; ++r) {
        const auto s = tree.predict_scores(x.row(r));
        EXPECT_EQ(static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin()), y[r]);
    }
}

TEST(Tree, JsonRoundTripAndCorruption) {
    Rng rng(1);
    const auto t = random_tiny(rng);
    DecisionTree tree({12, 1});
    tree.fit(t.x, t.y, t.classes);
    const auto back = DecisionTree::from_json(tree.to_json());
    for (std::size_t r = 0; r < t.x.rows; ++r) EXPECT_EQ(back.predict_scores(t.x.row(r)), tree.predict_scores(t.x.row(r)));
    auto j = tree.to_json();
    j["nodes"] = Json::array();
    EXPECT_THROW(DecisionTree::from_json(j), FormatError);
}

TEST(NaiveBayes, FourRowHandOracle) {
    const auto x = column({0, 2, 4, 6});
    const std::vector<std::size_t> y = {0, 0, 1, 1};
    GaussianNaiveBayes nb;
    nb.fit(x, y, 2);
    EXPECT_EQ(nb.means()[0][0], 1.0);
    EXPECT_EQ(nb.means()[1][0], 5.0);
    EXPECT_EQ(nb.variances()[0][0], 1.0);
    EXPECT_EQ(nb.variances()[1][0], 1.0);
    const double mid[] = {3}, two[] = {2};
    const auto s = nb.predict_scores(mid);
    EXPECT_NEAR(s[0], 0.5, 1e-9);
    // log-likelihoods differ by (9 - 1) / 2 = 4 at x = 2
    const auto s2 = nb.predict_scores(two);
    EXPECT_NEAR(s2[0], 1.0 / (1.0 + std::exp(-4.0)), 1e-9);
    EXPECT_NEAR(s2[0] + s2[1], 1.0, 1e-12);
}

TEST(NaiveBayes, ConstantFeatureUsesVarianceFloor) {
    const auto x = column({3, 3, 3, 3});
    const std::vector<std::size_t> y = {0, 0, 1, 1};
    GaussianNaiveBayes nb;
    nb.fit(x, y, 3); // class 2 absent
    EXPECT_EQ(nb.variances()[0][0], GaussianNaiveBayes::variance_floor);
    const double v[] = {3};
    const auto s = nb.predict_scores(v);
    EXPECT_NEAR(s[0], 0.5, 1e-12);
    EXPECT_EQ(s[2], 0.0);
    const auto back = GaussianNaiveBayes::from_json(nb.to_json());
    EXPECT_EQ(back.predict_scores(v), s);
}

TEST(Knn, SmoothedVoteFractions) {
    const auto x = column({0, 1, 2, 10, 11});
    const std::vector<std::size_t> y = {0, 0, 1, 1, 1};
    KNearest knn({3, 4000});
    knn.fit(x, y, 2, 1);
    const double near0[] = {0.2}, far[] = {10.5};
    EXPECT_EQ(knn.predict_scores(near0), (std::vector<double>{3.0 / 5.0, 2.0 / 5.0}));
    EXPECT_EQ(knn.predict_scores(far), (std::vector<double>{1.0 / 5.0, 4.0 / 5.0}));
}

TEST(Knn, ReferenceCapIsStratified) {
    Matrix x(1000, 1);
    std::vector<std::size_t> y(1000);
    for (std::size_t r = 0; r < 1000; ++r) {
        x.at(r, 0) = static_cast<double>(r);
        y[r] = r < 990 ? 0 : 1;
    }
    KNearest knn({5, 100});
    knn.fit(x, y, 2, 3);
    EXPECT_EQ(knn.reference_rows(), 100u);
    const auto j = knn.to_json();
    const auto labels = j["labels"].get<std::vector<std::size_t>>();
    EXPECT_EQ(std::count(labels.begin(), labels.end(), 1u), 1);
    const auto back = KNearest::from_json(j);
    const double q[] = {995};
    EXPECT_EQ(back.predict_scores(q), knn.predict_scores(q));
}

TEST(Variant, KindRoundTrip) {
    for (auto k : {ClassifierKind::decision_tree, ClassifierKind::naive_bayes, ClassifierKind::knn})
        EXPECT_EQ(classifier_kind_from(to_string(k)), k);
    const auto x = column({0, 1, 2, 3});
    const std::vector<std::size_t> y = {0, 0, 1, 1};
    GaussianNaiveBayes nb;
    nb.fit(x, y, 2);
    const Classifier c = nb;
    const auto back = classifier_from_json(classifier_to_json(c));
    EXPECT_EQ(kind_of(back), ClassifierKind::naive_bayes);
    const double q[] = {1.5};
    EXPECT_EQ(predict_scores(back, q), predict_scores(c, q));
}
