#include <gtest/gtest.h>

#include <cmath>

#include "cyberdef/evalmetrics.hpp"
#include "cyberdef/random.hpp"

using namespace cyberdef;
using namespace cyberdef::metrics;

namespace {

const std::vector<std::string> abc = {"BENIGN", "FTP-Patator", "SSH-Patator"};

/// Counts every positive/negative pair directly.
double brute_auc(const std::vector<double>& s, const std::vector<bool>& pos) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (pos[i] && !pos[j]) {
                pairs += 1;
                wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
            }
    return wins / pairs;
}

double auc(const std::vector<double>& s, const std::vector<bool>& pos) {
    std::unique_ptr<bool[]> p(new bool[pos.size()]);
    std::copy(pos.begin(), pos.end(), p.get());
    return binary_roc_auc(s, std::span<const bool>(p.get(), pos.size()));
}

double ap(const std::vector<double>& s, const std::vector<bool>& pos) {
    std::unique_ptr<bool[]> p(new bool[pos.size()]);
    std::copy(pos.begin(), pos.end(), p.get());
    return average_precision(s, std::span<const bool>(p.get(), pos.size()));
}

} // namespace

TEST(Confusion, HandTally) {
    const std::vector<std::string> order = {"A", "B"};
    const std::vector<PredictionResult> preds = {make_prediction(order, {1, 0}), make_prediction(order, {0, 1}),
                                                 make_prediction(order, {0, 1})};
    const std::vector<std::string> truths = {"A", "A", "B"};
    const auto cm = confusion(order, preds, truths);
    EXPECT_EQ(cm.counts, (std::vector<std::vector<std::size_t>>{{1, 1}, {0, 1}}));
    EXPECT_EQ(cm.dropped, (std::vector<std::size_t>{0, 0}));
}

TEST(Confusion, ReferenceDiagonalAndTotals) {
    std::vector<PredictionResult> preds;
    std::vector<std::string> truths;
    const std::size_t counts[] = {43166, 786, 537};
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < counts[c]; ++i) {
            std::vector<double> s(3, 0.0);
            s[c] = 1.0;
            preds.push_back(make_prediction(abc, s));
            truths.push_back(abc[c]);
        }
    const std::vector<std::string> dropped = {"FTP-Patator"};
    const auto cm = confusion(abc, preds, truths, dropped);
    EXPECT_TRUE(cm.diagonal());
    EXPECT_EQ(cm.counts[0][0], 43166u);
    EXPECT_EQ(cm.counts[1][1], 786u);
    EXPECT_EQ(cm.counts[2][2], 537u);
    EXPECT_EQ(cm.dropped[1], 1u);
    EXPECT_EQ(cm.total(), preds.size() + 1);
    EXPECT_EQ(cm.row_total(1), 787u);

    const auto clean = confusion(abc, preds, truths);
    const auto f = f1(clean);
    EXPECT_EQ(f.micro, 1.0);
    EXPECT_EQ(f.macro, 1.0);
    EXPECT_LT(f1(cm).per_class[1], 1.0);
}

TEST(Confusion, EmptyAndUnknownLabel) {
    const auto cm = confusion(abc, {}, {});
    EXPECT_EQ(cm.total(), 0u);
    EXPECT_THROW(f1(cm), MetricError);
    const std::vector<PredictionResult> preds = {make_prediction(abc, {1, 0, 0})};
    const std::vector<std::string> truths = {"DoS"};
    try {
        confusion(abc, preds, truths);
        FAIL();
    } catch (const MetricError& e) {
        EXPECT_NE(std::string(e.what()).find("DoS"), std::string::npos);
    }
}

TEST(F1, TwoByTwoHalves) {
    ConfusionMatrix cm({"A", "B"});
    cm.counts = {{1, 1}, {1, 1}};
    const auto f = f1(cm);
    EXPECT_DOUBLE_EQ(f.micro, 0.5);
    EXPECT_DOUBLE_EQ(f.macro, 0.5);
}

TEST(F1, AbsentClassContributesZero) {
    ConfusionMatrix cm({"A", "B", "C"});
    cm.counts = {{3, 0, 0}, {0, 2, 0}, {0, 0, 0}};
    const auto f = f1(cm);
    EXPECT_EQ(f.per_class[2], 0.0);
    EXPECT_DOUBLE_EQ(f.macro, 2.0 / 3.0);
    EXPECT_EQ(f.micro, 1.0);
}

TEST(F1, MicroEqualsAccuracyProperty) {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + rng.below(4);
        std::vector<std::string> order;
        for (std::size_t c = 0; c < k; ++c) order.push_back("c" + std::to_string(c));
        ConfusionMatrix cm(order);
        std::size_t diag = 0, total = 0;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                cm.counts[i][j] = rng.below(20);
                total += cm.counts[i][j];
                if (i == j) diag += cm.counts[i][j];
            }
        if (total == 0) continue;
        const auto f = f1(cm);
        EXPECT_NEAR(f.micro, double(diag) / double(total), 1e-12);
        for (double v : f.per_class) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(RocAuc, FourRecordCase) {
    EXPECT_DOUBLE_EQ(auc({0.9, 0.8, 0.7, 0.6}, {true, false, true, false}), 0.75);
}

TEST(RocAuc, AllTiesIsHalf) { EXPECT_DOUBLE_EQ(auc({0.3, 0.3, 0.3, 0.3}, {true, false, false, true}), 0.5); }

TEST(RocAuc, MatchesPairCountingOnRandomInstances) {
    Rng rng(31337);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(11);
        std::vector<double> s(n);
        std::vector<bool> pos(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng.below(6)) / 5.0; // coarse grid for ties
            pos[i] = rng.bernoulli(0.5);
        }
        pos[0] = true;
        pos[1] = false;
        EXPECT_NEAR(auc(s, pos), brute_auc(s, pos), 1e-12) << "trial " << trial;
    }
}

TEST(RocAuc, MulticlassPerfectAndUndefined) {
    std::vector<std::vector<double>> scores = {{0.9, 0.05, 0.05}, {0.1, 0.8, 0.1}, {0.2, 0.1, 0.7}, {0.8, 0.1, 0.1}};
    std::vector<std::size_t> truths = {0, 1, 2, 0};
    EXPECT_EQ(roc_auc(scores, truths, abc).macro, 1.0);
    EXPECT_EQ(pr_auc(scores, truths, abc).macro, 1.0);
    truths = {0, 0, 0, 0};
    try {
        roc_auc(scores, truths, abc);
        FAIL();
    } catch (const MetricError& e) {
        EXPECT_NE(std::string(e.what()).find("BENIGN"), std::string::npos) << e.what();
    }
    EXPECT_THROW(pr_auc(scores, truths, abc), MetricError);
}

TEST(AveragePrecision, ClosedForms) {
    for (std::size_t n : {1u, 2u, 5u, 17u}) {
        std::vector<double> s(n);
        std::vector<bool> pos(n, false);
        for (std::size_t i = 0; i < n; ++i) s[i] = 1.0 - double(i) / double(n);
        pos[n - 1] = true;
        EXPECT_DOUBLE_EQ(ap(s, pos), 1.0 / double(n)) << n;
    }
    EXPECT_DOUBLE_EQ(ap({0.2, 0.5, 0.9}, {true, true, true}), 1.0);
    EXPECT_THROW(ap({0.2, 0.5}, {false, false}), MetricError);
    // ranks + - + : 1/2 * 1 + 1/2 * 2/3
    EXPECT_DOUBLE_EQ(ap({0.9, 0.8, 0.7}, {true, false, true}), 0.5 + 1.0 / 3.0);
}

TEST(LogLoss, HandValues) {
    const std::vector<std::vector<double>> two = {{0.5, 0.5}, {0.75, 0.25}};
    const std::vector<std::size_t> truths = {0, 1};
    EXPECT_NEAR(log_loss(two, truths), (std::log(2.0) + std::log(4.0)) / 2.0, 1e-12);
    const std::vector<std::vector<double>> uniform = {{1.0 / 3, 1.0 / 3, 1.0 / 3}};
    const std::vector<std::size_t> t0 = {2};
    EXPECT_NEAR(log_loss(uniform, t0), std::log(3.0), 1e-12);
    const std::vector<std::vector<double>> perfect = {{1, 0}, {0, 1}};
    EXPECT_NEAR(log_loss(perfect, truths), 0.0, 1e-12);
    EXPECT_GE(log_loss(perfect, truths), 0.0);
    const std::vector<std::vector<double>> wrong = {{0, 1}};
    const std::vector<std::size_t> t1 = {0};
    EXPECT_NEAR(log_loss(wrong, t1), -std::log(1e-15), 1e-9);
}

TEST(Prediction, NormalizesAndBreaksTiesByName) {
    const auto p = make_prediction({"b", "a"}, {2, 2});
    EXPECT_EQ(p.predicted, "a");
    EXPECT_EQ(p.scores, (std::vector<double>{0.5, 0.5}));
    EXPECT_EQ(p.top_score(), 0.5);
    const auto z = make_prediction({"x", "y", "z"}, {0, 0, 0});
    EXPECT_NEAR(z.scores[0] + z.scores[1] + z.scores[2], 1.0, 1e-12);
}

TEST(Format, ConfusionTableHasDroppedColumn) {
    ConfusionMatrix cm(abc);
    cm.counts[0][0] = 43166;
    const auto text = format_confusion(cm);
    EXPECT_NE(text.find("Dropped"), std::string::npos);
    EXPECT_NE(text.find("43166"), std::string::npos);
    EXPECT_NE(text.find("SSH-Patator"), std::string::npos);
}
