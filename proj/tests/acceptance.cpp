// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "cyberdef/alertserve_http.hpp"
#include "cyberdef/cyberdef.hpp"
#include "support.hpp"

using namespace cyberdef;

namespace {

using Clock = std::chrono::steady_clock;
using Json = nlohmann::json;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

std::vector<std::uint64_t> seeds(std::size_t n) {
    std::vector<std::uint64_t> s(n);
    std::iota(s.begin(), s.end(), 1);
    return s;
}

const ScenarioSpec& variant(const std::vector<ScenarioSpec>& specs, const std::string& name) {
    for (const auto& s : specs)
        if (s.name == name) return s;
    throw std::runtime_error("no variant " + name);
}

struct SeedStats {
    double mean_final = 0.0;
    double mean_peak = 0.0;
    int zero_final = 0;
};

SeedStats over_seeds(const ScenarioSpec& spec, std::size_t n) {
    SeedStats st;
    for (auto seed : seeds(n)) {
        const auto r = sim::run(spec, seed);
        st.mean_final += r.summary.final_fraction();
        st.mean_peak += r.summary.peak_fraction();
        if (r.summary.final_infected == 0) ++st.zero_final;
    }
    st.mean_final /= static_cast<double>(n);
    st.mean_peak /= static_cast<double>(n);
    return st;
}

flows::Dataset synth(std::size_t rows, std::uint64_t seed) {
    flows::SynthSpec s;
    s.row_count = rows;
    s.classes = flows::SynthSpec::reference_classes();
    s.seed = seed;
    return flows::synth_dataset(s);
}

// ---------------------------------------------------------------------------

void ac1(Verdict& v) {
    const auto t0 = Clock::now();
    const auto st = over_seeds(variant(builtin_scenario("s2"), "s2-response-10"), 50);
    const double secs = seconds_since(t0);
    v.detail << "zero-final seeds " << st.zero_final << "/50, mean peak " << st.mean_peak << ", " << secs << " s";
    v.require(st.zero_final >= 45, "final infected 0 in >= 90% of seeds");
    v.require(st.mean_peak <= 0.02, "mean peak fraction <= 0.02");
    v.require(secs < 30.0, "runtime < 30 s");
}

void ac2(Verdict& v) {
    const auto specs = builtin_scenario("s2");
    const auto low = over_seeds(variant(specs, "s2-response-2"), 50);
    const auto high = over_seeds(variant(specs, "s2-response-10"), 50);
    v.detail << "mean final rate 2 = " << low.mean_final << ", rate 10 = " << high.mean_final;
    v.require(low.mean_final - high.mean_final >= 0.10, "gap >= 0.10");
}

void ac3(Verdict& v) {
    const auto specs = builtin_scenario("s1");
    std::vector<double> m;
    for (int threats : {10, 30, 100}) m.push_back(over_seeds(variant(specs, "s1-threats-" + std::to_string(threats)), 50).mean_final);
    v.detail << "mean final at 10/30/100 threats = " << m[0] << " / " << m[1] << " / " << m[2];
    v.require(m[0] < m[1] && m[1] < m[2], "strictly increasing");
    v.require(m[2] - m[0] >= 0.15, "100 vs 10 gap >= 0.15");
}

void ac4(Verdict& v) {
    const auto specs = builtin_scenario("s3");
    std::vector<double> m;
    for (int level : {1, 3, 5}) m.push_back(over_seeds(variant(specs, "s3-defense-" + std::to_string(level)), 50).mean_final);
    v.detail << "mean final at defence 1/3/5 = " << m[0] << " / " << m[1] << " / " << m[2];
    v.require(m[0] > m[1] && m[1] > m[2], "strictly decreasing");
    v.require(m[2] <= 0.05, "defence-5 mean <= 0.05");
}

double mean_health_50_100(const std::vector<sim::TickMetrics>& series) {
    double sum = 0.0;
    int n = 0;
    for (const auto& m : series)
        if (m.tick >= 50 && m.tick <= 100) {
            sum += m.health;
            ++n;
        }
    return n ? sum / n : 0.0;
}

struct AdaptivityStats {
    int dropped = 0;
    int reacted = 0;
    double adaptive_health = 0.0;
    double control_health = 0.0;
};

/// Runs `adaptive` and a copy pinned at its starting level over 50 seeds.
AdaptivityStats adaptivity(const ScenarioSpec& adaptive) {
    const AdaptationPolicy& policy = *adaptive.adaptation;
    ScenarioSpec control = adaptive;
    control.name += "-control";
    control.defense = DefenseMode::fixed(adaptive.defense.level);
    control.adaptation.reset();

    AdaptivityStats st;
    for (auto seed : seeds(50)) {
        const auto a = sim::run(adaptive, seed);
        const auto& s = a.series;
        st.adaptive_health += mean_health_50_100(s) / 50.0;
        st.control_health += mean_health_50_100(sim::run(control, seed).series) / 50.0;

        std::size_t first = s.size();
        for (std::size_t t = 0; t < s.size(); ++t)
            if (s[t].health < policy.raise_threshold) {
                first = t;
                break;
            }
        if (first == s.size()) continue;
        ++st.dropped;
        const double before = first == 0 ? static_cast<double>(adaptive.defense.level) : s[first - 1].mean_defense;
        const std::size_t last = std::min(s.size() - 1, first + static_cast<std::size_t>(policy.adapt_interval));
        for (std::size_t t = first; t <= last; ++t)
            if (s[t].mean_defense > before) {
                ++st.reacted;
                break;
            }
    }
    return st;
}

void ac5(Verdict& v) {
    const ScenarioSpec s4 = builtin_scenario("s4").front();
    // S4 as built in rarely loses health, so the reaction clause can be
    // vacuous; a harsher copy makes sure the mechanism is exercised
    ScenarioSpec stressed = s4;
    stressed.name = "s4-stressed";
    stressed.threat_count = 20;
    stressed.response_rate = 3;

    for (const ScenarioSpec* spec : std::array<const ScenarioSpec*, 2>{&s4, &stressed}) {
        const auto st = adaptivity(*spec);
        v.detail << spec->name << ": reacted in " << st.reacted << "/" << st.dropped << " dropping seeds, mean health ticks 50-100 "
                 << st.adaptive_health << " vs control " << st.control_health << "; ";
        v.require(st.reacted >= 0.95 * st.dropped, spec->name + " defence raised within adapt_interval in >= 95% of dropping seeds");
        v.require(st.adaptive_health >= st.control_health, spec->name + " adaptive mean health >= control");
    }
    const auto st = adaptivity(stressed);
    v.require(st.dropped > 0, "stressed run exercises adaptation");
}

void ac6(Verdict& v) {
    testsupport::TempDir dir("accept-det");
    std::vector<ScenarioSpec> all;
    for (const char* id : {"s1", "s2", "s3", "s4"})
        for (auto& s : builtin_scenario(id)) all.push_back(s);
    int identical = 0;
    for (int probe = 0; probe < 20; ++probe) {
        const auto& spec = all[static_cast<std::size_t>(probe) % all.size()];
        const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(probe) * 7919;
        export_timeseries(sim::run(spec, seed), dir / "a.csv");
        export_timeseries(sim::run(spec, seed), dir / "b.csv");
        if (testsupport::slurp(dir / "a.csv") == testsupport::slurp(dir / "b.csv")) ++identical;
    }
    v.detail << identical << "/20 probes byte-identical";
    v.require(identical == 20, "all probes identical");
}

void ac7(Verdict& v) {
    const auto t0 = Clock::now();
    const auto parts = flows::split(synth(44489, 2024), 0.2, 2024, true);
    const auto model = detect::train(parts.train, {}, 2024);
    detect::EvalOptions opt;
    opt.importance = false;
    const auto rep = detect::evaluate(model, parts.test, {}, opt);
    const double secs = seconds_since(t0);
    const bool no_dropped = std::all_of(rep.confusion.dropped.begin(), rep.confusion.dropped.end(), [](std::size_t d) { return d == 0; });
    v.detail << "test rows " << parts.test.records.size() << ", micro F1 " << rep.f1_micro << ", macro F1 " << rep.f1_macro << ", ROC AUC "
             << rep.roc_auc_macro_ovr << ", PR AUC " << rep.pr_auc_macro_ovr << ", log loss " << rep.log_loss << ", " << secs << " s";
    v.require(rep.f1_micro == 1.0 && rep.f1_macro == 1.0, "F1 exactly 1");
    v.require(rep.roc_auc_macro_ovr == 1.0 && rep.pr_auc_macro_ovr == 1.0, "AUCs exactly 1");
    v.require(rep.log_loss <= 0.01, "log loss <= 0.01");
    v.require(rep.confusion.diagonal() && no_dropped, "diagonal confusion with Dropped 0");
    v.require(secs < 60.0, "runtime < 60 s");
}

void ac8(Verdict& v) {
    testsupport::TempDir dir("accept-batch");
    const auto model = detect::train(synth(2000, 8), {}, 8);
    std::ostringstream csv;
    flows::write_flows_csv(synth(10000, 9), csv);
    testsupport::spit(dir / "clean.csv", csv.str());
    const auto clean = detect::batch_predict(model, dir / "clean.csv", dir / "clean.out.csv");

    // one row with a non-numeric feature value
    std::istringstream in(csv.str());
    std::string line, text;
    for (int i = 0; std::getline(in, line); ++i) {
        if (i == 5000) {
            const auto last = line.rfind(',');
            line = line.substr(0, line.rfind(',', last - 1)) + ",garbage" + line.substr(last);
        }
        text += line + "\n";
    }
    testsupport::spit(dir / "dirty.csv", text);
    const auto dirty = detect::batch_predict(model, dir / "dirty.csv", dir / "dirty.out.csv");

    v.detail << "clean " << clean.succeeded << "/" << clean.failed << ", with one malformed row " << dirty.succeeded << "/" << dirty.failed;
    v.require(clean.total_items == 10000 && clean.succeeded == 10000 && clean.failed == 0, "clean file 10000/0");
    v.require(dirty.succeeded == 9999 && dirty.failed == 1, "malformed file 9999/1");
    v.require(dirty.succeeded + dirty.failed == dirty.total_items && dirty.predicted_items == dirty.succeeded, "totals reconcile");
    // failed records keep their row in the output with an empty prediction
    std::ifstream out(dir / "dirty.out.csv");
    std::size_t predicted_rows = 0, blank_rows = 0;
    std::getline(out, line);
    while (std::getline(out, line)) ++(csv::split(line).at(3).empty() ? blank_rows : predicted_rows);
    v.detail << ", output rows " << predicted_rows << " predicted + " << blank_rows << " blank";
    v.require(predicted_rows == 9999 && blank_rows == 1, "output rows match the report");
}

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

double gini_of(const std::vector<std::size_t>& labels, std::size_t classes) {
    std::vector<double> c(classes, 0.0);
    for (auto l : labels) c[l] += 1.0;
    double s = 0.0;
    for (double x : c) s += (x / labels.size()) * (x / labels.size());
    return 1.0 - s;
}

void ac9(Verdict& v) {
    using namespace metrics;
    Rng rng(9009);
    int auc_exact = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(11);
        std::vector<double> s(n);
        std::vector<bool> pos(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng.below(6)) / 5.0;
            pos[i] = rng.bernoulli(0.5);
        }
        pos[0] = true;
        pos[1] = false;
        std::unique_ptr<bool[]> p(new bool[n]);
        std::copy(pos.begin(), pos.end(), p.get());
        if (binary_roc_auc(s, std::span<const bool>(p.get(), n)) == brute_auc(s, pos)) ++auc_exact;
    }

    const std::vector<std::vector<double>> two = {{0.5, 0.5}, {0.75, 0.25}};
    const std::vector<std::size_t> t01 = {0, 1};
    const bool loss_ok = std::abs(log_loss(two, t01) - (std::log(2.0) + std::log(4.0)) / 2.0) <= 1e-9 &&
                         std::abs(log_loss(std::vector<std::vector<double>>{{1.0 / 3, 1.0 / 3, 1.0 / 3}}, std::vector<std::size_t>{2}) -
                                  std::log(3.0)) <= 1e-9;

    ConfusionMatrix cm({"A", "B"});
    cm.counts = {{1, 1}, {1, 1}};
    const auto f = f1(cm);
    const bool f1_ok = std::abs(f.micro - 0.5) <= 1e-9 && std::abs(f.macro - 0.5) <= 1e-9;

    bool ap_ok = true;
    for (std::size_t n : {1u, 4u, 9u}) {
        std::vector<double> s(n);
        std::unique_ptr<bool[]> p(new bool[n]());
        for (std::size_t i = 0; i < n; ++i) s[i] = 1.0 - double(i) / double(n);
        p[n - 1] = true;
        ap_ok = ap_ok && std::abs(average_precision(s, std::span<const bool>(p.get(), n)) - 1.0 / double(n)) <= 1e-9;
    }

    int splits_ok = 0;
    Rng trng(4242);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t rows = 4 + trng.below(12), cols = 1 + trng.below(3), classes = 2 + trng.below(2);
        detect::Matrix x(rows, cols);
        for (auto& e : x.data) e = static_cast<double>(trng.below(5));
        std::vector<std::size_t> y(rows);
        for (auto& l : y) l = trng.below(classes);

        bool found = false;
        double want_w = 0.0, want_thr = 0.0;
        std::size_t want_f = 0;
        for (std::size_t fi = 0; fi < cols; ++fi) {
            std::vector<double> vals;
            for (std::size_t r = 0; r < rows; ++r) vals.push_back(x.at(r, fi));
            std::sort(vals.begin(), vals.end());
            vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                const double thr = (vals[i] + vals[i + 1]) / 2.0;
                std::vector<std::size_t> l, r;
                for (std::size_t row = 0; row < rows; ++row) (x.at(row, fi) <= thr ? l : r).push_back(y[row]);
                const double w = (l.size() * gini_of(l, classes) + r.size() * gini_of(r, classes)) / rows;
                if (!found || w < want_w - 1e-12) {
                    found = true;
                    want_w = w;
                    want_f = fi;
                    want_thr = thr;
                }
            }
        }
        if (found && !(want_w < gini_of(y, classes) - 1e-12)) found = false;

        detect::DecisionTree tree({12, 1});
        tree.fit(x, y, classes);
        std::vector<std::size_t> all(rows);
        std::iota(all.begin(), all.end(), 0);
        const auto got = tree.best_split(x, y, all);
        const bool same = got.has_value() == found &&
                          (!found || (std::abs(got->weighted_gini - want_w) <= 1e-12 && got->feature == want_f && got->threshold == want_thr));
        if (same) ++splits_ok;
    }

    v.detail << "AUC exact " << auc_exact << "/200, log loss " << (loss_ok ? "ok" : "off") << ", F1 " << (f1_ok ? "ok" : "off") << ", AP "
             << (ap_ok ? "ok" : "off") << ", root splits " << splits_ok << "/50";
    v.require(auc_exact == 200, "AUC matches pair counting");
    v.require(loss_ok && f1_ok && ap_ok, "hand fixtures within 1e-9");
    v.require(splits_ok == 50, "root split matches exhaustive search");
}

/// Three balanced classes told apart by one numeric column; the rest is noise.
flows::Dataset one_informative(std::size_t rows, std::uint64_t seed) {
    auto schema = std::make_shared<flows::FeatureSchema>();
    schema->names = {"signal", "noise_a", "noise_b", "noise_c"};
    Rng rng(seed);
    const char* names[] = {"BENIGN", "FTP-Patator", "SSH-Patator"};
    flows::Dataset ds;
    ds.schema = schema;
    for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t c = i % 3;
        flows::FlowRecord r;
        r.schema = schema;
        r.label = names[c];
        r.values = {10.0 * static_cast<double>(c) + rng.unit(), rng.normal(), rng.unit(), rng.normal() * 100.0};
        ds.records.push_back(std::move(r));
    }
    flows::refresh_classes(ds);
    return ds;
}

void ac10(Verdict& v) {
    int first = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto ds = one_informative(600, seed);
        const auto model = detect::train(ds, {}, seed);
        const auto imp = detect::permutation_importance(model, ds, 3, seed);
        if (!imp.empty() && imp.front().feature == "signal") ++first;
    }
    v.detail << "informative feature ranked first in " << first << "/10 repeats";
    v.require(first == 10, "10/10");
}

std::string request_body(const flows::FlowRecord& r) {
    Json j;
    j["Flow ID"] = *r.flow_id;
    j["Source IP"] = r.source_ip;
    j["Destination IP"] = r.destination_ip;
    j["Source Port"] = *r.source_port;
    j["Destination Port"] = *r.destination_port;
    j["Protocol"] = *r.protocol;
    j["Timestamp"] = r.timestamp;
    for (std::size_t i = 0; i < r.schema->names.size(); ++i) j[r.schema->names[i]] = r.values[i];
    return j.dump();
}

void ac11(Verdict& v) {
    testsupport::TempDir dir("accept-serve");
    const auto ds = synth(1500, 11);
    serve::ServeConfig cfg;
    cfg.api_key = "acceptance-key";
    cfg.port = 0;
    cfg.log_dir = dir.path();
    serve::AlertService svc(detect::train(ds, {}, 11), cfg);
    svc.start();
    const httplib::Headers auth{{"X-Api-Key", cfg.api_key}};
    httplib::Client client("127.0.0.1", svc.port());
    client.set_read_timeout(10, 0);

    auto res = client.Post("/v1/predict", httplib::Headers{{"X-Api-Key", "wrong"}}, request_body(ds.records[0]), "application/json");
    v.require(res && res->status == 401, "wrong key -> 401");
    v.require(svc.store().alert_count() == 0, "no alert logged for 401");

    bool scores_ok = true, severity_ok = true;
    for (std::size_t i = 0; i < ds.records.size() && i < 30; ++i) {
        res = client.Post("/v1/predict", auth, request_body(ds.records[i * 50]), "application/json");
        if (!res || res->status != 200) {
            scores_ok = false;
            continue;
        }
        const auto j = Json::parse(res->body);
        const auto scores = j["scores"].get<std::vector<double>>();
        scores_ok = scores_ok && std::abs(std::accumulate(scores.begin(), scores.end(), 0.0) - 1.0) <= 1e-9;
        const auto cat = serve::categorize(make_prediction(j["classes"].get<std::vector<std::string>>(), scores), svc.config());
        severity_ok = severity_ok && j["severity"] == serve::to_string(cat.severity);
    }
    v.require(scores_ok, "scores sum to 1 within 1e-9");
    v.require(severity_ok, "severity matches categorize");

    std::mutex mu;
    std::set<std::uint64_t> ids;
    std::atomic<int> ok{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 10; ++t)
        threads.emplace_back([&, t] {
            httplib::Client c("127.0.0.1", svc.port());
            c.set_read_timeout(10, 0);
            for (int k = 0; k < 10; ++k) {
                auto r = c.Post("/v1/predict", auth, request_body(ds.records[static_cast<std::size_t>(t * 10 + k)]), "application/json");
                if (!r || r->status != 200) continue;
                ++ok;
                std::lock_guard lock(mu);
                ids.insert(Json::parse(r->body)["alert_id"].get<std::uint64_t>());
            }
        });
    for (auto& t : threads) t.join();
    v.require(ok == 100 && ids.size() == 100, "100 concurrent requests -> 100 unique alert ids");
    svc.stop();

    std::vector<serve::Alert> alerts;
    for (std::size_t i = 0; i < 500; ++i)
        alerts.push_back({i + 1, "t", make_prediction({"BENIGN", "FTP-Patator", "SSH-Patator"}, {0.02, 0.95, 0.03}), serve::Severity::high, "SOP-HIGH", "v"});
    std::vector<serve::FeedbackEntry> mostly_right, often_wrong;
    for (std::size_t i = 0; i < 500; ++i) {
        mostly_right.push_back({i + 1, i < 490 ? "FTP-Patator" : "BENIGN", "t"});
        often_wrong.push_back({i + 1, i < 400 ? "FTP-Patator" : "BENIGN", "t"});
    }
    const auto good = serve::evaluate_feedback(alerts, mostly_right, serve::ServeConfig{});
    const auto bad = serve::evaluate_feedback(alerts, often_wrong, serve::ServeConfig{});
    v.require(!good.retrain_recommended, "490/500 -> no retrain");
    v.require(bad.retrain_recommended, "400/500 -> retrain");

    v.detail << "401 gate, " << ok.load() << " concurrent ok with " << ids.size() << " unique ids, drift 490/500 retrain="
             << good.retrain_recommended << ", 400/500 retrain=" << bad.retrain_recommended;
}

bool ac12(Verdict& v) {
    const char* path = std::getenv("CYBERDEF_CICIDS_TUESDAY");
    if (!path || !*path) return false;
    const auto ds = flows::read_flows_csv(path);
    const auto parts = flows::split(ds, 0.2, 12, true);
    detect::TrainConfig tc;
    tc.policy = detect::IdentifierPolicy::include;
    const auto model = detect::train(parts.train, tc, 12);
    detect::EvalOptions opt;
    opt.importance = false;
    const auto rep = detect::evaluate(model, parts.test, {}, opt);
    const auto& cm = rep.confusion;
    std::size_t diag = 0, total = 0;
    double min_recall = 1.0;
    for (std::size_t c = 0; c < cm.class_order.size(); ++c) {
        std::size_t row = 0;
        for (std::size_t j = 0; j < cm.class_order.size(); ++j) row += cm.counts[c][j];
        diag += cm.counts[c][c];
        total += row;
        if (row) min_recall = std::min(min_recall, double(cm.counts[c][c]) / double(row));
    }
    const double accuracy = total ? double(diag) / double(total) : 0.0;
    v.detail << "accuracy " << accuracy << ", min per-class recall " << min_recall << " (identifier features included; they may leak labels)";
    v.require(accuracy >= 0.99, "accuracy >= 0.99");
    v.require(min_recall >= 0.98, "per-class recall >= 0.98");
    return true;
}

} // namespace

int main() {
    std::cout << std::setprecision(6);
    int failures = 0;
    const auto report = [&](const char* id, const char* title, const std::function<void(Verdict&)>& check) {
        Verdict v;
        try {
            check(v);
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        if (!v.pass) ++failures;
        std::cout << id << ' ' << (v.pass ? "PASS" : "FAIL") << "  " << title << ": " << v.detail.str() << std::endl;
    };

    report("AC1", "S2 high response contains the outbreak", ac1);
    report("AC2", "S2 low response is much worse", ac2);
    report("AC3", "S1 infection grows with threat count", ac3);
    report("AC4", "S3 infection falls with defence level", ac4);
    report("AC5", "S4 adaptive defences react and help", ac5);
    report("AC6", "simulation exports are deterministic", ac6);
    report("AC7", "perfect detection on separable data", ac7);
    report("AC8", "batch prediction totals reconcile", ac8);
    report("AC9", "metric and split oracles", ac9);
    report("AC10", "importance finds the informative feature", ac10);
    report("AC11", "alert service contract", ac11);

    Verdict v12;
    bool ran = false;
    try {
        ran = ac12(v12);
    } catch (const std::exception& e) {
        ran = true;
        v12.require(false, std::string("exception: ") + e.what());
    }
    if (!ran) {
        std::cout << "AC12 SKIP  real-data detection: set CYBERDEF_CICIDS_TUESDAY to a CICIDS2017 Tuesday CSV to run" << std::endl;
    } else {
        if (!v12.pass) ++failures;
        std::cout << "AC12 " << (v12.pass ? "PASS" : "FAIL") << "  real-data detection: " << v12.detail.str() << std::endl;
    }

    std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criterion(s) failed" : std::string("acceptance: all criteria passed"))
              << std::endl;
    return failures ? 1 : 0;
}
