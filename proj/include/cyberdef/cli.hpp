#ifndef CYBERDEF_CLI_HPP
#define CYBERDEF_CLI_HPP

// The `cyberdef` command line. run_cli() returns the process exit code:
// 0 success, 1 usage, 2 data/validation, 3 I/O.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "cyberdef/alertserve_http.hpp"
#include "cyberdef/detect/evaluate.hpp"
#include "cyberdef/detect/model.hpp"
#include "cyberdef/error.hpp"
#include "cyberdef/flows.hpp"
#include "cyberdef/scenario.hpp"

namespace cyberdef::cli {

enum ExitCode : int { ok = 0, usage = 1, data = 2, io = 3 };

inline std::atomic<bool>& stop_requested() {
    static std::atomic<bool> flag{false};
    return flag;
}

namespace detail {

namespace fs = std::filesystem;

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError(dir.string(), "cannot create output directory" + (ec ? ": " + ec.message() : ""));
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out << text;
    if (!out.flush()) throw IoError(path.string(), "write failed");
}

/// Built-in id, or a scenario file. Anything else is a usage error.
inline std::pair<std::string, std::vector<ScenarioSpec>> resolve_scenario(const std::string& arg) {
    if (arg.size() == 2 && arg[0] == 's' && arg[1] >= '1' && arg[1] <= '4') return {arg, builtin_scenario(arg)};
    if (fs::is_regular_file(arg)) return {fs::path(arg).stem().string(), {load_scenario_file(arg)}};
    throw UsageError("unknown scenario '" + arg + "' (expected s1, s2, s3, s4 or a scenario file)");
}

inline std::string sweep_table(const SweepResult& r) {
    std::ostringstream o;
    o << std::left << std::setw(22) << "scenario" << std::setw(15) << r.axis_name << std::right << std::setw(11) << "mean_peak"
      << std::setw(12) << "mean_final" << std::setw(11) << "min_final" << std::setw(11) << "max_final" << std::setw(12) << "contained"
      << std::setw(14) << "mean_contain" << "\n";
    o << std::fixed << std::setprecision(4);
    for (std::size_t i = 0; i < r.aggregates.size(); ++i) {
        const auto& a = r.aggregates[i];
        o << std::left << std::setw(22) << r.scenario_names[i] << std::setw(15) << r.axis_values[i] << std::right << std::setw(11)
          << a.mean_peak_fraction << std::setw(12) << a.mean_final_fraction << std::setw(11) << a.min_final_fraction << std::setw(11)
          << a.max_final_fraction << std::setw(12) << (std::to_string(a.contained_runs) + "/" + std::to_string(r.runs[i].size()))
          << std::setw(14);
        if (a.mean_time_to_containment) o << *a.mean_time_to_containment;
        else o << "-";
        o << "\n";
    }
    return o.str();
}

inline std::string read_key_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot read API key file");
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string key(csv::trim(ss.str()));
    if (auto nl = key.find_first_of("\r\n"); nl != std::string::npos) key.resize(nl);
    return key;
}

inline void on_stop_signal(int) { stop_requested().store(true); }

} // namespace detail

/// Parses `argv` and runs the selected subcommand, writing human output to
/// `out` and diagnostics to `err`.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"cyberdef: network attack/defence simulation and flow-based intrusion detection", "cyberdef"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "cyberdef 1.0");

    // sim ------------------------------------------------------------------
    auto* sim = app.add_subcommand("sim", "Agent-based attack/defence simulation");
    sim->require_subcommand(1);

    std::string run_scenario, run_out;
    std::size_t run_variant = 0;
    std::uint64_t run_seed = 0;
    auto* run = sim->add_subcommand("run", "Run one scenario variant for one seed; writes <out>/<name>_seed<N>.csv and .summary.json");
    run->add_option("--scenario", run_scenario, "Scenario id (s1|s2|s3|s4) or path to a scenario file")->required();
    run->add_option("--variant", run_variant, "Zero-based variant index within the scenario")->capture_default_str();
    run->add_option("--seed", run_seed, "Random seed")->required();
    run->add_option("--out", run_out, "Output directory")->required();

    std::string sweep_scenario, sweep_out;
    std::uint64_t sweep_seeds = 50;
    unsigned sweep_threads = 0;
    auto* sweep_cmd = sim->add_subcommand("sweep", "Run every variant for seeds 1..N; writes <out>/<id>_sweep.csv");
    sweep_cmd->add_option("--scenario", sweep_scenario, "Scenario id (s1|s2|s3|s4) or path to a scenario file")->required();
    sweep_cmd->add_option("--seeds", sweep_seeds, "Number of seeds (1..N)")->capture_default_str()->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--out", sweep_out, "Output directory")->required();
    sweep_cmd->add_option("--threads", sweep_threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();

    // detect ---------------------------------------------------------------
    auto* det = app.add_subcommand("detect", "Flow-based intrusion detection");
    det->require_subcommand(1);

    std::string synth_out;
    std::size_t synth_rows = 44489;
    std::uint64_t synth_seed = 1;
    double synth_noise = -1.0;
    auto* synth = det->add_subcommand("synth", "Write a synthetic labelled flow CSV (BENIGN / FTP-Patator / SSH-Patator)");
    synth->add_option("--out", synth_out, "Output CSV path")->required();
    synth->add_option("--rows", synth_rows, "Row count")->capture_default_str()->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
    synth->add_option("--noise", synth_noise, "Label-overlap rate in [0,1]; omit for perfectly separable classes")->check(CLI::Range(0.0, 1.0));

    std::string train_data, train_model, train_holdout;
    std::uint64_t train_seed = 1;
    bool train_exclude = false;
    auto* train_cmd = det->add_subcommand("train", "Train and select a classifier; writes a model file");
    train_cmd->add_option("--data", train_data, "Labelled flow CSV")->required();
    train_cmd->add_option("--model", train_model, "Model file to write")->required();
    train_cmd->add_option("--seed", train_seed, "Seed for splits and subsampling")->capture_default_str();
    train_cmd->add_option("--out", train_holdout,
                          "Hold out a stratified 20% test split, write it to this CSV, and train on the remaining 80%");
    train_cmd->add_flag("--exclude-identifiers", train_exclude, "Leave source/destination IP and timestamp out of the model inputs");

    std::string eval_data, eval_model, eval_report;
    std::uint64_t eval_seed = 1;
    std::size_t eval_repeats = 3;
    auto* eval_cmd = det->add_subcommand("eval", "Evaluate a model on a labelled CSV; prints the confusion matrix and metrics");
    eval_cmd->add_option("--data", eval_data, "Labelled flow CSV")->required();
    eval_cmd->add_option("--model", eval_model, "Model file")->required();
    eval_cmd->add_option("--report", eval_report, "Write the JSON evaluation report here");
    eval_cmd->add_option("--seed", eval_seed, "Seed for permutation importance")->capture_default_str();
    eval_cmd->add_option("--importance-repeats", eval_repeats, "Permutation repeats per feature (0 disables importance)")
        ->capture_default_str();

    std::string pred_data, pred_model, pred_out;
    auto* pred_cmd = det->add_subcommand("predict", "Batch prediction over a flow CSV");
    pred_cmd->add_option("--data", pred_data, "Flow CSV (label column optional)")->required();
    pred_cmd->add_option("--model", pred_model, "Model file")->required();
    pred_cmd->add_option("--out", pred_out, "Output CSV; failure reasons go to <out>.failures.csv")->required();

    // serve ----------------------------------------------------------------
    std::string serve_model, serve_key_file, serve_sop, serve_host = "127.0.0.1", serve_logs = ".";
    int serve_port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", std::string("HTTP prediction service; the ") + serve::api_key_env +
                                                       " environment variable overrides --api-key-file");
    serve_cmd->add_option("--model", serve_model, "Model file")->required();
    serve_cmd->add_option("--port", serve_port, "TCP port (0 picks a free port)")->capture_default_str()->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--api-key-file", serve_key_file, "File whose first line is the API key");
    serve_cmd->add_option("--sop-table", serve_sop, "File of 'severity = sop_id' lines");
    serve_cmd->add_option("--host", serve_host, "Bind address")->capture_default_str();
    serve_cmd->add_option("--log-dir", serve_logs, "Directory for alerts.ndjson and feedback.ndjson")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage;
    }

    try {
        if (run->parsed()) {
            auto [id, specs] = detail::resolve_scenario(run_scenario);
            if (run_variant >= specs.size())
                throw UsageError("scenario '" + id + "' has " + std::to_string(specs.size()) + " variant(s); --variant " +
                                 std::to_string(run_variant) + " is out of range");
            const auto& spec = specs[run_variant];
            detail::ensure_dir(run_out);
            const auto result = sim::run(spec, run_seed);
            const std::string stem = spec.name + "_seed" + std::to_string(run_seed);
            export_timeseries(result, std::filesystem::path(run_out) / (stem + ".csv"));
            const std::string summary = format_summary(spec, run_seed, result.summary);
            detail::write_text(std::filesystem::path(run_out) / (stem + ".summary.json"), summary + "\n");
            out << summary << "\n";
        } else if (sweep_cmd->parsed()) {
            auto [id, specs] = detail::resolve_scenario(sweep_scenario);
            detail::ensure_dir(sweep_out);
            std::vector<std::uint64_t> seeds(sweep_seeds);
            std::iota(seeds.begin(), seeds.end(), std::uint64_t{1});
            const auto result = sweep(specs, seeds, sweep_threads);
            export_sweep(result, std::filesystem::path(sweep_out) / (id + "_sweep.csv"));
            out << detail::sweep_table(result);
        } else if (synth->parsed()) {
            flows::SynthSpec s;
            s.row_count = synth_rows;
            s.classes = flows::SynthSpec::reference_classes();
            s.seed = synth_seed;
            if (synth_noise >= 0.0) s.separability = flows::Separability::noisy(synth_noise);
            const auto ds = flows::synth_dataset(s);
            flows::write_flows_csv(ds, synth_out);
            out << "wrote " << ds.records.size() << " rows to " << synth_out << "\n";
            for (const auto& [name, n] : flows::class_counts(ds)) out << "  " << name << ": " << n << "\n";
        } else if (train_cmd->parsed()) {
            auto ds = flows::read_flows_csv(train_data);
            if (!train_holdout.empty()) {
                auto parts = flows::split(ds, 0.2, train_seed, true);
                flows::write_flows_csv(parts.test, train_holdout);
                out << "held out " << parts.test.records.size() << " rows to " << train_holdout << "\n";
                ds = std::move(parts.train);
            }
            detect::TrainConfig cfg;
            cfg.policy = train_exclude ? detect::IdentifierPolicy::exclude : detect::IdentifierPolicy::include;
            const auto model = detect::train(ds, cfg, train_seed);
            detect::save_model(model, train_model);
            out << "trained on " << ds.records.size() << " rows; identifier features "
                << (train_exclude ? "excluded" : "included (they may leak capture-session artefacts)") << "\n"
                << detect::format_selection_report(model);
        } else if (eval_cmd->parsed()) {
            const auto model = detect::load_model(eval_model);
            detect::EvalOptions opt;
            opt.seed = eval_seed;
            opt.importance = eval_repeats > 0;
            opt.importance_repeats = std::max<std::size_t>(eval_repeats, 1);
            const auto rep = detect::evaluate_file(model, eval_data, opt);
            if (!eval_report.empty()) detect::write_eval_report(rep, eval_report);
            out << detect::format_eval_summary(rep);
        } else if (pred_cmd->parsed()) {
            const auto model = detect::load_model(pred_model);
            const auto rep = detect::batch_predict(model, pred_data, pred_out);
            out << detect::format_batch_report(rep);
        } else if (serve_cmd->parsed()) {
            serve::ServeConfig cfg;
            if (const char* env = std::getenv(serve::api_key_env); env && *env) cfg.api_key = env;
            else if (!serve_key_file.empty()) cfg.api_key = detail::read_key_file(serve_key_file);
            else throw UsageError(std::string("an API key is required: pass --api-key-file or set ") + serve::api_key_env);
            if (!serve_sop.empty()) {
                std::ifstream in(serve_sop);
                if (!in) throw IoError(serve_sop, "cannot read SOP table");
                cfg.sop_table = serve::parse_sop_table(in, serve_sop);
            }
            cfg.host = serve_host;
            cfg.port = serve_port;
            cfg.log_dir = serve_logs;
            auto model = detect::load_model(serve_model);
            serve::AlertService service(std::move(model), cfg);
            stop_requested().store(false);
            auto prev_int = std::signal(SIGINT, detail::on_stop_signal);
            auto prev_term = std::signal(SIGTERM, detail::on_stop_signal);
            service.start();
            out << "listening on " << cfg.host << ":" << service.port() << "\n"
                << "model version " << service.model().version << "\n"
                << "alert log " << service.store().alert_path().string() << "\n"
                << "feedback log " << service.store().feedback_path().string() << "\n"
                << std::flush;
            while (!stop_requested().load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
            service.stop();
            std::signal(SIGINT, prev_int);
            std::signal(SIGTERM, prev_term);
            out << "stopped; " << service.store().alert_count() << " alert(s) logged\n" << std::flush;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return usage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return io;
    } catch (const ValidationError& e) {
        err << "error: invalid field '" << e.field() << "': " << e.reason() << "\n";
        return data;
    } catch (const SchemaError& e) {
        err << "error: schema mismatch on feature '" << e.feature() << "': " << e.what() << "\n";
        return data;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return data;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return data;
    }
    return ok;
}

} // namespace cyberdef::cli

#endif
