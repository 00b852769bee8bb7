// Command-line front end: preprocessing, synthesis, forecasting, the
// benchmark grid, LOO long-term runs, architecture sweeps, attention
// extraction and plot-data export.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "agebench/covariates.hpp"
#include "agebench/harness.hpp"
#include "agebench/ingest.hpp"
#include "agebench/tft.hpp"
#include "agebench/timeseries.hpp"

namespace {

using namespace agebench;

constexpr int exit_ok = 0;
constexpr int exit_cell_failure = 1;
constexpr int exit_config_error = 2;

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

std::string out_dir() {
    if (const char* env = std::getenv("AGEBENCH_OUT")) return env;
    return ".";
}

std::string out_path(const std::string& name) {
    return (std::filesystem::path(out_dir()) / name).string();
}

int cmd_preprocess(const std::string& raw_path, const std::string& config_path,
                   const std::string& out) {
    ingest::PreprocessConfig config;
    if (!config_path.empty())
        config = ingest::preprocess_config_from_json(read_file(config_path));
    const auto records = ingest::load_raw_csv(raw_path);
    const auto trace = ingest::preprocess(
        records, config, std::filesystem::path(raw_path).stem().string());
    ts::save_trace(trace, out);
    std::cout << "wrote " << out << " (" << trace.size() << " points)\n";
    return exit_ok;
}

int cmd_synth(const std::string& config_path, const std::string& out, bool raw) {
    const auto config = ingest::synth_config_from_json(read_file(config_path));
    if (raw) {
        ingest::DriveConfig drive;
        const auto records = ingest::synthesize_raw(config, drive);
        ingest::save_raw_csv(records, out);
        std::cout << "wrote " << out << " (" << records.size() << " raw samples)\n";
    } else {
        const auto trace = ingest::synthesize_trace(config);
        ts::save_trace(trace, out);
        std::cout << "wrote " << out << " (" << trace.size() << " points)\n";
    }
    return exit_ok;
}

int cmd_forecast(const std::string& model, const std::string& trace_path, double train_frac,
                 std::size_t steps, std::uint64_t seed, const std::string& out) {
    const auto trace = ts::load_trace(trace_path);
    harness::BenchmarkConfig config;
    harness::BenchmarkConfig::TraceRef ref;
    ref.id = trace.id;
    ref.path = trace_path;
    ref.times = trace.times;
    ref.values = trace.values;
    config.traces.push_back(std::move(ref));
    config.models.push_back(harness::model_from_name(model));
    config.horizons = {steps};
    config.train_fractions = {train_frac};
    config.seeds = {seed};
    config.store_predictions = true;
    const auto report = harness::run_benchmark(config);
    write_file(out, report.to_json());
    std::cout << report.to_csv();
    return report.any_failure() ? exit_cell_failure : exit_ok;
}

int cmd_benchmark(const std::string& config_path, const std::string& out_json,
                  const std::string& out_csv) {
    const auto config = harness::BenchmarkConfig::from_json(read_file(config_path));
    const auto report = harness::run_benchmark(config);
    write_file(out_json, report.to_json());
    write_file(out_csv, report.to_csv());
    std::cout << "wrote " << out_json << " and " << out_csv << "\n";
    return report.any_failure() ? exit_cell_failure : exit_ok;
}

int cmd_loo(const std::vector<std::string>& family_paths, const std::string& model,
            double train_frac, std::uint64_t seed, const std::string& tft_json,
            const std::string& out) {
    std::vector<ts::DegradationTrace> family;
    for (const auto& p : family_paths) family.push_back(ts::load_trace(p));
    tft::TftConfig cfg;
    if (!tft_json.empty()) {
        const auto j = nlohmann::json::parse(read_file(tft_json));
        if (j.contains("preset")) cfg = tft::preset(j.at("preset").get<std::string>().at(0));
        cfg.input_window = j.value("input_window", cfg.input_window);
        cfg.tau_max = j.value("tau_max", cfg.tau_max);
        cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
        cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
        cfg.d_model = j.value("d_model", cfg.d_model);
        cfg.lstm_layers = j.value("lstm_layers", cfg.lstm_layers);
        cfg.heads = j.value("heads", cfg.heads);
        cfg.dropout_rate = j.value("dropout_rate", cfg.dropout_rate);
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
    }
    const auto rows =
        harness::loo_long_term(family, harness::model_from_name(model), train_frac, seed, cfg);

    nlohmann::json j;
    j["rows"] = nlohmann::json::array();
    bool failed = false;
    for (const auto& row : rows) {
        nlohmann::json r{{"held_out", row.held_out},
                         {"train_fraction", row.train_fraction},
                         {"seed", row.seed},
                         {"mape", row.mape}};
        if (!row.error.empty()) {
            r["error"] = row.error;
            failed = true;
        }
        r["point"] = row.forecast.point;
        for (const auto& [q, vals] : row.forecast.quantiles)
            r["quantiles"][ts::format_double(q)] = vals;
        j["rows"].push_back(std::move(r));
        std::cout << row.held_out << " mape=" << row.mape
                  << (row.error.empty() ? "" : " error=" + row.error) << "\n";
    }
    write_file(out, j.dump(2));
    return failed ? exit_cell_failure : exit_ok;
}

int cmd_sweep(const std::string& presets_arg, const std::vector<std::string>& trace_paths,
              std::size_t horizon, double train_frac, std::uint64_t seed,
              const std::string& out) {
    std::vector<std::pair<std::string, tft::TftConfig>> presets;
    for (char c : presets_arg)
        if (c >= 'A' && c <= 'G') presets.emplace_back(std::string(1, c), tft::preset(c));
    std::vector<ts::DegradationTrace> traces;
    std::vector<harness::SweepCell> cells;
    for (const auto& p : trace_paths) {
        traces.push_back(ts::load_trace(p));
        cells.push_back({traces.back().id, horizon, train_frac, seed});
    }
    const auto result = harness::sweep_architectures(presets, traces, cells);
    nlohmann::json j{{"winner", result.winner}};
    j["win_counts"] = nlohmann::json::array();
    for (const auto& [name, count] : result.win_counts)
        j["win_counts"].push_back({{"preset", name}, {"wins", count}});
    write_file(out, j.dump(2));
    std::cout << "winner: " << result.winner << "\n";
    return exit_ok;
}

int cmd_attention(const std::string& checkpoint, const std::string& trace_path,
                  const std::string& out) {
    const auto model = tft::TftModel::from_json(read_file(checkpoint));
    const auto trace = ts::load_trace(trace_path);
    if (trace.size() < model.config.input_window)
        throw std::runtime_error("trace shorter than the model input window");
    tft::TftInput input;
    input.static_id = trace.id;
    input.past_values.assign(trace.values.end() - model.config.input_window,
                             trace.values.end());
    if (model.config.covariate_count > 0)
        throw std::runtime_error("attention extraction for covariate models needs the "
                                 "benchmark pipeline (covariates unavailable here)");
    const auto report = tft::extract_attention(model, input);
    write_file(out, report.to_json());
    std::cout << "wrote " << out << " (" << report.steps.size() << " steps)\n";
    return exit_ok;
}

int cmd_report(const std::string& report_path, const std::string& attention_path,
               const std::string& dir) {
    const auto j = nlohmann::json::parse(read_file(report_path));

    // MAPE bars: one row per (test, model, horizon, fraction) averaged over seeds.
    std::map<std::string, std::pair<double, int>> agg;
    for (const auto& r : j.at("rows")) {
        if (r.contains("error")) continue;
        const std::string key = r.at("test").get<std::string>() + "," +
                                r.at("model").get<std::string>() + "," +
                                std::to_string(r.at("horizon").get<std::size_t>()) + "," +
                                ts::format_double(r.at("train_fraction").get<double>());
        auto& [sum, count] = agg[key];
        sum += r.at("mape").get<double>();
        ++count;
    }
    std::string bars = "test,model,horizon,train_fraction,mean_mape\n";
    for (const auto& [key, sc] : agg)
        bars += key + ',' + ts::format_double(sc.first / sc.second) + '\n';
    write_file((std::filesystem::path(dir) / "mape_bars.csv").string(), bars);

    // Forecast-vs-actual curves when predictions were stored.
    std::string curves = "test,model,horizon,train_fraction,seed,step,actual,predicted\n";
    bool have_curves = false;
    for (const auto& r : j.at("rows")) {
        if (!r.contains("predictions")) continue;
        have_curves = true;
        const auto preds = r.at("predictions").get<std::vector<double>>();
        const auto actuals = r.at("actuals").get<std::vector<double>>();
        for (std::size_t i = 0; i < preds.size(); ++i)
            curves += r.at("test").get<std::string>() + ',' +
                      r.at("model").get<std::string>() + ',' +
                      std::to_string(r.at("horizon").get<std::size_t>()) + ',' +
                      ts::format_double(r.at("train_fraction").get<double>()) + ',' +
                      std::to_string(r.at("seed").get<std::uint64_t>()) + ',' +
                      std::to_string(i) + ',' + ts::format_double(actuals[i]) + ',' +
                      ts::format_double(preds[i]) + '\n';
    }
    if (have_curves)
        write_file((std::filesystem::path(dir) / "forecast_curves.csv").string(), curves);

    if (!attention_path.empty()) {
        const auto a = nlohmann::json::parse(read_file(attention_path));
        std::string att = "tau,position,weight\n";
        std::string points = "tau,argmax,max_weight\n";
        for (const auto& s : a.at("steps")) {
            const auto weights = s.at("weights").get<std::vector<double>>();
            for (std::size_t i = 0; i < weights.size(); ++i)
                att += std::to_string(s.at("tau").get<std::size_t>()) + ',' +
                       std::to_string(i) + ',' + ts::format_double(weights[i]) + '\n';
            points += std::to_string(s.at("tau").get<std::size_t>()) + ',' +
                      std::to_string(s.at("argmax").get<std::size_t>()) + ',' +
                      ts::format_double(s.at("max_weight").get<double>()) + '\n';
        }
        write_file((std::filesystem::path(dir) / "attention_curves.csv").string(), att);
        write_file((std::filesystem::path(dir) / "attention_points.csv").string(), points);
    }
    std::cout << "wrote plot data under " << dir << "\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MOSFET ageing forecasting benchmark toolkit"};
    app.require_subcommand(1);

    auto* pre = app.add_subcommand("preprocess", "raw switching CSV -> degradation trace CSV");
    std::string raw_path, pre_config, pre_out = out_path("trace.csv");
    pre->add_option("--raw", raw_path, "raw CSV (t_s,v_gs,v_ds,i_d,t_f)")->required();
    pre->add_option("--config", pre_config, "PreprocessConfig JSON");
    pre->add_option("--out", pre_out, "output trace CSV");

    auto* synth = app.add_subcommand("synth", "SynthConfig JSON -> synthetic trace CSV");
    std::string synth_config, synth_out = out_path("synthetic.csv");
    bool synth_raw = false;
    synth->add_option("--config", synth_config, "SynthConfig JSON")->required();
    synth->add_option("--out", synth_out, "output CSV");
    synth->add_flag("--raw", synth_raw, "emit raw waveforms instead of a trace");

    auto* fc = app.add_subcommand("forecast", "walk-forward forecast for one model/trace");
    std::string fc_model = "HOLT", fc_trace, fc_out = out_path("forecast.json");
    double fc_frac = 0.33;
    std::size_t fc_steps = 1;
    std::uint64_t fc_seed = 1;
    fc->add_option("--model", fc_model, "EKF|UKF|UKF-B|ARIMA|HOLT|E-NN|E-ELM|TFT|TFT-wCov");
    fc->add_option("--trace", fc_trace, "trace CSV")->required();
    fc->add_option("--train-frac", fc_frac, "training fraction in (0,1)");
    fc->add_option("--steps", fc_steps, "forecast horizon N");
    fc->add_option("--seed", fc_seed, "random seed");
    fc->add_option("--out", fc_out, "output report JSON");

    auto* bench = app.add_subcommand("benchmark", "run a benchmark config");
    std::string bench_config, bench_json = out_path("report.json"),
                bench_csv = out_path("report.csv");
    bench->add_option("--config", bench_config, "BenchmarkConfig JSON")->required();
    bench->add_option("--out", bench_json, "output report JSON");
    bench->add_option("--csv", bench_csv, "output report CSV");

    auto* loo = app.add_subcommand("loo", "leave-one-out long-term evaluation");
    std::vector<std::string> loo_family;
    std::string loo_model = "TFT-wCov", loo_tft, loo_out = out_path("loo.json");
    double loo_frac = 0.3;
    std::uint64_t loo_seed = 1;
    loo->add_option("--family", loo_family, "trace CSVs")->required()->expected(-2);
    loo->add_option("--model", loo_model, "TFT|TFT-wCov|E-ELM");
    loo->add_option("--train-frac", loo_frac, "training fraction");
    loo->add_option("--seed", loo_seed, "random seed");
    loo->add_option("--tft-config", loo_tft, "TFT config JSON");
    loo->add_option("--out", loo_out, "output JSON");

    auto* sweep = app.add_subcommand("sweep", "architecture win-count selection");
    std::string sweep_presets = "ABCDEFG", sweep_out = out_path("sweep.json");
    std::vector<std::string> sweep_traces;
    std::size_t sweep_horizon = 1;
    double sweep_frac = 0.33;
    std::uint64_t sweep_seed = 1;
    sweep->add_option("--presets", sweep_presets, "subset of A..G");
    sweep->add_option("--traces", sweep_traces, "trace CSVs")->required()->expected(-1);
    sweep->add_option("--steps", sweep_horizon, "horizon N");
    sweep->add_option("--train-frac", sweep_frac, "training fraction");
    sweep->add_option("--seed", sweep_seed, "random seed");
    sweep->add_option("--out", sweep_out, "output JSON");

    auto* att = app.add_subcommand("attention", "extract attention from a checkpoint");
    std::string att_model, att_trace, att_out = out_path("attention.json");
    att->add_option("--model-checkpoint", att_model, "TftModel JSON")->required();
    att->add_option("--trace", att_trace, "trace CSV")->required();
    att->add_option("--out", att_out, "output AttentionReport JSON");

    auto* rep = app.add_subcommand("report", "report JSON -> per-figure plot-data CSVs");
    std::string rep_in, rep_attention, rep_dir = out_dir();
    rep->add_option("--report", rep_in, "benchmark report JSON")->required();
    rep->add_option("--attention", rep_attention, "AttentionReport JSON");
    rep->add_option("--dir", rep_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (pre->parsed()) return cmd_preprocess(raw_path, pre_config, pre_out);
        if (synth->parsed()) return cmd_synth(synth_config, synth_out, synth_raw);
        if (fc->parsed())
            return cmd_forecast(fc_model, fc_trace, fc_frac, fc_steps, fc_seed, fc_out);
        if (bench->parsed()) return cmd_benchmark(bench_config, bench_json, bench_csv);
        if (loo->parsed())
            return cmd_loo(loo_family, loo_model, loo_frac, loo_seed, loo_tft, loo_out);
        if (sweep->parsed())
            return cmd_sweep(sweep_presets, sweep_traces, sweep_horizon, sweep_frac,
                             sweep_seed, sweep_out);
        if (att->parsed()) return cmd_attention(att_model, att_trace, att_out);
        if (rep->parsed()) return cmd_report(rep_in, rep_attention, rep_dir);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_cell_failure;
    }
    return exit_ok;
}
