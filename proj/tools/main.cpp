// ssae: train, evaluate and inspect seasonally-integrated autoencoders.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ssae/checkpoint.hpp"
#include "ssae/config.hpp"
#include "ssae/errors.hpp"
#include "ssae/eval.hpp"
#include "ssae/gradcheck.hpp"
#include "ssae/kernels.hpp"
#include "ssae/log.hpp"
#include "ssae/pipeline.hpp"

using nlohmann::json;
using namespace ssae;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << text;
}

json history_json(const TrainHistory& h) {
    json epochs = json::array();
    for (const auto& e : h.epochs) {
        json row{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"lr", e.lr}, {"batches", e.batches}};
        row["val_mse"] = std::isnan(e.val_mse) ? json(nullptr) : json(e.val_mse);
        row["val_loss"] = std::isnan(e.val_loss) ? json(nullptr) : json(e.val_loss);
        row["best_val_loss"] = std::isnan(e.best_val_loss) ? json(nullptr) : json(e.best_val_loss);
        epochs.push_back(row);
    }
    json out{{"epochs", epochs}, {"stopped_early", h.stopped_early}};
    out["best_epoch"] = h.best_epoch ? json(*h.best_epoch) : json(nullptr);
    return out;
}

std::filesystem::path history_path_for(const std::filesystem::path& out) {
    auto p = out;
    p.replace_extension();
    return p.string() + ".history.json";
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string data, config, out, history;
    std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a) {
    RunConfig cfg = load_run_config(a.config);
    if (a.seed) cfg.train.seed = *a.seed;
    std::filesystem::path data_path;
    if (!a.data.empty()) data_path = a.data;
    else if (cfg.data) data_path = *cfg.data;
    else throw UsageError("no data file: pass --data or set \"data\" in the config");

    const SeriesTable table = load_csv(data_path);
    const PreparedData data = prepare_data(table, cfg.hyper, cfg.split);
    spdlog::info("{} training, {} validation, {} test windows; test starts {}", data.train.size(), data.val.size(),
                 data.test.size(), data.test_start.iso());

    const auto result = train_model(cfg, data, [](const EpochRecord& e) {
        std::printf("epoch %3zu  train_loss %.6g  val_mse %.6g  lr %.6g\n", e.epoch, e.train_loss, e.val_mse, e.lr);
        std::fflush(stdout);
    });

    Checkpoint ckpt{result.model, cfg.train.seed,
                    json{{"train", to_json(cfg.train)},
                         {"test_start", data.test_start.iso()},
                         {"epochs_run", result.history.epochs.size()},
                         {"parameter_count", ssae_count_parameters(result.model)}}};
    save_checkpoint(ckpt, a.out);
    const auto hist = a.history.empty() ? history_path_for(a.out) : std::filesystem::path(a.history);
    write_json(history_json(result.history), hist);
    spdlog::info("wrote {} and {}", a.out, hist.string());
    return 0;
}

// ---------------------------------------------------------------------------

Date test_start_of(const std::string& flag, const Checkpoint& ckpt) {
    if (!flag.empty()) return Date::parse(flag);
    if (ckpt.metadata.contains("test_start")) return Date::parse(ckpt.metadata["test_start"].get<std::string>());
    throw UsageError("--test-start is required (the checkpoint does not record one)");
}

struct EvaluateArgs {
    std::string model, data, test_start, report;
    std::vector<std::string> aggregate;
};

int cmd_evaluate(const EvaluateArgs& a) {
    MetricReport report;
    if (!a.aggregate.empty()) {
        std::vector<MetricReport> runs;
        for (const auto& f : a.aggregate) runs.push_back(metric_report_from_json(read_json(f)));
        report = aggregate_reports(runs);
    } else {
        if (a.model.empty() || a.data.empty()) throw UsageError("evaluate needs --model and --data (or --aggregate)");
        const auto ckpt = load_checkpoint(a.model);
        const auto table = load_csv(a.data);
        const auto test = test_windows(table, ckpt.model.scaler, ckpt.model.hyper, test_start_of(a.test_start, ckpt));
        report = evaluate(ckpt.model, test);
    }
    emit(to_json(report).dump(2) + "\n", a.report);
    return 0;
}

// ---------------------------------------------------------------------------

struct ForecastArgs {
    std::string model, data, format = "csv";
    bool clamp = false;
};

int cmd_forecast(const ForecastArgs& a) {
    const auto ckpt = load_checkpoint(a.model);
    const auto& m = ckpt.model;
    const auto table = load_csv(a.data);
    table.validate();
    const std::size_t T = m.hyper.lookback;
    if (table.rows() < T) {
        throw DataError("forecast needs at least T=" + std::to_string(T) + " rows, data has " +
                        std::to_string(table.rows()));
    }
    // Validates the column names against the model.
    (void)apply_scaler(table.slice(table.rows() - 1, 1), m.scaler);
    const Matrix inputs = table.input_matrix();
    const auto mm = predict_mm(m, inputs.rows_view(table.rows() - T, T), {a.clamp});

    const Date last = table.dates.back();
    if (a.format == "json") {
        json rows = json::array();
        for (std::size_t k = 0; k < mm.size(); ++k) {
            rows.push_back({{"date", (last + static_cast<std::int64_t>(k + 1)).iso()}, {"precip_mm", mm[k]}});
        }
        std::cout << json{{"forecast", rows}}.dump(2) << "\n";
    } else {
        std::printf("date,precip_mm\n");
        for (std::size_t k = 0; k < mm.size(); ++k) {
            std::printf("%s,%.17g\n", (last + static_cast<std::int64_t>(k + 1)).iso().c_str(), mm[k]);
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct VipArgs {
    std::string config, data, feature, report;
    std::size_t repeats = 1;
    std::uint64_t seed = 1;
};

int cmd_vip(const VipArgs& a) {
    const RunConfig cfg = load_run_config(a.config);
    std::filesystem::path data_path = a.data.empty() ? cfg.data.value_or("") : std::filesystem::path(a.data);
    if (data_path.empty()) throw UsageError("no data file: pass --data or set \"data\" in the config");
    VipOptions opts;
    opts.repetitions = a.repeats;
    opts.seed = a.seed;
    const auto report = vip(cfg, load_csv(data_path), a.feature, opts);
    emit(to_json(report).dump(2) + "\n", a.report);
    return 0;
}

// ---------------------------------------------------------------------------

struct UncertaintyArgs {
    std::string model, data, test_start, report, csv, mask_mode = "per_sequence";
    double p = 0.25;
    std::size_t runs = 50;
    std::vector<double> levels{0.75, 0.95};
    std::uint64_t seed = 1;
};

int cmd_uncertainty(const UncertaintyArgs& a) {
    const auto ckpt = load_checkpoint(a.model);
    const auto table = load_csv(a.data);
    const auto test = test_windows(table, ckpt.model.scaler, ckpt.model.hyper, test_start_of(a.test_start, ckpt));
    UncertaintyOptions opts;
    opts.p = a.p;
    opts.runs = a.runs;
    opts.levels = a.levels;
    opts.seed = a.seed;
    opts.mask_mode = parse_mask_mode(a.mask_mode);
    const auto bands = mc_dropout(ckpt.model, test, opts);
    emit(to_json(bands).dump(2) + "\n", a.report);
    if (!a.csv.empty()) emit(bands_csv(bands), a.csv);
    return 0;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string out;
    SynthConfig cfg;
    std::string start = "2000-01-01";
};

int cmd_synth(SynthArgs a) {
    a.cfg.start = Date::parse(a.start);
    const auto table = synth_generate(a.cfg);
    if (a.out.empty()) std::cout << format_csv(table);
    else write_csv(table, a.out);
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_gradcheck(std::uint64_t seed, double eps, double tol) {
    int failures = 0;
    for (const auto& c : gradcheck_sweep(seed, eps)) {
        std::printf("%-22s max rel error %.3e\n", c.label.c_str(), c.max_error());
        for (const auto& t : c.tensors) {
            if (t.rel_error >= tol) {
                std::fprintf(stderr, "  FAIL %s %s rel error %.3e\n", c.label.c_str(), t.name.c_str(), t.rel_error);
                ++failures;
            }
        }
    }
    if (failures > 0) {
        std::fprintf(stderr, "gradcheck: %d tensor(s) exceed %.1e\n", failures, tol);
        return kExitNumeric;
    }
    std::printf("gradcheck passed (tolerance %.1e)\n", tol);
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_params(const std::string& config, const std::string& model, const std::string& data, bool verbose) {
    SsaeModel m;
    std::optional<std::size_t> stored;
    if (!model.empty()) {
        const auto j = read_json(model);
        m = checkpoint_from_json(j).model;
        stored = checkpoint_scalar_count(j);
    } else if (!config.empty()) {
        const auto cfg = load_run_config(config);
        std::filesystem::path data_path = data.empty() ? cfg.data.value_or("") : std::filesystem::path(data);
        if (data_path.empty()) throw UsageError("params needs the data columns: pass --data or set \"data\"");
        const auto table = load_csv(data_path);
        m = make_model(cfg.hyper, fit_scaler(table));
    } else {
        throw UsageError("params needs --config or --model");
    }
    if (verbose) {
        for (const auto& t : model_tensors(m)) std::printf("%-28s %zu\n", t.name.c_str(), t.data.size());
    }
    std::printf("parameters %zu\n", ssae_count_parameters(m));
    if (stored) std::printf("checkpoint scalars %zu\n", *stored);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    init_logging();
    CLI::App app{"Seasonally-integrated autoencoder forecasting"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "ssae 0.1.0");

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
    train_cmd->add_option("--data", train.data, "Series CSV");
    train_cmd->add_option("--config", train.config, "Run config JSON")->required();
    train_cmd->add_option("--out", train.out, "Checkpoint JSON to write")->required();
    train_cmd->add_option("--history", train.history, "History JSON (default <out>.history.json)");
    train_cmd->add_option("--seed", train.seed, "Overrides the config seed");

    EvaluateArgs evaluate;
    auto* eval_cmd = app.add_subcommand("evaluate", "Per-horizon RMSE and CORR on the test period");
    eval_cmd->add_option("--model", evaluate.model, "Checkpoint JSON");
    eval_cmd->add_option("--data", evaluate.data, "Series CSV");
    eval_cmd->add_option("--test-start", evaluate.test_start, "First test date (default: from checkpoint)");
    eval_cmd->add_option("--report", evaluate.report, "Report JSON (default stdout)");
    eval_cmd->add_option("--aggregate", evaluate.aggregate, "Merge report files into mean and sample std");

    ForecastArgs forecast;
    auto* fc_cmd = app.add_subcommand("forecast", "Forecast H days after the last row");
    fc_cmd->add_option("--model", forecast.model, "Checkpoint JSON")->required();
    fc_cmd->add_option("--data", forecast.data, "Series CSV")->required();
    fc_cmd->add_flag("--clamp-nonneg", forecast.clamp, "Clamp negative forecasts to 0 mm");
    fc_cmd->add_option("--format", forecast.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    VipArgs vip_args;
    auto* vip_cmd = app.add_subcommand("vip", "Permutation variable importance with retraining");
    vip_cmd->add_option("--config", vip_args.config, "Run config JSON")->required();
    vip_cmd->add_option("--data", vip_args.data, "Series CSV");
    vip_cmd->add_option("--feature", vip_args.feature, "Column to permute")->required();
    vip_cmd->add_option("--repeats", vip_args.repeats, "Repetitions")->check(CLI::PositiveNumber);
    vip_cmd->add_option("--seed", vip_args.seed, "Permutation seed");
    vip_cmd->add_option("--report", vip_args.report, "Report JSON (default stdout)");

    UncertaintyArgs unc;
    auto* unc_cmd = app.add_subcommand("uncertainty", "Monte Carlo dropout forecast bands");
    unc_cmd->add_option("--model", unc.model, "Checkpoint JSON")->required();
    unc_cmd->add_option("--data", unc.data, "Series CSV")->required();
    unc_cmd->add_option("--test-start", unc.test_start, "First test date (default: from checkpoint)");
    unc_cmd->add_option("--p", unc.p, "Drop probability");
    unc_cmd->add_option("--runs", unc.runs, "Stochastic passes");
    unc_cmd->add_option("--levels", unc.levels, "Band levels")->delimiter(',');
    unc_cmd->add_option("--seed", unc.seed, "Mask seed");
    unc_cmd->add_option("--mask-mode", unc.mask_mode, "per_sequence or per_step")
        ->check(CLI::IsMember({"per_sequence", "per_step"}));
    unc_cmd->add_option("--report", unc.report, "Bands JSON (default stdout)");
    unc_cmd->add_option("--csv", unc.csv, "Plot-ready bands CSV");

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic seasonal rainfall series");
    synth_cmd->add_option("--out", synth.out, "CSV to write (default stdout)");
    synth_cmd->add_option("--days", synth.cfg.days, "Number of days");
    synth_cmd->add_option("--period", synth.cfg.period, "Seasonal period in days");
    synth_cmd->add_option("--seed", synth.cfg.seed, "Seed");
    synth_cmd->add_option("--features", synth.cfg.n_features, "Feature columns besides precip");
    synth_cmd->add_option("--noise", synth.cfg.noise_scale, "Noise scale");
    synth_cmd->add_option("--start", synth.start, "First date");

    std::uint64_t gc_seed = 1;
    double gc_eps = 1e-5, gc_tol = 1e-4;
    auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every gradient on tiny models");
    gc_cmd->add_option("--seed", gc_seed, "Seed");
    gc_cmd->add_option("--eps", gc_eps, "Central-difference step");
    gc_cmd->add_option("--tol", gc_tol, "Relative error tolerance");

    std::string p_config, p_model, p_data;
    bool p_verbose = false;
    auto* params_cmd = app.add_subcommand("params", "Count model parameters");
    params_cmd->add_option("--config", p_config, "Run config JSON");
    params_cmd->add_option("--model", p_model, "Checkpoint JSON");
    params_cmd->add_option("--data", p_data, "Series CSV supplying the columns");
    params_cmd->add_flag("--tensors", p_verbose, "List every tensor");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        spdlog::debug("kernels: {}", kernels::isa_name(kernels::active_isa()));
        if (*train_cmd) return cmd_train(train);
        if (*eval_cmd) return cmd_evaluate(evaluate);
        if (*fc_cmd) return cmd_forecast(forecast);
        if (*vip_cmd) return cmd_vip(vip_args);
        if (*unc_cmd) return cmd_uncertainty(unc);
        if (*synth_cmd) return cmd_synth(synth);
        if (*gc_cmd) return cmd_gradcheck(gc_seed, gc_eps, gc_tol);
        if (*params_cmd) return cmd_params(p_config, p_model, p_data, p_verbose);
    } catch (const UsageError& e) {
        spdlog::error("{}", e.what());
        return kExitUsage;
    } catch (const DataError& e) {
        spdlog::error("{}", e.what());
        return kExitData;
    } catch (const NumericError& e) {
        spdlog::error("{}", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitData;
    }
    return kExitUsage;
}
