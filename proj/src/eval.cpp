#include "ssae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ssae/errors.hpp"
#include "ssae/pipeline.hpp"

namespace ssae {

double rmse(std::span<const double> pred, std::span<const double> actual) {
    require(pred.size() == actual.size(), "rmse: length mismatch");
    require(!pred.empty(), "rmse: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred[i] - actual[i];
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(pred.size()));
}

double corr(std::span<const double> pred, std::span<const double> actual) {
    require(pred.size() == actual.size(), "corr: length mismatch");
    require(!pred.empty(), "corr: empty input");
    const double n = static_cast<double>(pred.size());
    double mp = 0.0, ma = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        mp += pred[i];
        ma += actual[i];
    }
    mp /= n;
    ma /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double dp = pred[i] - mp;
        const double da = actual[i] - ma;
        sxy += dp * da;
        sxx += dp * dp;
        syy += da * da;
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("correlation undefined for a constant series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

MetricReport evaluate(const SsaeModel& model, const WindowSet& test, const ScalerStats& scaler) {
    if (test.empty()) throw DataError("test set is empty");
    if (test.lookback() != model.hyper.lookback || test.horizon() != model.hyper.horizon) {
        throw DataError("test windows do not match the model's T and H");
    }
    const std::size_t horizon = model.hyper.horizon;
    std::vector<Vector> preds(horizon, Vector(test.size()));
    std::vector<Vector> actual(horizon, Vector(test.size()));
    for (std::size_t i = 0; i < test.size(); ++i) {
        const Vector mm = invert_target(ssae_forward(model, test.input(i)).forecast, scaler);
        const Vector truth = invert_target(test.target(i), scaler);
        for (std::size_t k = 0; k < horizon; ++k) {
            if (!std::isfinite(mm[k])) throw NumericError("non-finite forecast for " + test.anchor_date(i).iso());
            preds[k][i] = mm[k];
            actual[k][i] = truth[k];
        }
    }
    MetricReport report;
    report.n_test = test.size();
    for (std::size_t k = 0; k < horizon; ++k) {
        HorizonScore s;
        s.step = k + 1;
        s.rmse = rmse(preds[k], actual[k]);
        try {
            s.corr = corr(preds[k], actual[k]);
        } catch (const UndefinedCorrelation&) {
            s.corr.reset();
        }
        report.horizons.push_back(s);
    }
    return report;
}

MetricReport evaluate(const SsaeModel& model, const WindowSet& test) { return evaluate(model, test, model.scaler); }

namespace {

struct MeanStd {
    double mean = 0.0;
    std::optional<double> std;
};

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    if (xs.size() >= 2) {
        double ss = 0.0;
        for (double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return out;
}

std::optional<double> opt_number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace

MetricReport aggregate_reports(std::span<const MetricReport> reports) {
    if (reports.empty()) throw DataError("no reports to aggregate");
    const std::size_t horizon = reports.front().horizons.size();
    for (const auto& r : reports) {
        if (r.horizons.size() != horizon) throw DataError("reports to aggregate have different horizons");
    }
    MetricReport out;
    out.n_test = reports.front().n_test;
    out.runs = reports.size();
    for (std::size_t k = 0; k < horizon; ++k) {
        std::vector<double> rm, co;
        for (const auto& r : reports) {
            rm.push_back(r.horizons[k].rmse);
            if (r.horizons[k].corr) co.push_back(*r.horizons[k].corr);
        }
        HorizonScore s;
        s.step = k + 1;
        const auto r = mean_std(rm);
        s.rmse = r.mean;
        s.rmse_std = r.std;
        if (!co.empty()) {
            const auto c = mean_std(co);
            s.corr = c.mean;
            s.corr_std = c.std;
        }
        out.horizons.push_back(s);
    }
    return out;
}

nlohmann::json to_json(const MetricReport& report) {
    nlohmann::json j;
    j["n_test"] = report.n_test;
    j["runs"] = report.runs;
    j["units"] = "mm";
    auto& hs = j["horizons"] = nlohmann::json::array();
    for (const auto& s : report.horizons) {
        nlohmann::json h;
        h["step"] = s.step;
        h["rmse"] = s.rmse;
        h["corr"] = s.corr ? nlohmann::json(*s.corr) : nlohmann::json(nullptr);
        if (report.runs > 1) {
            h["rmse_std"] = s.rmse_std ? nlohmann::json(*s.rmse_std) : nlohmann::json(nullptr);
            h["corr_std"] = s.corr_std ? nlohmann::json(*s.corr_std) : nlohmann::json(nullptr);
        }
        hs.push_back(h);
    }
    return j;
}

MetricReport metric_report_from_json(const nlohmann::json& j) {
    try {
        MetricReport r;
        r.n_test = j.at("n_test").get<std::size_t>();
        r.runs = j.value("runs", std::size_t{1});
        for (const auto& h : j.at("horizons")) {
            HorizonScore s;
            s.step = h.at("step").get<std::size_t>();
            s.rmse = h.at("rmse").get<double>();
            s.corr = opt_number(h, "corr");
            s.rmse_std = opt_number(h, "rmse_std");
            s.corr_std = opt_number(h, "corr_std");
            r.horizons.push_back(s);
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed metric report: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Variable importance

SeriesTable permute_column(const SeriesTable& table, const std::string& column, SplitMix64& rng) {
    SeriesTable out = table;
    if (column == kTargetColumn) {
        shuffle(std::span<double>(out.target), rng);
        return out;
    }
    const auto it = std::find(table.feature_names.begin(), table.feature_names.end(), column);
    if (it == table.feature_names.end()) throw DataError("unknown feature '" + column + "'");
    const auto j = static_cast<std::size_t>(it - table.feature_names.begin());
    std::vector<double> values(table.rows());
    for (std::size_t t = 0; t < table.rows(); ++t) values[t] = table.features(t, j);
    shuffle(std::span<double>(values), rng);
    for (std::size_t t = 0; t < table.rows(); ++t) out.features(t, j) = values[t];
    return out;
}

namespace {

struct DayOne {
    double rmse = 0.0;
    double corr = 0.0;
};

DayOne day_one(const MetricReport& report) {
    const auto& s = report.horizons.front();
    // A constant forecast carries no linear information about the target.
    return {s.rmse, s.corr.value_or(0.0)};
}

DayOne train_and_score(const RunConfig& cfg, const SeriesTable& data) {
    const auto prepared = prepare_data(data, cfg.hyper, cfg.split);
    const auto fitted = train_model(cfg, prepared);
    return day_one(evaluate(fitted.model, prepared.test));
}

void finish(VipReport& report) {
    double r = 0.0, c = 0.0;
    for (const auto& rep : report.reps) {
        r += rep.rmse;
        c += rep.corr;
    }
    const double n = static_cast<double>(report.reps.size());
    report.repetitions = report.reps.size();
    report.vip_rmse = r / n - report.baseline_rmse;
    report.vip_corr = report.baseline_corr - c / n;
}

void check_feature(const SeriesTable& data, const std::string& feature) {
    const auto names = data.input_names();
    if (std::find(names.begin(), names.end(), feature) == names.end()) {
        throw DataError("unknown feature '" + feature + "'");
    }
}

}  // namespace

VipReport vip(const RunConfig& cfg, const SeriesTable& data, const std::string& feature, const VipOptions& opts) {
    check_feature(data, feature);
    if (opts.repetitions < 1) throw DataError("VIP needs at least one repetition");
    VipReport report;
    report.feature = feature;
    if (opts.baseline_rmse && opts.baseline_corr) {
        report.baseline_rmse = *opts.baseline_rmse;
        report.baseline_corr = *opts.baseline_corr;
    } else {
        const auto base = train_and_score(cfg, data);
        report.baseline_rmse = base.rmse;
        report.baseline_corr = base.corr;
    }
    SplitMix64 rng(opts.seed);
    for (std::size_t r = 0; r < opts.repetitions; ++r) {
        SplitMix64 perm_rng = rng.split();
        RunConfig rep_cfg = cfg;
        rep_cfg.train.seed = derive_seed(opts.seed, 1000 + r);
        const auto score = train_and_score(rep_cfg, permute_column(data, feature, perm_rng));
        report.reps.push_back({rep_cfg.train.seed, score.rmse, score.corr});
    }
    finish(report);
    return report;
}

VipReport vip_reevaluate(const SsaeModel& model, const SeriesTable& data, const Date& test_start,
                         const std::string& feature, const VipOptions& opts) {
    check_feature(data, feature);
    if (opts.repetitions < 1) throw DataError("VIP needs at least one repetition");
    VipReport report;
    report.feature = feature;
    if (opts.baseline_rmse && opts.baseline_corr) {
        report.baseline_rmse = *opts.baseline_rmse;
        report.baseline_corr = *opts.baseline_corr;
    } else {
        const auto base = day_one(evaluate(model, test_windows(data, model.scaler, model.hyper, test_start)));
        report.baseline_rmse = base.rmse;
        report.baseline_corr = base.corr;
    }
    SplitMix64 rng(opts.seed);
    for (std::size_t r = 0; r < opts.repetitions; ++r) {
        SplitMix64 perm_rng = rng.split();
        const auto permuted = permute_column(data, feature, perm_rng);
        const auto score = day_one(evaluate(model, test_windows(permuted, model.scaler, model.hyper, test_start)));
        report.reps.push_back({opts.seed, score.rmse, score.corr});
    }
    finish(report);
    return report;
}

nlohmann::json to_json(const VipReport& report) {
    nlohmann::json j;
    j["feature"] = report.feature;
    j["baseline_rmse"] = report.baseline_rmse;
    j["baseline_corr"] = report.baseline_corr;
    j["vip_rmse"] = report.vip_rmse;
    j["vip_corr"] = report.vip_corr;
    j["repetitions"] = report.repetitions;
    auto& reps = j["reps"] = nlohmann::json::array();
    for (const auto& r : report.reps) reps.push_back({{"seed", r.seed}, {"rmse", r.rmse}, {"corr", r.corr}});
    return j;
}

// ---------------------------------------------------------------------------
// Monte Carlo dropout

double empirical_quantile(std::span<const double> sorted, double q) {
    require(!sorted.empty(), "empirical_quantile: empty sample");
    require(q >= 0.0 && q <= 1.0, "empirical_quantile: level must be in [0, 1]");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

UncertaintyBands mc_dropout(const SsaeModel& model, const WindowSet& test, const UncertaintyOptions& opts) {
    if (!(opts.p > 0.0 && opts.p < 1.0)) throw DataError("dropout probability must be in (0, 1)");
    if (opts.runs < 2) throw DataError("Monte Carlo dropout needs at least 2 runs");
    for (double l : opts.levels) {
        if (!(l > 0.0 && l < 1.0)) throw DataError("band levels must be in (0, 1)");
    }
    if (test.empty()) throw DataError("test set is empty");
    const std::size_t horizon = model.hyper.horizon;
    const std::size_t n = test.size();

    // samples[(i * H + k) * runs + r]
    std::vector<double> samples(n * horizon * opts.runs);
    for (std::size_t r = 0; r < opts.runs; ++r) {
        SplitMix64 run_rng(derive_seed(opts.seed, r));
        SsaeMasks network;
        if (opts.mask_mode == MaskMode::per_sequence) network = sample_masks(model, opts.p, run_rng);
        for (std::size_t i = 0; i < n; ++i) {
            SsaeMasks per_step;
            if (opts.mask_mode == MaskMode::per_step) per_step = sample_masks(model, opts.p, run_rng, MaskMode::per_step);
            const SsaeMasks& masks = opts.mask_mode == MaskMode::per_sequence ? network : per_step;
            const Vector mm = invert_target(ssae_forward(model, test.input(i), &masks).forecast, model.scaler);
            for (std::size_t k = 0; k < horizon; ++k) samples[(i * horizon + k) * opts.runs + r] = mm[k];
        }
    }

    UncertaintyBands out;
    out.p = opts.p;
    out.runs = opts.runs;
    out.levels = opts.levels;
    out.windows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        WindowBands wb;
        wb.anchor = test.anchor_date(i);
        wb.actual = invert_target(test.target(i), model.scaler);
        for (std::size_t k = 0; k < horizon; ++k) {
            std::span<double> s(samples.data() + (i * horizon + k) * opts.runs, opts.runs);
            std::sort(s.begin(), s.end());
            HorizonBands hb;
            for (double v : s) hb.mean += v;
            hb.mean /= static_cast<double>(opts.runs);
            hb.median = empirical_quantile(s, 0.5);
            for (double l : opts.levels) {
                hb.bands.push_back({l, empirical_quantile(s, (1.0 - l) / 2.0), empirical_quantile(s, (1.0 + l) / 2.0)});
            }
            wb.horizon.push_back(std::move(hb));
        }
        out.windows.push_back(std::move(wb));
    }
    return out;
}

nlohmann::json to_json(const UncertaintyBands& bands) {
    nlohmann::json j;
    j["p"] = bands.p;
    j["runs"] = bands.runs;
    j["levels"] = bands.levels;
    j["units"] = "mm";
    auto& ws = j["windows"] = nlohmann::json::array();
    for (const auto& w : bands.windows) {
        nlohmann::json jw;
        jw["anchor"] = w.anchor.iso();
        jw["actual"] = w.actual;
        auto& hs = jw["horizons"] = nlohmann::json::array();
        for (std::size_t k = 0; k < w.horizon.size(); ++k) {
            const auto& h = w.horizon[k];
            nlohmann::json jh{{"step", k + 1}, {"date", (w.anchor + static_cast<std::int64_t>(k)).iso()},
                              {"mean", h.mean}, {"median", h.median}};
            auto& jb = jh["bands"] = nlohmann::json::array();
            for (const auto& b : h.bands) jb.push_back({{"level", b.level}, {"lower", b.lower}, {"upper", b.upper}});
            hs.push_back(jh);
        }
        ws.push_back(jw);
    }
    return j;
}

std::string bands_csv(const UncertaintyBands& bands) {
    std::string out = "anchor,date,step,actual,mean,median";
    char buf[128];
    for (double l : bands.levels) {
        std::snprintf(buf, sizeof buf, ",lower_%g,upper_%g", l * 100.0, l * 100.0);
        out += buf;
    }
    out += "\n";
    for (const auto& w : bands.windows) {
        for (std::size_t k = 0; k < w.horizon.size(); ++k) {
            const auto& h = w.horizon[k];
            out += w.anchor.iso() + "," + (w.anchor + static_cast<std::int64_t>(k)).iso();
            std::snprintf(buf, sizeof buf, ",%zu,%.17g,%.17g,%.17g", k + 1, w.actual[k], h.mean, h.median);
            out += buf;
            for (const auto& b : h.bands) {
                std::snprintf(buf, sizeof buf, ",%.17g,%.17g", b.lower, b.upper);
                out += buf;
            }
            out += "\n";
        }
    }
    return out;
}

}  // namespace ssae
