#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssae/config.hpp"
#include "ssae/dataio.hpp"
#include "ssae/ssae_model.hpp"

namespace ssae {

// sqrt(mean((pred - actual)^2)).
double rmse(std::span<const double> pred, std::span<const double> actual);

// Pearson correlation. Throws UndefinedCorrelation when either series is constant.
double corr(std::span<const double> pred, std::span<const double> actual);

class UndefinedCorrelation : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct HorizonScore {
    std::size_t step = 1;  // 1-based horizon day
    double rmse = 0.0;
    std::optional<double> corr;  // empty when undefined (constant series)
    // Filled by aggregate_reports.
    std::optional<double> rmse_std;
    std::optional<double> corr_std;
};

struct MetricReport {
    std::vector<HorizonScore> horizons;
    std::size_t n_test = 0;
    std::size_t runs = 1;
};

// Forecasts inverse-scaled to mm, then one (rmse, corr) pair per horizon step.
MetricReport evaluate(const SsaeModel& model, const WindowSet& test);
MetricReport evaluate(const SsaeModel& model, const WindowSet& test, const ScalerStats& scaler);

// Mean and sample standard deviation across repeated runs.
MetricReport aggregate_reports(std::span<const MetricReport> reports);

nlohmann::json to_json(const MetricReport& report);
MetricReport metric_report_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Permutation variable importance

struct VipOptions {
    std::size_t repetitions = 1;
    std::uint64_t seed = 1;
    // Baseline day-1 scores; computed by an unpermuted run when absent.
    std::optional<double> baseline_rmse;
    std::optional<double> baseline_corr;
};

struct VipRep {
    std::uint64_t seed = 0;
    double rmse = 0.0;
    double corr = 0.0;
};

struct VipReport {
    std::string feature;
    double baseline_rmse = 0.0;
    double baseline_corr = 0.0;
    double vip_rmse = 0.0;  // mean R_j - baseline rmse
    double vip_corr = 0.0;  // baseline corr - mean C_j
    std::size_t repetitions = 0;
    std::vector<VipRep> reps;
};

// Permutes one input column of the whole series (train and test alike),
// retrains from a fresh initialization and scores next-day forecasts.
VipReport vip(const RunConfig& cfg, const SeriesTable& data, const std::string& feature, const VipOptions& opts);

// Same, but re-evaluates the trained `model` on permuted test data instead of
// retraining.
VipReport vip_reevaluate(const SsaeModel& model, const SeriesTable& data, const Date& test_start,
                         const std::string& feature, const VipOptions& opts);

// The table with one input column (feature or "precip") permuted.
SeriesTable permute_column(const SeriesTable& table, const std::string& column, SplitMix64& rng);

nlohmann::json to_json(const VipReport& report);

// ---------------------------------------------------------------------------
// Monte Carlo dropout

struct UncertaintyOptions {
    double p = 0.25;
    std::size_t runs = 50;
    std::vector<double> levels{0.75, 0.95};
    std::uint64_t seed = 1;
    MaskMode mask_mode = MaskMode::per_sequence;
};

struct Band {
    double level = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct HorizonBands {
    double mean = 0.0;
    double median = 0.0;
    std::vector<Band> bands;  // in the order of UncertaintyOptions::levels
};

struct WindowBands {
    Date anchor;
    std::vector<double> actual;         // mm
    std::vector<HorizonBands> horizon;  // one per step
};

struct UncertaintyBands {
    double p = 0.0;
    std::size_t runs = 0;
    std::vector<double> levels;
    std::vector<WindowBands> windows;
};

// Each run samples one thinned network (one mask per branch) and forecasts
// every test window with it; bands are empirical quantiles over runs, in mm.
UncertaintyBands mc_dropout(const SsaeModel& model, const WindowSet& test, const UncertaintyOptions& opts);

// Empirical quantile with linear interpolation between order statistics.
double empirical_quantile(std::span<const double> sorted, double q);

nlohmann::json to_json(const UncertaintyBands& bands);
// Plot-ready long format: anchor,date,step,actual,mean,median,lower_<l>,upper_<l>...
std::string bands_csv(const UncertaintyBands& bands);

}  // namespace ssae
