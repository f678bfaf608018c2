#include "ssae/pipeline.hpp"

#include <cmath>

#include "ssae/errors.hpp"

namespace ssae {

std::pair<Date, Date> resolve_split(const SeriesTable& table, const SplitConfig& split) {
    if (table.rows() == 0) throw DataError("dataset is empty");
    Date test_start;
    if (split.test_start) {
        test_start = *split.test_start;
    } else {
        if (split.test_days < 1 || split.test_days >= table.rows()) {
            throw DataError("test_days must be between 1 and the series length");
        }
        test_start = table.dates.back() + (1 - static_cast<std::int64_t>(split.test_days));
    }
    const Date train_end = split.train_end ? *split.train_end : test_start + (-1);
    if (!(train_end < test_start)) {
        throw DataError("train end " + train_end.iso() + " must precede test start " + test_start.iso());
    }
    return {train_end, test_start};
}

WindowSet test_windows(const SeriesTable& table, const ScalerStats& scaler, const SsaeHyper& hyper,
                       const Date& test_start) {
    const auto context = with_context(table, test_start, hyper.lookback);
    return make_windows(apply_scaler(context, scaler), hyper.lookback, hyper.horizon);
}

PreparedData prepare_data(const SeriesTable& table, const SsaeHyper& hyper, const SplitConfig& split) {
    table.validate();
    hyper.validate(table.input_names());
    if (!(split.val_fraction >= 0.0 && split.val_fraction < 1.0)) throw DataError("val_fraction must be in [0, 1)");

    const auto [train_end, test_start] = resolve_split(table, split);
    const auto [train_rows, test_rows] = split_by_date(table, train_end, test_start);

    PreparedData out;
    out.test_start = test_start;
    out.scaler = fit_scaler(train_rows);
    const WindowSet all = make_windows(apply_scaler(train_rows, out.scaler), hyper.lookback, hyper.horizon);

    // Validation windows are the chronological tail; H-1 windows are dropped
    // between the two so no training target is also a validation target.
    const auto n_val = static_cast<std::size_t>(std::floor(split.val_fraction * static_cast<double>(all.size())));
    const std::size_t gap = n_val > 0 ? hyper.horizon - 1 : 0;
    if (n_val + gap >= all.size()) throw DataError("training period too short for the validation split");
    out.train = all.subset(0, all.size() - n_val - gap);
    out.val = all.subset(all.size() - n_val, n_val);
    out.test = test_windows(table, out.scaler, hyper, test_start);
    return out;
}

FitResult train_model(const RunConfig& cfg, const PreparedData& data, const EpochCallback& on_epoch) {
    SsaeModel model = make_model(cfg.hyper, data.scaler);
    SplitMix64 init_rng(derive_seed(cfg.train.seed, 1));
    initialize(model, init_rng);
    return fit(std::move(model), data.train, data.val, cfg.train, on_epoch);
}

}  // namespace ssae
