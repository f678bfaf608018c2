#pragma once

#include <functional>

#include "ssae/config.hpp"
#include "ssae/dataio.hpp"
#include "ssae/ssae_model.hpp"
#include "ssae/train.hpp"

namespace ssae {

// Scaled windows for one experiment. The scaler is fitted on training rows
// only; test windows borrow their first T rows of context from before the
// test start.
struct PreparedData {
    ScalerStats scaler;
    WindowSet train;
    WindowSet val;
    WindowSet test;
    Date test_start;
};

// Resolves the split dates of `split` against `table`.
std::pair<Date, Date> resolve_split(const SeriesTable& table, const SplitConfig& split);

PreparedData prepare_data(const SeriesTable& table, const SsaeHyper& hyper, const SplitConfig& split);

// Test windows for an already fitted scaler.
WindowSet test_windows(const SeriesTable& table, const ScalerStats& scaler, const SsaeHyper& hyper,
                       const Date& test_start);

// Fresh Glorot initialization from the config seed, then fit.
FitResult train_model(const RunConfig& cfg, const PreparedData& data, const EpochCallback& on_epoch = {});

}  // namespace ssae
