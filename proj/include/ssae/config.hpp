#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "ssae/dataio.hpp"
#include "ssae/ssae_model.hpp"
#include "ssae/train.hpp"

namespace ssae {

// Chronological split of one dataset. Without dates, the last `test_days`
// form the test set. The validation set is the tail `val_fraction` of the
// training windows.
struct SplitConfig {
    std::optional<Date> train_end;
    std::optional<Date> test_start;
    std::size_t test_days = 3 * 365;
    double val_fraction = 0.1;
};

// Everything one training run needs besides the data.
struct RunConfig {
    SsaeHyper hyper;
    TrainConfig train;
    SplitConfig split;
    std::optional<std::filesystem::path> data;

    // Component invariants plus variant/combo consistency.
    void validate() const;
};

nlohmann::json to_json(const SsaeHyper& hyper);
SsaeHyper hyper_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

RunConfig load_run_config(const std::filesystem::path& path);

// Reads a JSON document; DataError on I/O or parse failure.
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace ssae
