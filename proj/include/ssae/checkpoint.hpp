#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "json.hpp"
#include "ssae/ssae_model.hpp"

namespace ssae {

inline constexpr int kCheckpointFormat = 1;

struct Checkpoint {
    SsaeModel model;
    std::uint64_t seed = 0;
    nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json to_json(const Checkpoint& ckpt);
// `expected` rejects a checkpoint of another model variant.
Checkpoint checkpoint_from_json(const nlohmann::json& j, std::optional<ModelVariant> expected = std::nullopt);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<ModelVariant> expected = std::nullopt);

// Total scalar count over the serialized tensor arrays of a checkpoint document.
std::size_t checkpoint_scalar_count(const nlohmann::json& j);

}  // namespace ssae
