#include "ssae/checkpoint.hpp"

#include <functional>
#include <map>
#include <numeric>

#include "ssae/config.hpp"
#include "ssae/errors.hpp"

namespace ssae {

using nlohmann::json;

json to_json(const Checkpoint& ckpt) {
    const auto& m = ckpt.model;
    json tensors = json::array();
    for (const auto& t : model_tensors(m)) {
        tensors.push_back({{"name", t.name},
                           {"shape", t.shape},
                           {"data", std::vector<double>(t.data.begin(), t.data.end())}});
    }
    return json{{"format_version", kCheckpointFormat},
                {"variant", to_string(m.hyper.variant)},
                {"hyper", to_json(m.hyper)},
                {"scaler", {{"names", m.scaler.names}, {"min", m.scaler.mins}, {"max", m.scaler.maxs}}},
                {"tensors", tensors},
                {"seed", ckpt.seed},
                {"metadata", ckpt.metadata}};
}

Checkpoint checkpoint_from_json(const json& j, std::optional<ModelVariant> expected) {
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kCheckpointFormat) {
            throw DataError("unsupported checkpoint format_version " + std::to_string(version));
        }
        const auto variant = parse_model_variant(j.at("variant").get<std::string>());
        if (expected && *expected != variant) {
            throw DataError("checkpoint holds a " + std::string(to_string(variant)) + " model, expected " +
                            std::string(to_string(*expected)));
        }
        SsaeHyper hyper = hyper_from_json(j.at("hyper"));
        if (hyper.variant != variant) throw DataError("checkpoint variant disagrees with its hyperparameters");

        ScalerStats scaler;
        const auto& s = j.at("scaler");
        scaler.names = s.at("names").get<std::vector<std::string>>();
        scaler.mins = s.at("min").get<Vector>();
        scaler.maxs = s.at("max").get<Vector>();
        if (scaler.names.size() != scaler.mins.size() || scaler.mins.size() != scaler.maxs.size()) {
            throw DataError("checkpoint scaler arrays differ in length");
        }

        Checkpoint ckpt{make_model(hyper, scaler), j.at("seed").get<std::uint64_t>(),
                        j.value("metadata", json::object())};

        std::map<std::string, const json*> stored;
        for (const auto& t : j.at("tensors")) {
            const auto name = t.at("name").get<std::string>();
            if (!stored.emplace(name, &t).second) throw DataError("duplicate tensor '" + name + "'");
        }
        auto refs = model_tensors(ckpt.model);
        if (refs.size() != stored.size()) {
            throw DataError("checkpoint has " + std::to_string(stored.size()) + " tensors, model expects " +
                            std::to_string(refs.size()));
        }
        for (auto& ref : refs) {
            const auto it = stored.find(ref.name);
            if (it == stored.end()) throw DataError("checkpoint is missing tensor '" + ref.name + "'");
            const auto& t = *it->second;
            if (t.at("shape").get<std::vector<std::size_t>>() != ref.shape) {
                throw DataError("tensor '" + ref.name + "' has the wrong shape");
            }
            const auto data = t.at("data").get<Vector>();
            if (data.size() != ref.data.size()) {
                throw DataError("tensor '" + ref.name + "' data length does not match its shape");
            }
            std::copy(data.begin(), data.end(), ref.data.begin());
        }
        return ckpt;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    write_json(to_json(ckpt), path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<ModelVariant> expected) {
    return checkpoint_from_json(read_json(path), expected);
}

std::size_t checkpoint_scalar_count(const json& j) {
    std::size_t total = 0;
    for (const auto& t : j.at("tensors")) total += t.at("data").size();
    return total;
}

}  // namespace ssae
