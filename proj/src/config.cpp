#include "ssae/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "ssae/errors.hpp"

namespace ssae {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
    if (!j.is_object()) throw DataError(std::string(where) + " must be a JSON object");
    std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, _] : j.items()) {
        if (!allowed.contains(key)) throw DataError(std::string("unknown key '") + key + "' in " + where);
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json to_json(const SsaeHyper& h) {
    return json{{"variant", to_string(h.variant)},
                {"T", h.lookback},
                {"c", h.short_window},
                {"H", h.horizon},
                {"pool_window", h.pool_window},
                {"pool_stride", h.pool_stride},
                {"hidden_short", h.hidden_short},
                {"hidden_seasonal", h.hidden_seasonal},
                {"seasonal_features", h.seasonal_features},
                {"combo", to_string(h.combo)},
                {"head_bias", h.head_bias},
                {"s2s1_bridge", h.s2s1_bridge}};
}

SsaeHyper hyper_from_json(const json& j) {
    reject_unknown(j,
                   {"variant", "T", "c", "H", "pool_window", "pool_stride", "hidden_short", "hidden_seasonal",
                    "seasonal_features", "combo", "head_bias", "s2s1_bridge"},
                   "model config");
    SsaeHyper h;
    try {
        if (j.contains("variant")) h.variant = parse_model_variant(j.at("variant").get<std::string>());
        read(j, "T", h.lookback);
        read(j, "c", h.short_window);
        read(j, "H", h.horizon);
        read(j, "pool_window", h.pool_window);
        read(j, "pool_stride", h.pool_stride);
        read(j, "hidden_short", h.hidden_short);
        read(j, "hidden_seasonal", h.hidden_seasonal);
        read(j, "seasonal_features", h.seasonal_features);
        if (j.contains("combo")) h.combo = parse_combo(j.at("combo").get<std::string>());
        read(j, "head_bias", h.head_bias);
        read(j, "s2s1_bridge", h.s2s1_bridge);
    } catch (const json::exception& e) {
        throw DataError(std::string("model config: ") + e.what());
    }
    return h;
}

json to_json(const TrainConfig& c) {
    return json{{"epochs", c.epochs},     {"batch_size", c.batch_size}, {"lr", c.lr},
                {"decay", c.decay},       {"loss", to_string(c.loss)},  {"quantile", c.quantile},
                {"seed", c.seed},         {"optimizer", to_string(c.optimizer)},
                {"beta1", c.beta1},       {"beta2", c.beta2},           {"eps", c.eps},
                {"patience", c.patience}, {"dropout", c.dropout},       {"mask_mode", to_string(c.mask_mode)}};
}

TrainConfig train_config_from_json(const json& j) {
    reject_unknown(j,
                   {"epochs", "batch_size", "lr", "decay", "loss", "quantile", "seed", "optimizer", "beta1", "beta2",
                    "eps", "patience", "dropout", "mask_mode"},
                   "train config");
    TrainConfig c;
    try {
        read(j, "epochs", c.epochs);
        read(j, "batch_size", c.batch_size);
        read(j, "lr", c.lr);
        read(j, "decay", c.decay);
        if (j.contains("loss")) c.loss = parse_loss(j.at("loss").get<std::string>());
        read(j, "quantile", c.quantile);
        read(j, "seed", c.seed);
        if (j.contains("optimizer")) c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
        read(j, "beta1", c.beta1);
        read(j, "beta2", c.beta2);
        read(j, "eps", c.eps);
        read(j, "patience", c.patience);
        read(j, "dropout", c.dropout);
        if (j.contains("mask_mode")) c.mask_mode = parse_mask_mode(j.at("mask_mode").get<std::string>());
    } catch (const json::exception& e) {
        throw DataError(std::string("train config: ") + e.what());
    }
    return c;
}

void RunConfig::validate() const {
    hyper.validate();
    train.validate();
    if (hyper.variant != ModelVariant::ssae && hyper.combo != Combo::multiplicative) {
        throw DataError("combination mode applies only to the ssae variant");
    }
    if (!(split.val_fraction >= 0.0 && split.val_fraction < 1.0)) throw DataError("val_fraction must be in [0, 1)");
    if (split.train_end && split.test_start && !(*split.train_end < *split.test_start)) {
        throw DataError("train_end must precede test_start");
    }
}

json to_json(const RunConfig& cfg) {
    json split{{"test_days", cfg.split.test_days}, {"val_fraction", cfg.split.val_fraction}};
    if (cfg.split.train_end) split["train_end"] = cfg.split.train_end->iso();
    if (cfg.split.test_start) split["test_start"] = cfg.split.test_start->iso();
    json j{{"model", to_json(cfg.hyper)}, {"train", to_json(cfg.train)}, {"split", split}};
    if (cfg.data) j["data"] = cfg.data->string();
    return j;
}

RunConfig run_config_from_json(const json& j) {
    reject_unknown(j, {"model", "train", "split", "data"}, "run config");
    RunConfig cfg;
    if (j.contains("model")) cfg.hyper = hyper_from_json(j.at("model"));
    if (j.contains("train")) cfg.train = train_config_from_json(j.at("train"));
    if (j.contains("split")) {
        const auto& s = j.at("split");
        reject_unknown(s, {"train_end", "test_start", "test_days", "val_fraction"}, "split config");
        try {
            if (s.contains("train_end")) cfg.split.train_end = Date::parse(s.at("train_end").get<std::string>());
            if (s.contains("test_start")) cfg.split.test_start = Date::parse(s.at("test_start").get<std::string>());
            read(s, "test_days", cfg.split.test_days);
            read(s, "val_fraction", cfg.split.val_fraction);
        } catch (const json::exception& e) {
            throw DataError(std::string("split config: ") + e.what());
        }
    }
    if (j.contains("data")) cfg.data = j.at("data").get<std::string>();
    cfg.validate();
    return cfg;
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": invalid JSON: " + e.what());
    }
}

void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

RunConfig load_run_config(const std::filesystem::path& path) {
    auto cfg = run_config_from_json(read_json(path));
    if (cfg.data && cfg.data->is_relative()) cfg.data = path.parent_path() / *cfg.data;
    return cfg;
}

}  // namespace ssae
