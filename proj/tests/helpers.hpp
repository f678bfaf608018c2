#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "ssae/dataio.hpp"
#include "ssae/rng.hpp"
#include "ssae/ssae_model.hpp"
#include "ssae/train.hpp"

namespace testutil {

using namespace ssae;

inline Vector random_vector(std::size_t n, SplitMix64& rng, double lo = -1.0, double hi = 1.0) {
    Vector v(n);
    for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
    return v;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, SplitMix64& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (auto& x : m.flat()) x = lo + (hi - lo) * rng.uniform();
    return m;
}

inline void randomize(std::span<const TensorRef> tensors, SplitMix64& rng, double scale = 0.5) {
    for (const auto& t : tensors) {
        for (auto& v : t.data) v = scale * (2.0 * rng.uniform() - 1.0);
    }
}

// Daily table with features "a", "b", ... and a nonnegative target.
inline SeriesTable make_table(std::size_t rows, std::size_t features, std::uint64_t seed,
                              Date start = Date(2010, 1, 1)) {
    SplitMix64 rng(seed);
    SeriesTable t;
    for (std::size_t j = 0; j < features; ++j) t.feature_names.push_back(std::string(1, static_cast<char>('a' + j)));
    t.features = Matrix(rows, features);
    t.target.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        t.dates.push_back(start + static_cast<std::int64_t>(i));
        for (std::size_t j = 0; j < features; ++j) t.features(i, j) = rng.normal();
        t.target[i] = std::max(0.0, rng.normal());
    }
    return t;
}

inline ScalerStats unit_scaler(std::vector<std::string> names) {
    const auto n = names.size();
    return {std::move(names), Vector(n, 0.0), Vector(n, 1.0)};
}

inline SsaeHyper tiny_hyper(ModelVariant variant = ModelVariant::ssae, Combo combo = Combo::multiplicative) {
    SsaeHyper h;
    h.variant = variant;
    h.combo = combo;
    h.lookback = 12;
    h.short_window = 3;
    h.horizon = 2;
    h.pool_window = 6;
    h.pool_stride = 3;
    h.hidden_short = 4;
    h.hidden_seasonal = 4;
    h.seasonal_features = {"a", "precip"};
    return h;
}

inline SsaeModel random_model(const SsaeHyper& hyper, const ScalerStats& scaler, std::uint64_t seed) {
    SsaeModel m = make_model(hyper, scaler);
    SplitMix64 rng(seed);
    randomize(model_tensors(m), rng);
    return m;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("ssae_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace testutil
