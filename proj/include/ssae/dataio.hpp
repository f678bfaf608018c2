#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssae/tensor.hpp"

namespace ssae {

// Calendar day. Arithmetic is in whole days.
class Date {
public:
    Date() = default;
    explicit Date(std::chrono::sys_days day) : day_(day) {}
    Date(int year, unsigned month, unsigned day);

    // Strict YYYY-MM-DD; throws DataError otherwise.
    static Date parse(std::string_view text);

    std::string iso() const;
    std::chrono::sys_days sys_days() const { return day_; }
    std::int64_t serial() const { return day_.time_since_epoch().count(); }

    Date operator+(std::int64_t days) const { return Date(day_ + std::chrono::days(days)); }
    std::int64_t operator-(const Date& other) const { return (day_ - other.day_).count(); }

    friend auto operator<=>(const Date&, const Date&) = default;

private:
    std::chrono::sys_days day_{};
};

inline constexpr std::string_view kTargetColumn = "precip";

// Daily multivariate series: m named features plus the precipitation target.
struct SeriesTable {
    std::vector<Date> dates;
    Matrix features;  // N x m
    Vector target;    // N
    std::vector<std::string> feature_names;

    std::size_t rows() const { return dates.size(); }
    std::size_t feature_count() const { return feature_names.size(); }

    // Throws DataError naming the first violated invariant.
    void validate() const;

    // Model input columns: the features followed by the target, N x (m + 1).
    Matrix input_matrix() const;
    std::vector<std::string> input_names() const;

    // Rows [first, first + count).
    SeriesTable slice(std::size_t first, std::size_t count) const;

    // Index of the row holding `date`; throws DataError when absent.
    std::size_t row_of(const Date& date) const;
};

// Min-max statistics over the model input columns (features then target).
struct ScalerStats {
    std::vector<std::string> names;
    Vector mins;
    Vector maxs;

    std::size_t size() const { return mins.size(); }
    double target_min() const { return mins.back(); }
    double target_max() const { return maxs.back(); }
    void validate() const;
};

// Moving-window pairs over one scaled input matrix. Inputs are views into
// the shared matrix, so building windows does not copy T rows per pair.
class WindowSet {
public:
    WindowSet() = default;
    // `dates` are the row dates of `rows`; one pair per admissible start row.
    WindowSet(std::shared_ptr<const Matrix> rows, std::shared_ptr<const Vector> target,
              const std::vector<Date>& dates, std::size_t lookback, std::size_t horizon);

    std::size_t size() const { return anchors_.size(); }
    bool empty() const { return anchors_.empty(); }
    std::size_t lookback() const { return lookback_; }
    std::size_t horizon() const { return horizon_; }
    std::size_t input_dim() const { return rows_ ? rows_->cols() : 0; }

    // T x d rows [i, i + T).
    ConstMatrixView input(std::size_t i) const { return rows_->rows_view(offset_ + i, lookback_); }
    // H values at rows [i + T, i + T + H).
    std::span<const double> target(std::size_t i) const {
        return std::span<const double>(*target_).subspan(offset_ + i + lookback_, horizon_);
    }
    const Date& anchor_date(std::size_t i) const { return anchors_[i]; }
    const std::vector<Date>& anchor_dates() const { return anchors_; }

    // Pairs [first, first + count) sharing the same storage.
    WindowSet subset(std::size_t first, std::size_t count) const;

private:
    std::shared_ptr<const Matrix> rows_;
    std::shared_ptr<const Vector> target_;
    std::vector<Date> anchors_;
    std::size_t lookback_ = 0;
    std::size_t horizon_ = 0;
    std::size_t offset_ = 0;
};

struct SynthConfig {
    std::size_t days = 2000;
    std::size_t period = 365;
    std::size_t n_features = 3;
    std::uint64_t seed = 1;
    double noise_scale = 1.0;
    Date start = Date(2000, 1, 1);

    void validate() const;
};

SeriesTable load_csv(const std::filesystem::path& path);
SeriesTable parse_csv(std::string_view text, std::string_view source = "<memory>");
void write_csv(const SeriesTable& table, const std::filesystem::path& path);
std::string format_csv(const SeriesTable& table);

ScalerStats fit_scaler(const SeriesTable& table);
SeriesTable apply_scaler(const SeriesTable& table, const ScalerStats& stats);
// Scaled target values back to millimetres.
Vector invert_target(std::span<const double> values, const ScalerStats& stats);
double invert_target(double value, const ScalerStats& stats);

WindowSet make_windows(const SeriesTable& table, std::size_t lookback, std::size_t horizon);

// Number of pooled rows for a sequence of `length` rows.
std::size_t pooled_length(std::size_t length, std::size_t window, std::size_t stride);

// Strided moving average anchored at the newest row; output is oldest first.
Matrix average_pool(ConstMatrixView seq, std::size_t window, std::size_t stride);
// Same, restricted to `columns` of `seq` (output has columns.size() columns).
Matrix average_pool(ConstMatrixView seq, std::span<const std::size_t> columns, std::size_t window,
                    std::size_t stride);

std::pair<SeriesTable, SeriesTable> split_by_date(const SeriesTable& table, const Date& train_end,
                                                  const Date& test_start);

// Rows from `context` days before `first` to the end, so windows built from
// the result have anchors starting at `first`.
SeriesTable with_context(const SeriesTable& table, const Date& first, std::size_t context);

SeriesTable synth_generate(const SynthConfig& cfg);

}  // namespace ssae
