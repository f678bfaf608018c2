#include "ssae/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ssae/errors.hpp"
#include "ssae/rng.hpp"

namespace ssae {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

template <class Int>
bool parse_int(std::string_view s, Int& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

// ---------------------------------------------------------------------------
// Date

Date::Date(int year, unsigned month, unsigned day) {
    const std::chrono::year_month_day ymd{std::chrono::year(year), std::chrono::month(month),
                                          std::chrono::day(day)};
    if (!ymd.ok()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
        throw DataError("invalid calendar date " + std::string(buf));
    }
    day_ = std::chrono::sys_days(ymd);
}

Date Date::parse(std::string_view text) {
    text = trim(text);
    int y = 0;
    unsigned m = 0, d = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_int(text.substr(0, 4), y) ||
        !parse_int(text.substr(5, 2), m) || !parse_int(text.substr(8, 2), d)) {
        throw DataError("not an ISO-8601 date (YYYY-MM-DD): '" + std::string(text) + "'");
    }
    return Date(y, m, d);
}

std::string Date::iso() const {
    const std::chrono::year_month_day ymd{day_};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

// ---------------------------------------------------------------------------
// SeriesTable

void SeriesTable::validate() const {
    const std::size_t n = dates.size();
    const std::size_t m = feature_names.size();
    if (features.rows() != n || target.size() != n) {
        throw DataError("series length mismatch: " + std::to_string(n) + " dates, " +
                        std::to_string(features.rows()) + " feature rows, " + std::to_string(target.size()) +
                        " target values");
    }
    if (features.cols() != m) throw DataError("feature column count does not match feature names");
    for (std::size_t t = 1; t < n; ++t) {
        const auto step = dates[t] - dates[t - 1];
        if (step == 0) throw DataError("duplicate date " + dates[t].iso());
        if (step < 0) throw DataError("dates not increasing at " + dates[t].iso());
        if (step > 1) throw DataError("gap after " + dates[t - 1].iso());
    }
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t j = 0; j < m; ++j) {
            if (!std::isfinite(features(t, j))) {
                throw DataError("non-finite value at " + dates[t].iso() + ", column '" + feature_names[j] + "'");
            }
        }
        if (!std::isfinite(target[t])) throw DataError("non-finite precip at " + dates[t].iso());
        if (target[t] < 0.0) throw DataError("negative precip at " + dates[t].iso());
    }
}

Matrix SeriesTable::input_matrix() const {
    const std::size_t m = feature_count();
    Matrix out(rows(), m + 1);
    for (std::size_t t = 0; t < rows(); ++t) {
        std::copy_n(features.row(t).begin(), m, out.row(t).begin());
        out(t, m) = target[t];
    }
    return out;
}

std::vector<std::string> SeriesTable::input_names() const {
    auto names = feature_names;
    names.emplace_back(kTargetColumn);
    return names;
}

SeriesTable SeriesTable::slice(std::size_t first, std::size_t count) const {
    require(first + count <= rows(), "slice out of range");
    SeriesTable out;
    out.feature_names = feature_names;
    out.dates.assign(dates.begin() + first, dates.begin() + first + count);
    out.target.assign(target.begin() + first, target.begin() + first + count);
    out.features = Matrix(count, feature_count());
    for (std::size_t t = 0; t < count; ++t) {
        std::copy_n(features.row(first + t).begin(), feature_count(), out.features.row(t).begin());
    }
    return out;
}

std::size_t SeriesTable::row_of(const Date& date) const {
    if (dates.empty() || date < dates.front() || date > dates.back()) {
        throw DataError("date " + date.iso() + " outside series range");
    }
    // Rows are consecutive days once validated.
    return static_cast<std::size_t>(date - dates.front());
}

// ---------------------------------------------------------------------------
// CSV

SeriesTable parse_csv(std::string_view text, std::string_view source) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!trim(line).empty()) lines.push_back(line);
        start = end + 1;
    }
    if (lines.empty()) throw DataError(std::string(source) + ": empty file, header row expected");

    auto header = split_fields(lines[0]);
    if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].remove_prefix(3);
    if (header.size() < 2) throw DataError(std::string(source) + ": header needs a date column and 'precip'");

    std::size_t target_col = header.size();
    for (std::size_t j = 1; j < header.size(); ++j) {
        if (header[j] == kTargetColumn) {
            if (target_col != header.size()) throw DataError(std::string(source) + ": duplicate 'precip' column");
            target_col = j;
        }
    }
    if (target_col == header.size()) throw DataError(std::string(source) + ": missing 'precip' column");

    SeriesTable table;
    for (std::size_t j = 1; j < header.size(); ++j) {
        if (j == target_col) continue;
        const std::string name(header[j]);
        if (name.empty()) throw DataError(std::string(source) + ": empty column name in header");
        if (std::find(table.feature_names.begin(), table.feature_names.end(), name) != table.feature_names.end()) {
            throw DataError(std::string(source) + ": duplicate column '" + name + "'");
        }
        table.feature_names.push_back(name);
    }

    const std::size_t n = lines.size() - 1;
    const std::size_t m = table.feature_names.size();
    table.features = Matrix(n, m);
    table.target.resize(n);
    table.dates.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto fields = split_fields(lines[r + 1]);
        const std::size_t line_no = r + 2;
        if (fields.size() != header.size()) {
            throw DataError(std::string(source) + ": row " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " + std::to_string(header.size()));
        }
        try {
            table.dates.push_back(Date::parse(fields[0]));
        } catch (const DataError& e) {
            throw DataError(std::string(source) + ": row " + std::to_string(line_no) + ": " + e.what());
        }
        std::size_t k = 0;
        for (std::size_t j = 1; j < fields.size(); ++j) {
            double v = 0.0;
            if (!parse_double(fields[j], v) || !std::isfinite(v)) {
                throw DataError(std::string(source) + ": row " + std::to_string(line_no) + ", column '" +
                                std::string(header[j]) + "': non-numeric value '" + std::string(fields[j]) + "'");
            }
            if (j == target_col) {
                table.target[r] = v;
            } else {
                table.features(r, k++) = v;
            }
        }
    }
    try {
        table.validate();
    } catch (const DataError& e) {
        throw DataError(std::string(source) + ": " + e.what());
    }
    return table;
}

SeriesTable load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open data file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path.string());
}

std::string format_csv(const SeriesTable& table) {
    std::string out = "date";
    for (const auto& name : table.feature_names) out += "," + name;
    out += ",";
    out += kTargetColumn;
    out += "\n";
    char buf[40];
    for (std::size_t t = 0; t < table.rows(); ++t) {
        out += table.dates[t].iso();
        for (std::size_t j = 0; j < table.feature_count(); ++j) {
            std::snprintf(buf, sizeof buf, ",%.17g", table.features(t, j));
            out += buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g\n", table.target[t]);
        out += buf;
    }
    return out;
}

void write_csv(const SeriesTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << format_csv(table);
}

// ---------------------------------------------------------------------------
// Scaling

void ScalerStats::validate() const {
    if (mins.size() != maxs.size() || names.size() != mins.size() || mins.empty()) {
        throw DataError("scaler statistics are inconsistent");
    }
    for (std::size_t j = 0; j < mins.size(); ++j) {
        if (!(maxs[j] > mins[j])) throw DataError("constant feature '" + names[j] + "' cannot be min-max scaled");
    }
}

ScalerStats fit_scaler(const SeriesTable& table) {
    if (table.rows() == 0) throw DataError("cannot fit scaler on an empty table");
    const Matrix input = table.input_matrix();
    ScalerStats stats;
    stats.names = table.input_names();
    stats.mins.assign(input.cols(), 0.0);
    stats.maxs.assign(input.cols(), 0.0);
    for (std::size_t j = 0; j < input.cols(); ++j) {
        double lo = input(0, j), hi = input(0, j);
        for (std::size_t t = 1; t < input.rows(); ++t) {
            lo = std::min(lo, input(t, j));
            hi = std::max(hi, input(t, j));
        }
        stats.mins[j] = lo;
        stats.maxs[j] = hi;
    }
    stats.validate();
    return stats;
}

SeriesTable apply_scaler(const SeriesTable& table, const ScalerStats& stats) {
    if (const auto names = table.input_names(); stats.names != names) {
        std::string msg = "data columns do not match the model:";
        for (const auto& n : stats.names) {
            if (std::find(names.begin(), names.end(), n) == names.end()) msg += " missing '" + n + "'";
        }
        for (const auto& n : names) {
            if (std::find(stats.names.begin(), stats.names.end(), n) == stats.names.end()) msg += " unexpected '" + n + "'";
        }
        if (stats.names.size() == names.size() && msg.back() == ':') msg += " same names in a different order";
        throw DataError(msg);
    }
    SeriesTable out = table;
    const std::size_t m = table.feature_count();
    for (std::size_t t = 0; t < table.rows(); ++t) {
        for (std::size_t j = 0; j < m; ++j) {
            out.features(t, j) = (table.features(t, j) - stats.mins[j]) / (stats.maxs[j] - stats.mins[j]);
        }
        out.target[t] = (table.target[t] - stats.mins[m]) / (stats.maxs[m] - stats.mins[m]);
    }
    return out;
}

double invert_target(double value, const ScalerStats& stats) {
    return value * (stats.target_max() - stats.target_min()) + stats.target_min();
}

Vector invert_target(std::span<const double> values, const ScalerStats& stats) {
    Vector out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = invert_target(values[i], stats);
    return out;
}

// ---------------------------------------------------------------------------
// Windows

WindowSet::WindowSet(std::shared_ptr<const Matrix> rows, std::shared_ptr<const Vector> target,
                     const std::vector<Date>& dates, std::size_t lookback, std::size_t horizon)
    : rows_(std::move(rows)), target_(std::move(target)), lookback_(lookback), horizon_(horizon) {
    require(rows_ && target_ && rows_->rows() == target_->size() && dates.size() == target_->size(),
            "window storage length mismatch");
    require(lookback >= 1 && horizon >= 1, "window lengths must be positive");
    const std::size_t n = dates.size();
    if (n >= lookback + horizon) {
        const std::size_t count = n - lookback - horizon + 1;
        anchors_.assign(dates.begin() + static_cast<std::ptrdiff_t>(lookback),
                        dates.begin() + static_cast<std::ptrdiff_t>(lookback + count));
    }
}

WindowSet WindowSet::subset(std::size_t first, std::size_t count) const {
    require(first + count <= size(), "window subset out of range");
    WindowSet out = *this;
    out.offset_ = offset_ + first;
    out.anchors_.assign(anchors_.begin() + static_cast<std::ptrdiff_t>(first),
                        anchors_.begin() + static_cast<std::ptrdiff_t>(first + count));
    return out;
}

WindowSet make_windows(const SeriesTable& table, std::size_t lookback, std::size_t horizon) {
    require(lookback >= 1 && horizon >= 1, "make_windows: T and H must be positive");
    if (table.rows() < lookback + horizon) {
        throw DataError("series has " + std::to_string(table.rows()) + " rows; windows need at least T+H = " +
                        std::to_string(lookback + horizon));
    }
    auto rows = std::make_shared<const Matrix>(table.input_matrix());
    auto target = std::make_shared<const Vector>(table.target);
    return WindowSet(std::move(rows), std::move(target), table.dates, lookback, horizon);
}

std::size_t pooled_length(std::size_t length, std::size_t window, std::size_t stride) {
    if (window < 1 || stride < 1) throw DataError("pooling window and stride must be at least 1");
    if (window > length) {
        throw DataError("pooling window " + std::to_string(window) + " exceeds sequence length " +
                        std::to_string(length));
    }
    return (length - window) / stride + 1;
}

Matrix average_pool(ConstMatrixView seq, std::span<const std::size_t> columns, std::size_t window,
                    std::size_t stride) {
    const std::size_t count = pooled_length(seq.rows, window, stride);
    for (auto c : columns) require(c < seq.cols, "average_pool: column out of range");
    Matrix out(count, columns.size());
    const double inv = 1.0 / static_cast<double>(window);
    for (std::size_t p = 0; p < count; ++p) {
        // Newest window ends at the last row; earlier ones `stride` apart.
        const std::size_t end = seq.rows - 1 - (count - 1 - p) * stride;
        const std::size_t begin = end + 1 - window;
        for (std::size_t k = 0; k < columns.size(); ++k) {
            double sum = 0.0;
            for (std::size_t t = begin; t <= end; ++t) sum += seq(t, columns[k]);
            out(p, k) = sum * inv;
        }
    }
    return out;
}

Matrix average_pool(ConstMatrixView seq, std::size_t window, std::size_t stride) {
    std::vector<std::size_t> all(seq.cols);
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
    return average_pool(seq, all, window, stride);
}

// ---------------------------------------------------------------------------
// Splits

std::pair<SeriesTable, SeriesTable> split_by_date(const SeriesTable& table, const Date& train_end,
                                                  const Date& test_start) {
    if (!(train_end < test_start)) {
        throw DataError("train end " + train_end.iso() + " must precede test start " + test_start.iso());
    }
    const std::size_t last_train = table.row_of(train_end);
    const std::size_t first_test = table.row_of(test_start);
    return {table.slice(0, last_train + 1), table.slice(first_test, table.rows() - first_test)};
}

SeriesTable with_context(const SeriesTable& table, const Date& first, std::size_t context) {
    const std::size_t row = table.row_of(first);
    if (row < context) {
        throw DataError("need " + std::to_string(context) + " days of history before " + first.iso() + ", have " +
                        std::to_string(row));
    }
    return table.slice(row - context, table.rows() - (row - context));
}

// ---------------------------------------------------------------------------
// Synthetic data

void SynthConfig::validate() const {
    if (period < 1 || days <= 2 * period) throw DataError("synthetic data needs days > 2 * period");
    if (n_features < 2) throw DataError("synthetic data needs at least 2 features");
    if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) throw DataError("noise_scale must be >= 0");
}

SeriesTable synth_generate(const SynthConfig& cfg) {
    cfg.validate();
    SplitMix64 rng(cfg.seed);
    const std::size_t drivers = cfg.n_features - 1;
    const double two_pi = 2.0 * std::numbers::pi;
    const double period = static_cast<double>(cfg.period);
    auto season = [&](double t) { return 1.0 + 0.8 * std::sin(two_pi * t / period); };

    SeriesTable table;
    for (std::size_t j = 1; j <= drivers; ++j) table.feature_names.push_back("u" + std::to_string(j));
    table.feature_names.emplace_back("noise");
    table.features = Matrix(cfg.days, cfg.n_features);
    table.target.resize(cfg.days);
    table.dates.reserve(cfg.days);

    Vector u(drivers, 0.0);
    double y_prev = 0.0;
    for (std::size_t t = 0; t < cfg.days; ++t) {
        const double td = static_cast<double>(t);
        // Draw order per day: target noise, drivers 1..m-1, noise column.
        const double eps0 = rng.normal();
        const double u1_prev = u[0];
        for (std::size_t j = 0; j < drivers; ++j) u[j] = 0.9 * u[j] + cfg.noise_scale * rng.normal();
        const double noise = rng.normal();

        const double s_now = season(td);
        const double latent = 0.5 * y_prev / season(td - 1.0) + 0.7 * u1_prev + 0.3 * cfg.noise_scale * eps0;
        const double y = s_now * std::max(0.0, latent);

        table.dates.push_back(cfg.start + static_cast<std::int64_t>(t));
        for (std::size_t j = 0; j < drivers; ++j) table.features(t, j) = u[j];
        table.features(t, drivers) = noise;
        table.target[t] = y;
        y_prev = y;
    }
    return table;
}

}  // namespace ssae
