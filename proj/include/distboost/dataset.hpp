#ifndef DISTBOOST_DATASET_HPP
#define DISTBOOST_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "distboost/common.hpp"

namespace distboost {

enum class FeatureKind { numeric, categorical };

struct FeatureMeta {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::vector<std::string> categories;  // categorical only
};

/// Column-major numeric feature matrix plus response and metadata.
/// Categorical columns keep their raw labels until encode_categoricals()
/// replaces them with smoothed target statistics.
struct Dataset {
    std::vector<std::vector<double>> columns;       // numeric values, column-major
    std::vector<std::vector<std::string>> raw;      // raw labels; empty for numeric columns
    std::vector<double> response;
    std::vector<double> weights;                    // empty = unweighted
    std::vector<FeatureMeta> meta;

    std::size_t n_rows() const { return response.size(); }
    std::size_t n_cols() const { return meta.size(); }

    bool has_raw_categoricals() const {
        for (const auto& r : raw)
            if (!r.empty()) return true;
        return false;
    }

    std::vector<double> row(std::size_t i) const {
        std::vector<double> out(n_cols());
        for (std::size_t j = 0; j < n_cols(); ++j) out[j] = columns[j][i];
        return out;
    }

    double weight(std::size_t i) const { return weights.empty() ? 1.0 : weights[i]; }
};

namespace detail {

inline std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

inline double parse_number(const std::string& token, const std::string& column,
                           std::size_t row_1based) {
    if (token.empty())
        throw MissingValue("missing value in column '" + column + "' at data row " +
                           std::to_string(row_1based));
    char* end = nullptr;
    double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || !std::isfinite(v))
        throw NonNumericValue("non-numeric value '" + token + "' in column '" + column +
                              "' at data row " + std::to_string(row_1based));
    return v;
}

}  // namespace detail

/// Read an RFC-4180-style CSV with a mandatory header row.
/// Columns listed in `categorical_cols` keep their raw labels.
inline Dataset load_csv(const std::string& path, const std::string& response_col,
                        const std::set<std::string>& categorical_cols = {},
                        const std::string& weight_col = "") {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw EmptyDataset("empty file: " + path);
    const std::vector<std::string> header = detail::parse_csv_line(line);

    auto col_index = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw MissingColumn("column '" + name + "' not found in " + path);
        return static_cast<std::size_t>(it - header.begin());
    };

    const std::size_t resp_idx = col_index(response_col);
    std::size_t weight_idx = header.size();
    if (!weight_col.empty()) weight_idx = col_index(weight_col);
    for (const auto& c : categorical_cols) col_index(c);

    Dataset ds;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j == resp_idx || j == weight_idx) continue;
        FeatureMeta m;
        m.name = header[j];
        m.kind = categorical_cols.count(header[j]) ? FeatureKind::categorical
                                                   : FeatureKind::numeric;
        ds.meta.push_back(std::move(m));
    }
    ds.columns.resize(ds.meta.size());
    ds.raw.resize(ds.meta.size());

    std::size_t data_row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++data_row;
        const auto fields = detail::parse_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("row " + std::to_string(data_row) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
        ds.response.push_back(detail::parse_number(fields[resp_idx], response_col, data_row));
        if (weight_idx < header.size()) {
            double w = detail::parse_number(fields[weight_idx], weight_col, data_row);
            if (w <= 0.0)
                throw InvalidValue("non-positive weight at data row " + std::to_string(data_row));
            ds.weights.push_back(w);
        }
        std::size_t f = 0;
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (j == resp_idx || j == weight_idx) continue;
            if (ds.meta[f].kind == FeatureKind::categorical) {
                if (fields[j].empty())
                    throw MissingValue("missing value in column '" + header[j] +
                                       "' at data row " + std::to_string(data_row));
                ds.raw[f].push_back(fields[j]);
                ds.columns[f].push_back(0.0);  // placeholder until encoding
            } else {
                ds.columns[f].push_back(detail::parse_number(fields[j], header[j], data_row));
            }
            ++f;
        }
    }
    if (ds.response.empty()) throw EmptyDataset("no data rows in " + path);

    for (auto& m : ds.meta) {
        if (m.kind != FeatureKind::categorical) continue;
        std::size_t idx = static_cast<std::size_t>(&m - ds.meta.data());
        std::set<std::string> seen(ds.raw[idx].begin(), ds.raw[idx].end());
        m.categories.assign(seen.begin(), seen.end());
    }
    return ds;
}

/// Per-category smoothed target statistics learned on training data.
struct EncoderState {
    struct Column {
        std::string feature;
        std::unordered_map<std::string, double> values;
    };
    double global_mean = 0.0;
    double smoothing = 1.0;
    std::vector<Column> columns;

    bool empty() const { return columns.empty(); }

    /// Replace raw categorical labels with encoded values; unseen categories
    /// map to the global mean. Numeric columns pass through untouched.
    Dataset transform(const Dataset& ds) const {
        Dataset out = ds;
        for (const auto& col : columns) {
            std::size_t j = 0;
            for (; j < ds.meta.size(); ++j)
                if (ds.meta[j].name == col.feature) break;
            if (j == ds.meta.size())
                throw MissingColumn("encoder column '" + col.feature + "' not in dataset");
            if (ds.raw[j].empty())
                continue;  // already numeric (e.g. re-transforming encoded data)
            for (std::size_t i = 0; i < ds.n_rows(); ++i) {
                auto it = col.values.find(ds.raw[j][i]);
                out.columns[j][i] = it == col.values.end() ? global_mean : it->second;
            }
            out.raw[j].clear();
        }
        return out;
    }
};

/// Encode every categorical column with the smoothed target statistic
/// (sum(y|c) + global_mean * s) / (n_c + s).
inline std::pair<Dataset, EncoderState> encode_categoricals(const Dataset& train,
                                                            double smoothing = 1.0) {
    if (smoothing < 0.0) throw ConfigError("smoothing must be non-negative");
    EncoderState enc;
    enc.smoothing = smoothing;
    enc.global_mean =
        std::accumulate(train.response.begin(), train.response.end(), 0.0) /
        static_cast<double>(train.n_rows());
    for (std::size_t j = 0; j < train.n_cols(); ++j) {
        if (train.meta[j].kind != FeatureKind::categorical) continue;
        EncoderState::Column col;
        col.feature = train.meta[j].name;
        std::unordered_map<std::string, std::pair<double, double>> acc;  // label -> (sum, n)
        for (std::size_t i = 0; i < train.n_rows(); ++i) {
            auto& a = acc[train.raw[j][i]];
            a.first += train.response[i];
            a.second += 1.0;
        }
        for (const auto& [label, a] : acc)
            col.values[label] =
                (a.first + enc.global_mean * smoothing) / (a.second + smoothing);
        enc.columns.push_back(std::move(col));
    }
    return {enc.transform(train), enc};
}

namespace detail {

inline Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.meta = ds.meta;
    out.columns.resize(ds.n_cols());
    out.raw.resize(ds.n_cols());
    for (std::size_t j = 0; j < ds.n_cols(); ++j) {
        out.columns[j].reserve(idx.size());
        for (std::size_t i : idx) out.columns[j].push_back(ds.columns[j][i]);
        if (!ds.raw[j].empty()) {
            out.raw[j].reserve(idx.size());
            for (std::size_t i : idx) out.raw[j].push_back(ds.raw[j][i]);
        }
    }
    out.response.reserve(idx.size());
    for (std::size_t i : idx) out.response.push_back(ds.response[i]);
    if (!ds.weights.empty()) {
        out.weights.reserve(idx.size());
        for (std::size_t i : idx) out.weights.push_back(ds.weights[i]);
    }
    return out;
}

}  // namespace detail

/// Deterministic seeded shuffle into disjoint train/test partitions of sizes
/// ceil(n*(1-f)) and the remainder.
inline std::pair<Dataset, Dataset> split_train_test(const Dataset& data, double test_fraction,
                                                    std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw BadFraction("test fraction must be in (0,1)");
    const std::size_t n = data.n_rows();
    if (n < 2) throw TooFewRows("need at least 2 rows to split");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_train =
        static_cast<std::size_t>(std::ceil(static_cast<double>(n) * (1.0 - test_fraction)));
    std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    return {detail::take_rows(data, train_idx), detail::take_rows(data, test_idx)};
}

}  // namespace distboost

#endif  // DISTBOOST_DATASET_HPP
