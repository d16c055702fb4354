#include "mdids/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "mdids/error.hpp"
#include "text.hpp"

namespace mdids {

namespace {

constexpr double kZeroVariance = 1e-12;

void check_names(const std::vector<std::string>& names) {
    std::set<std::string_view> seen;
    for (const auto& name : names) {
        if (name.empty()) throw ContractError("column names must be non-empty");
        if (!seen.insert(name).second) throw ContractError(fmt::format("duplicate column name '{}'", name));
    }
}

void check_label(double label, LabelKind kind) {
    switch (kind) {
        case LabelKind::boolean:
            if (label != 0.0 && label != 1.0)
                throw ContractError(fmt::format("label {} is not boolean", label));
            break;
        case LabelKind::graded:
            if (!(label >= 0.0 && label <= 1.0))
                throw ContractError(fmt::format("graded label {} outside [0,1]", label));
            break;
        case LabelKind::none:
            break;
    }
}

}  // namespace

std::string_view to_string(LabelKind kind) {
    switch (kind) {
        case LabelKind::boolean: return "boolean";
        case LabelKind::graded: return "graded";
        case LabelKind::none: return "none";
    }
    return "none";
}

Dataset::Dataset(std::vector<std::string> names, std::vector<LabeledObservation> observations, LabelKind kind)
    : names_(std::move(names)), observations_(std::move(observations)), kind_(kind) {
    check_names(names_);
    for (std::size_t i = 0; i < observations_.size(); ++i) {
        const auto& obs = observations_[i];
        if (obs.features.size() != names_.size())
            throw ContractError(fmt::format("observation {} has {} features, expected {}", i, obs.features.size(),
                                            names_.size()));
        if (i > 0 && obs.window_start < observations_[i - 1].window_start)
            throw ContractError("observations must be ordered by window start");
        check_label(obs.label, kind_);
    }
}

std::vector<double> Dataset::column(std::size_t j) const {
    if (j >= names_.size()) throw ContractError(fmt::format("column {} out of range", j));
    std::vector<double> out;
    out.reserve(observations_.size());
    for (const auto& obs : observations_) out.push_back(obs.features[j]);
    return out;
}

std::vector<double> Dataset::labels() const {
    std::vector<double> out;
    out.reserve(observations_.size());
    for (const auto& obs : observations_) out.push_back(obs.label);
    return out;
}

std::size_t Dataset::count_label(double value) const {
    return static_cast<std::size_t>(std::count_if(observations_.begin(), observations_.end(),
                                                  [value](const auto& o) { return o.label == value; }));
}

Dataset Dataset::select_columns(std::span<const std::size_t> columns) const {
    std::vector<std::string> names;
    for (auto j : columns) {
        if (j >= names_.size()) throw ContractError(fmt::format("column {} out of range", j));
        names.push_back(names_[j]);
    }
    std::vector<LabeledObservation> rows;
    rows.reserve(observations_.size());
    for (const auto& obs : observations_) {
        LabeledObservation row{obs.window_start, {}, obs.label};
        row.features.reserve(columns.size());
        for (auto j : columns) row.features.push_back(obs.features[j]);
        rows.push_back(std::move(row));
    }
    return Dataset(std::move(names), std::move(rows), kind_);
}

Dataset Dataset::select_rows(std::vector<std::size_t> rows) const {
    std::sort(rows.begin(), rows.end());
    std::vector<LabeledObservation> kept;
    kept.reserve(rows.size());
    for (auto i : rows) {
        if (i >= observations_.size()) throw ContractError(fmt::format("row {} out of range", i));
        kept.push_back(observations_[i]);
    }
    return Dataset(names_, std::move(kept), kind_);
}

Dataset Dataset::relabel(std::span<const double> labels, LabelKind kind) const {
    if (labels.size() != observations_.size())
        throw AlignmentError(fmt::format("{} labels for {} observations", labels.size(), observations_.size()));
    auto rows = observations_;
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].label = labels[i];
    return Dataset(names_, std::move(rows), kind);
}

Dataset Dataset::merge(const Dataset& a, const Dataset& b) {
    if (a.names_ != b.names_) throw SchemaError("cannot merge datasets with different columns");
    LabelKind kind = a.kind_;
    if (a.empty()) kind = b.kind_;
    else if (!b.empty() && a.kind_ != b.kind_) kind = LabelKind::graded;
    std::vector<LabeledObservation> rows;
    rows.reserve(a.size() + b.size());
    std::merge(a.observations_.begin(), a.observations_.end(), b.observations_.begin(), b.observations_.end(),
               std::back_inserter(rows),
               [](const auto& x, const auto& y) { return x.window_start < y.window_start; });
    return Dataset(a.names_, std::move(rows), kind);
}

LabelKind infer_label_kind(std::span<const double> labels) {
    bool boolean = true;
    for (double y : labels) {
        check_label(y, LabelKind::graded);
        if (y != 0.0 && y != 1.0) boolean = false;
    }
    return boolean ? LabelKind::boolean : LabelKind::graded;
}

// ---------------------------------------------------------------------------
// CSV records

RecordTable parse_records(std::istream& in, const RecordSchema& schema) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::trim(line).empty()) {
            for (auto field : detail::split(line, ',')) header.emplace_back(detail::trim(field));
            break;
        }
    }
    if (header.empty()) throw SchemaError("input has no header row");

    auto find = [&](std::string_view name) -> std::optional<std::size_t> {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    };
    {
        std::set<std::string_view> seen;
        for (const auto& h : header)
            if (!seen.insert(h).second) throw SchemaError(fmt::format("duplicate column '{}'", h));
    }

    auto ts_col = find(schema.timestamp_column);
    if (!ts_col) throw SchemaError(fmt::format("missing required column '{}'", schema.timestamp_column));
    auto label_col = find(schema.label_column);
    if (schema.require_label && !label_col)
        throw SchemaError(fmt::format("missing required column '{}'", schema.label_column));

    RecordTable table;
    std::vector<std::size_t> param_cols;
    if (schema.parameters.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (j == *ts_col || (label_col && j == *label_col)) continue;
            table.parameters.push_back(header[j]);
            param_cols.push_back(j);
        }
    } else {
        table.parameters = schema.parameters;
        for (const auto& name : schema.parameters) {
            auto j = find(name);
            if (!j) throw SchemaError(fmt::format("missing required column '{}'", name));
            param_cols.push_back(*j);
        }
        if (!schema.allow_extra_columns) {
            for (std::size_t j = 0; j < header.size(); ++j) {
                bool known = j == *ts_col || (label_col && j == *label_col) ||
                             std::find(param_cols.begin(), param_cols.end(), j) != param_cols.end();
                if (!known) throw SchemaError(fmt::format("unknown parameter column '{}'", header[j]));
            }
        }
    }

    std::vector<ParseIssue> issues;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split(line, ',');
        if (fields.size() != header.size()) {
            issues.push_back({line_no, 0, fmt::format("expected {} fields, found {}", header.size(), fields.size())});
            continue;
        }
        RawRecord rec;
        bool ok = true;
        auto cell = [&](std::size_t j) -> std::optional<double> {
            auto text = detail::trim(fields[j]);
            auto value = detail::parse_double(text);
            if (!value) {
                issues.push_back({line_no, j + 1, fmt::format("column '{}': '{}' is not a finite number", header[j], text)});
                ok = false;
            }
            return value;
        };
        {
            auto text = detail::trim(fields[*ts_col]);
            std::int64_t ts = 0;
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), ts);
            if (ec != std::errc{} || ptr != text.data() + text.size() || ts < 0) {
                issues.push_back({line_no, *ts_col + 1,
                                  fmt::format("column '{}': '{}' is not a non-negative integer", header[*ts_col], text)});
                ok = false;
            }
            rec.timestamp = ts;
        }
        rec.values.reserve(param_cols.size());
        for (auto j : param_cols) {
            auto v = cell(j);
            rec.values.push_back(v.value_or(0.0));
        }
        if (label_col) {
            auto text = detail::trim(fields[*label_col]);
            if (!text.empty()) rec.label = cell(*label_col);
            else if (schema.require_label) {
                issues.push_back({line_no, *label_col + 1, fmt::format("column '{}': missing label", header[*label_col])});
                ok = false;
            }
        }
        if (ok) table.records.push_back(std::move(rec));
    }
    if (!issues.empty()) throw ParseError(std::move(issues));
    return table;
}

void write_records(std::ostream& out, const RecordTable& table, std::string_view label_column) {
    bool labeled = std::any_of(table.records.begin(), table.records.end(), [](const auto& r) { return r.label.has_value(); });
    out << "timestamp";
    for (const auto& p : table.parameters) out << ',' << p;
    if (labeled) out << ',' << label_column;
    out << '\n';
    for (const auto& r : table.records) {
        if (r.values.size() != table.parameters.size()) throw ContractError("record width does not match parameters");
        out << r.timestamp;
        for (double v : r.values) out << ',' << fmt::format("{}", v);
        if (labeled) {
            out << ',';
            if (r.label) out << fmt::format("{}", *r.label);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Windows

AggregationPolicy parse_aggregation_policy(std::string_view text) {
    if (text == "sum") return AggregationPolicy::sum;
    if (text == "mean") return AggregationPolicy::mean;
    if (text == "count") return AggregationPolicy::count;
    throw ArgumentError(fmt::format("unknown aggregation policy '{}'", text));
}

LabelPolicy parse_label_policy(std::string_view text) {
    if (text == "max") return LabelPolicy::max;
    if (text == "last") return LabelPolicy::last;
    throw ArgumentError(fmt::format("unknown label policy '{}'", text));
}

std::string_view to_string(AggregationPolicy policy) {
    switch (policy) {
        case AggregationPolicy::sum: return "sum";
        case AggregationPolicy::mean: return "mean";
        case AggregationPolicy::count: return "count";
    }
    return "sum";
}

std::string_view to_string(LabelPolicy policy) {
    return policy == LabelPolicy::max ? "max" : "last";
}

std::int64_t window_start_of(std::int64_t timestamp, std::int64_t window_seconds) {
    if (window_seconds <= 0) throw ArgumentError("window length must be a positive number of seconds");
    return timestamp - timestamp % window_seconds;
}

WindowAccumulator::WindowAccumulator(std::int64_t window_start, std::size_t parameter_count, const WindowSpec& spec)
    : start_(window_start), spec_(spec), sums_(parameter_count, 0.0) {
    if (!spec_.policies.empty() && spec_.policies.size() != parameter_count)
        throw ContractError(fmt::format("{} aggregation policies for {} parameters", spec_.policies.size(), parameter_count));
}

void WindowAccumulator::add(const RawRecord& record) {
    if (record.values.size() != sums_.size())
        throw ContractError(fmt::format("record has {} values, expected {}", record.values.size(), sums_.size()));
    for (std::size_t j = 0; j < sums_.size(); ++j) sums_[j] += record.values[j];
    if (record.label) {
        if (!label_) {
            label_ = record.label;
            label_time_ = record.timestamp;
        } else if (spec_.label_policy == LabelPolicy::max) {
            label_ = std::max(*label_, *record.label);
        } else if (record.timestamp >= label_time_) {
            label_ = record.label;
            label_time_ = record.timestamp;
        }
    }
    ++count_;
}

LabeledObservation WindowAccumulator::finish() const {
    LabeledObservation obs{start_, sums_, label_.value_or(0.0)};
    if (count_ == 0) return obs;
    for (std::size_t j = 0; j < sums_.size(); ++j) {
        auto policy = spec_.policies.empty() ? AggregationPolicy::sum : spec_.policies[j];
        if (policy == AggregationPolicy::mean) obs.features[j] = sums_[j] / static_cast<double>(count_);
        else if (policy == AggregationPolicy::count) obs.features[j] = static_cast<double>(count_);
    }
    return obs;
}

Dataset aggregate_windows(std::span<const RawRecord> records, const std::vector<std::string>& parameters,
                          const WindowSpec& spec) {
    if (spec.seconds <= 0) throw ArgumentError("window length must be a positive number of seconds");
    if (records.empty()) throw InsufficientDataError("no records to aggregate");
    const bool labeled = records.front().label.has_value();
    std::map<std::int64_t, WindowAccumulator> windows;
    for (const auto& r : records) {
        if (r.label.has_value() != labeled)
            throw ContractError("records must either all carry a label or none may");
        auto start = window_start_of(r.timestamp, spec.seconds);
        auto it = windows.find(start);
        if (it == windows.end()) it = windows.emplace(start, WindowAccumulator(start, parameters.size(), spec)).first;
        it->second.add(r);
    }
    std::vector<LabeledObservation> rows;
    rows.reserve(windows.size());
    for (const auto& [start, acc] : windows) rows.push_back(acc.finish());
    LabelKind kind = LabelKind::none;
    if (labeled) {
        std::vector<double> labels;
        for (const auto& r : rows) labels.push_back(r.label);
        kind = infer_label_kind(labels);
    }
    return Dataset(parameters, std::move(rows), kind);
}

// ---------------------------------------------------------------------------
// Standardization

double column_mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    double mean = column_mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<std::string> StandardizationParams::retained_names() const {
    std::vector<std::string> out;
    for (auto j : retained) out.push_back(source_names[j]);
    return out;
}

std::vector<double> StandardizationParams::apply(std::span<const double> raw) const {
    if (raw.size() != source_names.size())
        throw ContractError(fmt::format("expected {} raw features, got {}", source_names.size(), raw.size()));
    std::vector<double> out(retained.size());
    for (std::size_t k = 0; k < retained.size(); ++k) out[k] = (raw[retained[k]] - means[k]) / stddevs[k];
    return out;
}

StandardizedData standardize(const Dataset& dataset) {
    if (dataset.size() < 2)
        throw InsufficientDataError(fmt::format("standardization needs at least 2 observations, got {}", dataset.size()));
    StandardizationParams params;
    params.source_names = dataset.names();
    for (std::size_t j = 0; j < dataset.columns(); ++j) {
        auto col = dataset.column(j);
        double mean = column_mean(col);
        double sd = sample_stddev(col);
        if (!(sd > kZeroVariance * std::max(1.0, std::abs(mean)))) {
            params.dropped.push_back(dataset.names()[j]);
            continue;
        }
        params.retained.push_back(j);
        params.means.push_back(mean);
        params.stddevs.push_back(sd);
    }
    if (params.retained.empty()) throw DegenerateDataError("every column has zero variance");

    std::vector<LabeledObservation> rows;
    rows.reserve(dataset.size());
    for (const auto& obs : dataset.observations())
        rows.push_back({obs.window_start, params.apply(obs.features), obs.label});
    return {Dataset(params.retained_names(), std::move(rows), dataset.label_kind()), std::move(params)};
}

}  // namespace mdids
