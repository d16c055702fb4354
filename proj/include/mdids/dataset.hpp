#pragma once

// Record ingestion, per-window aggregation and column standardization.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mdids {

/// One raw reading. `values` is aligned with the parameter list of the
/// table it came from.
struct RawRecord {
    std::int64_t timestamp = 0;
    std::vector<double> values;
    std::optional<double> label;

    bool operator==(const RawRecord&) const = default;
};

struct RecordSchema {
    /// Parameter columns to read, in order. Empty means "every column that is
    /// neither the timestamp nor the label".
    std::vector<std::string> parameters;
    std::string timestamp_column = "timestamp";
    std::string label_column = "label";
    bool require_label = false;
    /// When false, columns outside the schema are a schema error.
    bool allow_extra_columns = false;
};

struct RecordTable {
    std::vector<std::string> parameters;
    std::vector<RawRecord> records;
};

/// Reads a comma separated table with a header row. Every malformed row is
/// collected before a ParseError is raised; missing columns raise SchemaError.
RecordTable parse_records(std::istream& in, const RecordSchema& schema);

/// Writes `table` in the format accepted by parse_records. Numbers use the
/// shortest representation that round-trips exactly.
void write_records(std::ostream& out, const RecordTable& table, std::string_view label_column = "label");

enum class LabelKind { boolean, graded, none };

std::string_view to_string(LabelKind kind);

struct LabeledObservation {
    std::int64_t window_start = 0;
    std::vector<double> features;
    double label = 0.0;  // meaningless when the dataset is LabelKind::none

    bool operator==(const LabeledObservation&) const = default;
};

/// Immutable table of per-window observations.
///
/// Invariants (checked on construction): column names unique and non-empty,
/// every feature vector has one entry per column, observations ordered by
/// non-decreasing window start, labels in {0,1} for boolean datasets and in
/// [0,1] for graded ones.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<std::string> names, std::vector<LabeledObservation> observations, LabelKind kind);

    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<LabeledObservation>& observations() const noexcept { return observations_; }
    LabelKind label_kind() const noexcept { return kind_; }

    std::size_t size() const noexcept { return observations_.size(); }
    std::size_t columns() const noexcept { return names_.size(); }
    bool empty() const noexcept { return observations_.empty(); }

    std::vector<double> column(std::size_t j) const;
    std::vector<double> labels() const;
    std::size_t count_label(double value) const;

    /// Keeps the given columns in the given order.
    Dataset select_columns(std::span<const std::size_t> columns) const;
    /// Keeps the given rows; row order is restored to ascending index order.
    Dataset select_rows(std::vector<std::size_t> rows) const;
    /// Same observations with different labels.
    Dataset relabel(std::span<const double> labels, LabelKind kind) const;

    /// Merges two datasets over identical columns, stable by window start.
    static Dataset merge(const Dataset& a, const Dataset& b);

    bool operator==(const Dataset&) const = default;

private:
    std::vector<std::string> names_;
    std::vector<LabeledObservation> observations_;
    LabelKind kind_ = LabelKind::none;
};

/// Infers boolean/graded from label values. Throws ContractError for labels
/// outside [0,1].
LabelKind infer_label_kind(std::span<const double> labels);

enum class AggregationPolicy { sum, mean, count };
enum class LabelPolicy { max, last };

AggregationPolicy parse_aggregation_policy(std::string_view text);
LabelPolicy parse_label_policy(std::string_view text);
std::string_view to_string(AggregationPolicy policy);
std::string_view to_string(LabelPolicy policy);

struct WindowSpec {
    std::int64_t seconds = 1;
    /// One policy per parameter; empty means sum everywhere.
    std::vector<AggregationPolicy> policies;
    LabelPolicy label_policy = LabelPolicy::max;
};

std::int64_t window_start_of(std::int64_t timestamp, std::int64_t window_seconds);

/// Folds the records of one window into an observation.
class WindowAccumulator {
public:
    WindowAccumulator(std::int64_t window_start, std::size_t parameter_count, const WindowSpec& spec);

    void add(const RawRecord& record);
    std::int64_t window_start() const noexcept { return start_; }
    std::size_t record_count() const noexcept { return count_; }
    bool has_label() const noexcept { return label_.has_value(); }
    LabeledObservation finish() const;

private:
    std::int64_t start_;
    WindowSpec spec_;
    std::vector<double> sums_;
    std::size_t count_ = 0;
    std::optional<double> label_;
    std::int64_t label_time_ = 0;
};

/// Groups records into fixed windows. Empty windows are omitted. Records must
/// either all carry a label or none may.
Dataset aggregate_windows(std::span<const RawRecord> records, const std::vector<std::string>& parameters,
                          const WindowSpec& spec);

/// Column centering/scaling learnt from training data.
struct StandardizationParams {
    std::vector<std::string> source_names;  // every column of the input
    std::vector<std::size_t> retained;      // indices into source_names
    std::vector<double> means;              // per retained column
    std::vector<double> stddevs;            // per retained column, > 0
    std::vector<std::string> dropped;       // zero-variance columns

    std::vector<std::string> retained_names() const;
    /// Standardizes one raw feature vector of source width.
    std::vector<double> apply(std::span<const double> raw) const;

    bool operator==(const StandardizationParams&) const = default;
};

struct StandardizedData {
    Dataset data;
    StandardizationParams params;
};

/// Scales every column to mean 0 and sample standard deviation 1 (divisor
/// N-1). Zero-variance columns are dropped and listed in params.dropped.
StandardizedData standardize(const Dataset& dataset);

double column_mean(std::span<const double> values);
double sample_stddev(std::span<const double> values);

}  // namespace mdids
