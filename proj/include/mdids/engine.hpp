#pragma once

// Training, detection and feedback phases plus model persistence.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdids/dataset.hpp"
#include "mdids/global.hpp"
#include "mdids/indicator.hpp"
#include "mdids/pca.hpp"

namespace mdids {

/// A named set of raw parameters analysed together as one dimension.
struct FeatureGroup {
    std::string name;
    std::vector<std::string> parameters;

    bool operator==(const FeatureGroup&) const = default;
};

struct TrainConfig {
    std::int64_t window_seconds = 1;
    AggregationPolicy default_policy = AggregationPolicy::sum;
    std::map<std::string, AggregationPolicy> policies;  // per parameter overrides
    LabelPolicy label_policy = LabelPolicy::max;
    /// Empty: one PCA over every parameter, each retained component is a
    /// dimension. Otherwise one PCA per group and each group is a dimension.
    std::vector<FeatureGroup> groups;
    double variability_threshold = kDefaultVariabilityThreshold;
    LearnerOptions learners;
    GlobalParams global;

    bool operator==(const TrainConfig&) const = default;
};

/// Resolves the per-parameter aggregation policies for `parameters`.
WindowSpec window_spec(const TrainConfig& config, const std::vector<std::string>& parameters);

/// PCA over a subset of the raw parameters.
struct ProjectionBlock {
    std::string name;
    std::vector<std::size_t> parameters;  // indices into DetectorModel::parameters
    PcaModel pca;

    bool operator==(const ProjectionBlock&) const = default;
};

struct Dimension {
    std::string name;
    std::size_t block = 0;
    std::vector<std::size_t> components;  // columns of the block's projection

    bool operator==(const Dimension&) const = default;
};

struct TrainingMetadata {
    std::size_t observations = 0;
    std::size_t benign = 0;
    std::size_t anomalous = 0;
    std::vector<std::vector<CandidateRisk>> candidate_risks;  // per dimension
    double global_risk = 0.0;
    std::uint64_t model_version = 1;

    bool operator==(const TrainingMetadata&) const = default;
};

struct DetectorModel {
    std::vector<std::string> parameters;
    TrainConfig config;
    std::vector<ProjectionBlock> blocks;
    std::vector<Dimension> dimensions;
    std::vector<IndividualAnomalyIndicator> indicators;  // one per dimension
    GlobalIndicator global;
    TrainingMetadata metadata;
    /// Aggregated training windows; the pool that feedback retrains from.
    Dataset training_windows;

    bool operator==(const DetectorModel&) const = default;
};

inline constexpr int kModelFormatVersion = 1;

/// Full training pipeline over labeled raw records.
DetectorModel train(const RecordTable& records, const TrainConfig& config);
/// Same pipeline starting from already aggregated windows.
DetectorModel train_windows(const Dataset& windows, const TrainConfig& config);

/// Per-dimension anomaly factors for one aggregated window (raw features).
std::vector<double> anomaly_factors(const DetectorModel& model, std::span<const double> raw_features);

struct AnomalyReport {
    std::int64_t window_start = 0;
    std::vector<double> afs;
    double af = 0.0;
    bool flagged = false;
    std::uint64_t model_version = 1;

    bool operator==(const AnomalyReport&) const = default;
};

AnomalyReport score_window(const DetectorModel& model, const LabeledObservation& window);

struct DetectOptions {
    /// Windows kept open for late records; older records are rejected.
    std::size_t lag_windows = 2;
};

/// Streaming detector. A window is reported once a record arrives more than
/// `lag_windows` windows after it, or at finish(). Reports come out in window
/// order. Does not modify the model.
class Detector {
public:
    Detector(const DetectorModel& model, DetectOptions options = {});

    std::vector<AnomalyReport> push(const RawRecord& record);
    std::vector<AnomalyReport> finish();

    std::size_t rejected() const noexcept { return rejected_; }
    std::size_t scored() const noexcept { return scored_; }
    std::size_t flagged() const noexcept { return flagged_; }

private:
    std::vector<AnomalyReport> emit_before(std::int64_t start);

    const DetectorModel* model_;
    DetectOptions options_;
    WindowSpec spec_;
    std::map<std::int64_t, WindowAccumulator> open_;
    std::optional<std::int64_t> newest_;
    std::optional<std::int64_t> last_emitted_;
    std::size_t rejected_ = 0;
    std::size_t scored_ = 0;
    std::size_t flagged_ = 0;
};

std::vector<AnomalyReport> detect(const DetectorModel& model, std::span<const RawRecord> records,
                                  DetectOptions options = {});

struct Evaluation {
    double risk = 0.0;
    std::size_t true_positive = 0;
    std::size_t true_negative = 0;
    std::size_t false_positive = 0;
    std::size_t false_negative = 0;
    std::vector<double> dimension_risks;
};

/// Zero-one risk of the flag decision against labeled windows.
Evaluation evaluate(const DetectorModel& model, const Dataset& labeled_windows);
double global_risk(const DetectorModel& model, const Dataset& labeled_windows);

enum class FeedbackSource { analyst, simulation };
enum class FeedbackStatus { accepted, rejected, deferred };

std::string_view to_string(FeedbackStatus status);

/// Confirmed labels for windows seen during detection.
struct FeedbackBatch {
    Dataset windows;  // raw aggregated features, boolean labels
    FeedbackSource source = FeedbackSource::analyst;
};

struct FeedbackConfig {
    std::size_t min_batch = 50;
    double holdout_fraction = 0.2;
    std::uint64_t seed = 42;
};

struct FeedbackOutcome {
    FeedbackStatus status = FeedbackStatus::deferred;
    DetectorModel model;
    double incumbent_risk = 0.0;
    double candidate_risk = 0.0;
    std::size_t holdout_size = 0;
};

/// Retrains on the stored training windows plus the batch, with a seeded
/// holdout carved from the stored training windows. The retrained model is
/// kept only if its holdout risk does not exceed the incumbent's.
FeedbackOutcome feedback(const DetectorModel& model, const FeedbackBatch& batch, const FeedbackConfig& config = {});

std::string serialize_model(const DetectorModel& model);
DetectorModel deserialize_model(std::string_view text);
/// Canonical text of one indicator; equal text means an identical indicator.
std::string serialize_indicator(const IndividualAnomalyIndicator& indicator);

void persist(const DetectorModel& model, const std::filesystem::path& path);
DetectorModel load(const std::filesystem::path& path);

}  // namespace mdids
