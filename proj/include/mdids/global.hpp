#pragma once

// Global anomaly indicator: combines per-dimension anomaly factors into one
// global factor.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdids/indicator.hpp"
#include "mdids/tree.hpp"

namespace mdids {

struct GlobalParams {
    TreeParams tree{0.01, 5, 30};
    double flag_threshold = 0.5;
    /// Feed tree leaf probabilities instead of classes to the global stage.
    bool graded_afs = false;

    bool operator==(const GlobalParams&) const = default;
};

/// Identity over the single factor when there is one dimension, otherwise a
/// second-level tree over the factor columns.
struct GlobalIndicator {
    std::vector<std::string> dimensions;
    std::optional<TreeIndicator> tree;
    double flag_threshold = 0.5;

    bool is_identity() const noexcept { return !tree.has_value(); }
    bool operator==(const GlobalIndicator&) const = default;
};

struct GlobalResult {
    double af = 0.0;
    bool flagged = false;
};

/// Training factors, one row per observation.
struct GlobalTrainingInputs {
    std::vector<std::vector<double>> af_rows;
    std::vector<double> labels;
};

GlobalIndicator fit_global(const std::vector<std::string>& dimensions, const GlobalTrainingInputs& inputs,
                           const GlobalParams& params = {});

GlobalResult evaluate_global(const GlobalIndicator& global, std::span<const double> afs);

/// Anomaly factor of one indicator for one observation of its dimension.
double anomaly_factor(const IndividualAnomalyIndicator& indicator, std::span<const double> features, bool graded);

struct AddDimensionResult {
    std::vector<IndividualAnomalyIndicator> indicators;
    GlobalIndicator global;
    GlobalTrainingInputs inputs;  // widened by the new factor column
    std::vector<CandidateRisk> candidates;
};

/// Trains an indicator for one new dimension and refits the global indicator
/// over n+1 factors. Existing indicators are copied through untouched.
AddDimensionResult add_dimension(const std::vector<IndividualAnomalyIndicator>& existing,
                                 const GlobalTrainingInputs& inputs, const std::string& dimension_id,
                                 const Dataset& new_dimension, const LearnerOptions& learners,
                                 const GlobalParams& params = {});

}  // namespace mdids
