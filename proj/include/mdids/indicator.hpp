#pragma once

// Individual anomaly indicators: loss, empirical risk and risk-minimizing
// selection between the tree and rule learners.

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mdids/dataset.hpp"
#include "mdids/rule.hpp"
#include "mdids/tree.hpp"

namespace mdids {

enum class LossKind { zero_one, absolute };

std::string_view to_string(LossKind kind);

/// zero-one: 0 when equal, 1 otherwise (labels in {0,1}).
/// absolute: |actual - predicted| (labels in [0,1]).
double loss(LossKind kind, double actual, double predicted);

using IndicatorModel = std::variant<TreeIndicator, RuleIndicator>;

std::string_view learner_name(const IndicatorModel& model);

/// Boolean anomaly factor (predicted class).
double predict(const IndicatorModel& model, std::span<const double> features);
/// Leaf probability of class 1 for trees, the class for rules.
double predict_graded(const IndicatorModel& model, std::span<const double> features);

/// Mean loss of the model's boolean output over the dataset.
double empirical_risk(const IndicatorModel& model, const Dataset& data, LossKind kind);

struct IndividualAnomalyIndicator {
    std::string dimension_id;
    IndicatorModel model;
    double empirical_risk = 0.0;

    bool operator==(const IndividualAnomalyIndicator&) const = default;
};

/// Lowest empirical risk wins; ties prefer a rule, then declaration order.
IndividualAnomalyIndicator select_indicator(std::string dimension_id, std::vector<IndicatorModel> candidates,
                                            const Dataset& data, LossKind kind);

struct LearnerOptions {
    bool use_tree = true;
    bool use_rule = true;
    TreeParams tree;
    RuleParams rule;
    LossKind loss = LossKind::zero_one;

    bool operator==(const LearnerOptions&) const = default;
};

struct CandidateRisk {
    std::string learner;
    double risk = 0.0;

    bool operator==(const CandidateRisk&) const = default;
};

struct TrainedIndicator {
    IndividualAnomalyIndicator indicator;
    std::vector<CandidateRisk> candidates;
};

/// Fits every enabled learner that applies to the dimension (the rule learner
/// needs a single column) and keeps the best. A rule learner that fails to
/// terminate contributes the best rule it found.
TrainedIndicator train_indicator(std::string dimension_id, const Dataset& data, const LearnerOptions& options);

}  // namespace mdids
