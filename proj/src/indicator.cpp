#include "mdids/indicator.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mdids/error.hpp"

namespace mdids {

std::string_view to_string(LossKind kind) {
    return kind == LossKind::zero_one ? "zero-one" : "absolute";
}

double loss(LossKind kind, double actual, double predicted) {
    if (kind == LossKind::zero_one) {
        for (double y : {actual, predicted})
            if (y != 0.0 && y != 1.0) throw ContractError(fmt::format("zero-one loss needs labels in {{0,1}}, got {}", y));
        return actual == predicted ? 0.0 : 1.0;
    }
    for (double y : {actual, predicted})
        if (!(y >= 0.0 && y <= 1.0)) throw ContractError(fmt::format("absolute loss needs labels in [0,1], got {}", y));
    return std::abs(actual - predicted);
}

std::string_view learner_name(const IndicatorModel& model) {
    return std::holds_alternative<TreeIndicator>(model) ? "tree" : "rule";
}

double predict(const IndicatorModel& model, std::span<const double> features) {
    if (const auto* tree = std::get_if<TreeIndicator>(&model)) return predict_tree(*tree, features).predicted_class;
    if (features.size() != 1)
        throw ContractError(fmt::format("rule indicator expects 1 feature, got {}", features.size()));
    return predict_rule(std::get<RuleIndicator>(model), features[0]);
}

double predict_graded(const IndicatorModel& model, std::span<const double> features) {
    if (const auto* tree = std::get_if<TreeIndicator>(&model)) return predict_tree(*tree, features).probability;
    return predict(model, features);
}

double empirical_risk(const IndicatorModel& model, const Dataset& data, LossKind kind) {
    if (data.empty()) throw InsufficientDataError("empirical risk over an empty dataset");
    double total = 0.0;
    for (const auto& obs : data.observations()) total += loss(kind, obs.label, predict(model, obs.features));
    return total / static_cast<double>(data.size());
}

IndividualAnomalyIndicator select_indicator(std::string dimension_id, std::vector<IndicatorModel> candidates,
                                            const Dataset& data, LossKind kind) {
    if (candidates.empty()) throw ArgumentError("no candidate indicators to select from");
    std::size_t best = 0;
    double best_risk = 0.0;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const double risk = empirical_risk(candidates[k], data, kind);
        const bool is_rule = std::holds_alternative<RuleIndicator>(candidates[k]);
        const bool best_is_rule = std::holds_alternative<RuleIndicator>(candidates[best]);
        if (k == 0 || risk < best_risk || (risk == best_risk && is_rule && !best_is_rule)) {
            best = k;
            best_risk = risk;
        }
    }
    return {std::move(dimension_id), std::move(candidates[best]), best_risk};
}

TrainedIndicator train_indicator(std::string dimension_id, const Dataset& data, const LearnerOptions& options) {
    std::vector<IndicatorModel> models;
    if (options.use_tree) models.emplace_back(fit_tree(data, options.tree));
    if (options.use_rule && data.columns() == 1) {
        try {
            models.emplace_back(train_system(data, options.rule));
        } catch (const NonSeparableError& e) {
            models.emplace_back(e.best());
        }
    }
    if (models.empty())
        throw TrainingError(fmt::format("no learner applies to dimension '{}' ({} columns)", dimension_id,
                                        data.columns()));
    TrainedIndicator out;
    for (const auto& m : models)
        out.candidates.push_back({std::string(learner_name(m)), empirical_risk(m, data, options.loss)});
    out.indicator = select_indicator(std::move(dimension_id), std::move(models), data, options.loss);
    return out;
}

}  // namespace mdids
