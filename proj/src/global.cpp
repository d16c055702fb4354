#include "mdids/global.hpp"

#include <fmt/format.h>

#include "mdids/error.hpp"

namespace mdids {

GlobalIndicator fit_global(const std::vector<std::string>& dimensions, const GlobalTrainingInputs& inputs,
                           const GlobalParams& params) {
    if (inputs.af_rows.empty()) throw InsufficientDataError("no anomaly factors to fit the global indicator on");
    if (inputs.af_rows.size() != inputs.labels.size())
        throw AlignmentError(fmt::format("{} factor rows for {} labels", inputs.af_rows.size(), inputs.labels.size()));
    if (dimensions.empty()) throw ArgumentError("global indicator needs at least one dimension");

    GlobalIndicator global;
    global.dimensions = dimensions;
    global.flag_threshold = params.flag_threshold;
    if (dimensions.size() == 1) return global;

    std::vector<LabeledObservation> rows;
    rows.reserve(inputs.af_rows.size());
    for (std::size_t i = 0; i < inputs.af_rows.size(); ++i) {
        if (inputs.af_rows[i].size() != dimensions.size())
            throw AlignmentError(fmt::format("factor row {} has {} entries, expected {}", i, inputs.af_rows[i].size(),
                                             dimensions.size()));
        rows.push_back({static_cast<std::int64_t>(i), inputs.af_rows[i], inputs.labels[i]});
    }
    std::vector<std::string> names;
    for (const auto& d : dimensions) names.push_back("af_" + d);
    global.tree = fit_tree(Dataset(std::move(names), std::move(rows), LabelKind::boolean), params.tree);
    return global;
}

GlobalResult evaluate_global(const GlobalIndicator& global, std::span<const double> afs) {
    if (afs.size() != global.dimensions.size())
        throw ContractError(fmt::format("global indicator expects {} factors, got {}", global.dimensions.size(),
                                        afs.size()));
    const double af = global.tree ? static_cast<double>(predict_tree(*global.tree, afs).predicted_class) : afs[0];
    return {af, af >= global.flag_threshold};
}

double anomaly_factor(const IndividualAnomalyIndicator& indicator, std::span<const double> features, bool graded) {
    return graded ? predict_graded(indicator.model, features) : predict(indicator.model, features);
}

AddDimensionResult add_dimension(const std::vector<IndividualAnomalyIndicator>& existing,
                                 const GlobalTrainingInputs& inputs, const std::string& dimension_id,
                                 const Dataset& new_dimension, const LearnerOptions& learners,
                                 const GlobalParams& params) {
    if (new_dimension.size() != inputs.af_rows.size())
        throw AlignmentError(fmt::format("new dimension has {} observations, existing training set has {}",
                                         new_dimension.size(), inputs.af_rows.size()));
    const auto labels = new_dimension.labels();
    if (labels != inputs.labels) throw AlignmentError("new dimension labels differ from the existing training labels");
    for (const auto& ind : existing)
        if (ind.dimension_id == dimension_id)
            throw ArgumentError(fmt::format("dimension '{}' already has an indicator", dimension_id));

    auto trained = train_indicator(dimension_id, new_dimension, learners);

    AddDimensionResult out;
    out.indicators = existing;
    out.indicators.push_back(trained.indicator);
    out.candidates = std::move(trained.candidates);
    out.inputs = inputs;
    for (std::size_t i = 0; i < new_dimension.size(); ++i)
        out.inputs.af_rows[i].push_back(
            anomaly_factor(trained.indicator, new_dimension.observations()[i].features, params.graded_afs));

    std::vector<std::string> dims;
    for (const auto& ind : out.indicators) dims.push_back(ind.dimension_id);
    out.global = fit_global(dims, out.inputs, params);
    return out;
}

}  // namespace mdids
