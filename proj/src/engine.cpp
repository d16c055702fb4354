#include "mdids/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "mdids/error.hpp"
#include "random.hpp"

namespace mdids {

WindowSpec window_spec(const TrainConfig& config, const std::vector<std::string>& parameters) {
    WindowSpec spec;
    spec.seconds = config.window_seconds;
    spec.label_policy = config.label_policy;
    for (const auto& [name, policy] : config.policies)
        if (std::find(parameters.begin(), parameters.end(), name) == parameters.end())
            throw SchemaError(fmt::format("aggregation policy given for unknown parameter '{}'", name));
    for (const auto& p : parameters) {
        auto it = config.policies.find(p);
        spec.policies.push_back(it == config.policies.end() ? config.default_policy : it->second);
    }
    return spec;
}

namespace {

std::size_t index_of(const std::vector<std::string>& names, const std::string& name) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw SchemaError(fmt::format("unknown parameter '{}'", name));
    return static_cast<std::size_t>(it - names.begin());
}

std::vector<double> pick(std::span<const double> values, const std::vector<std::size_t>& idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(values[i]);
    return out;
}

}  // namespace

DetectorModel train(const RecordTable& records, const TrainConfig& config) {
    if (records.records.empty()) throw InsufficientDataError("no training records");
    for (const auto& r : records.records)
        if (!r.label) throw SchemaError("training records need a label");
    auto windows = aggregate_windows(records.records, records.parameters, window_spec(config, records.parameters));
    return train_windows(windows, config);
}

DetectorModel train_windows(const Dataset& windows, const TrainConfig& config) {
    if (windows.size() < 2)
        throw InsufficientDataError(fmt::format("training needs at least 2 windows, got {}", windows.size()));
    if (windows.label_kind() == LabelKind::none) throw TrainingError("training windows carry no labels");
    if (windows.label_kind() == LabelKind::graded)
        throw TrainingError("graded labels can be scored but indicators are learnt from boolean labels only");
    if (!(config.variability_threshold > 0.0 && config.variability_threshold <= 100.0))
        throw ArgumentError("variability threshold outside (0, 100]");

    DetectorModel model;
    model.parameters = windows.names();
    model.config = config;
    model.metadata.observations = windows.size();
    model.metadata.anomalous = windows.count_label(1.0);
    model.metadata.benign = windows.size() - model.metadata.anomalous;
    if (model.metadata.anomalous == 0 || model.metadata.benign == 0)
        throw TrainingError("training data holds a single class; no indicator can be validated");

    // projection blocks and dimensions
    std::vector<Dataset> projected;
    if (config.groups.empty()) {
        std::vector<std::size_t> all(model.parameters.size());
        std::iota(all.begin(), all.end(), 0);
        ProjectionBlock block{"all", all, fit_pca(windows, config.variability_threshold, "F")};
        projected.push_back(project(block.pca, windows));
        for (std::size_t k = 0; k < block.pca.selected_p; ++k)
            model.dimensions.push_back({block.pca.component_names[k], 0, {k}});
        model.blocks.push_back(std::move(block));
    } else {
        for (const auto& group : config.groups) {
            if (group.parameters.empty()) throw ArgumentError(fmt::format("feature group '{}' is empty", group.name));
            std::vector<std::size_t> idx;
            for (const auto& p : group.parameters) idx.push_back(index_of(model.parameters, p));
            auto raw = windows.select_columns(idx);
            ProjectionBlock block{group.name, idx, fit_pca(raw, config.variability_threshold, group.name + ".F")};
            projected.push_back(project(block.pca, raw));
            std::vector<std::size_t> comps(block.pca.selected_p);
            std::iota(comps.begin(), comps.end(), 0);
            model.dimensions.push_back({group.name, model.blocks.size(), comps});
            model.blocks.push_back(std::move(block));
        }
    }

    // individual indicators
    GlobalTrainingInputs inputs;
    inputs.labels = windows.labels();
    inputs.af_rows.assign(windows.size(), {});
    std::vector<std::string> dim_names;
    for (const auto& dim : model.dimensions) {
        auto data = projected[dim.block].select_columns(dim.components);
        auto trained = train_indicator(dim.name, data, config.learners);
        for (std::size_t i = 0; i < data.size(); ++i)
            inputs.af_rows[i].push_back(
                anomaly_factor(trained.indicator, data.observations()[i].features, config.global.graded_afs));
        model.metadata.candidate_risks.push_back(std::move(trained.candidates));
        model.indicators.push_back(std::move(trained.indicator));
        dim_names.push_back(dim.name);
    }
    model.global = fit_global(dim_names, inputs, config.global);
    model.training_windows = windows;
    model.metadata.global_risk = global_risk(model, windows);
    return model;
}

std::vector<double> anomaly_factors(const DetectorModel& model, std::span<const double> raw_features) {
    if (raw_features.size() != model.parameters.size())
        throw ContractError(fmt::format("model expects {} parameters, got {}", model.parameters.size(),
                                        raw_features.size()));
    std::vector<std::vector<double>> projected;
    projected.reserve(model.blocks.size());
    for (const auto& block : model.blocks) projected.push_back(project(block.pca, pick(raw_features, block.parameters)));
    std::vector<double> afs;
    afs.reserve(model.dimensions.size());
    for (std::size_t d = 0; d < model.dimensions.size(); ++d) {
        const auto& dim = model.dimensions[d];
        auto features = pick(projected[dim.block], dim.components);
        afs.push_back(anomaly_factor(model.indicators[d], features, model.config.global.graded_afs));
    }
    return afs;
}

AnomalyReport score_window(const DetectorModel& model, const LabeledObservation& window) {
    AnomalyReport report;
    report.window_start = window.window_start;
    report.afs = anomaly_factors(model, window.features);
    auto result = evaluate_global(model.global, report.afs);
    report.af = result.af;
    report.flagged = result.flagged;
    report.model_version = model.metadata.model_version;
    return report;
}

// ---------------------------------------------------------------------------
// Detection

Detector::Detector(const DetectorModel& model, DetectOptions options)
    : model_(&model), options_(options), spec_(window_spec(model.config, model.parameters)) {}

std::vector<AnomalyReport> Detector::push(const RawRecord& record) {
    if (record.values.size() != model_->parameters.size())
        throw ContractError(fmt::format("record has {} values, model expects {}", record.values.size(),
                                        model_->parameters.size()));
    const auto start = window_start_of(record.timestamp, spec_.seconds);
    const auto horizon = static_cast<std::int64_t>(options_.lag_windows) * spec_.seconds;
    if (newest_ && start < *newest_ - horizon) {
        ++rejected_;
        return {};
    }
    auto it = open_.find(start);
    if (it == open_.end()) it = open_.emplace(start, WindowAccumulator(start, model_->parameters.size(), spec_)).first;
    RawRecord unlabeled{record.timestamp, record.values, std::nullopt};
    it->second.add(unlabeled);
    newest_ = newest_ ? std::max(*newest_, start) : start;
    return emit_before(*newest_ - horizon);
}

std::vector<AnomalyReport> Detector::finish() {
    return emit_before(std::numeric_limits<std::int64_t>::max());
}

std::vector<AnomalyReport> Detector::emit_before(std::int64_t limit) {
    std::vector<AnomalyReport> out;
    while (!open_.empty() && open_.begin()->first < limit) {
        auto report = score_window(*model_, open_.begin()->second.finish());
        ++scored_;
        if (report.flagged) ++flagged_;
        last_emitted_ = open_.begin()->first;
        open_.erase(open_.begin());
        out.push_back(std::move(report));
    }
    return out;
}

std::vector<AnomalyReport> detect(const DetectorModel& model, std::span<const RawRecord> records,
                                  DetectOptions options) {
    Detector detector(model, options);
    std::vector<AnomalyReport> out;
    for (const auto& r : records) {
        auto ready = detector.push(r);
        out.insert(out.end(), ready.begin(), ready.end());
    }
    auto rest = detector.finish();
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

Evaluation evaluate(const DetectorModel& model, const Dataset& labeled_windows) {
    if (labeled_windows.empty()) throw InsufficientDataError("no labeled windows to evaluate");
    if (labeled_windows.label_kind() != LabelKind::boolean)
        throw ContractError("evaluation needs boolean labels");
    if (labeled_windows.names() != model.parameters) throw SchemaError("evaluation data does not match the model schema");
    Evaluation ev;
    ev.dimension_risks.assign(model.dimensions.size(), 0.0);
    for (const auto& obs : labeled_windows.observations()) {
        auto report = score_window(model, obs);
        const bool actual = obs.label == 1.0;
        if (report.flagged && actual) ++ev.true_positive;
        else if (report.flagged) ++ev.false_positive;
        else if (actual) ++ev.false_negative;
        else ++ev.true_negative;
        for (std::size_t d = 0; d < report.afs.size(); ++d) {
            const double cls = model.config.global.graded_afs ? (report.afs[d] >= 0.5 ? 1.0 : 0.0) : report.afs[d];
            ev.dimension_risks[d] += loss(LossKind::zero_one, obs.label, cls);
        }
    }
    const double n = static_cast<double>(labeled_windows.size());
    ev.risk = static_cast<double>(ev.false_positive + ev.false_negative) / n;
    for (auto& r : ev.dimension_risks) r /= n;
    return ev;
}

double global_risk(const DetectorModel& model, const Dataset& labeled_windows) {
    return evaluate(model, labeled_windows).risk;
}

// ---------------------------------------------------------------------------
// Feedback

std::string_view to_string(FeedbackStatus status) {
    switch (status) {
        case FeedbackStatus::accepted: return "accepted";
        case FeedbackStatus::rejected: return "rejected";
        case FeedbackStatus::deferred: return "deferred";
    }
    return "deferred";
}

FeedbackOutcome feedback(const DetectorModel& model, const FeedbackBatch& batch, const FeedbackConfig& config) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    FeedbackOutcome outcome{FeedbackStatus::deferred, model, nan, nan, 0};
    if (batch.windows.size() < config.min_batch) return outcome;

    if (batch.windows.names() != model.parameters) throw SchemaError("feedback batch does not match the model schema");
    if (batch.windows.label_kind() != LabelKind::boolean)
        throw ContractError("feedback labels must be confirmed boolean labels");
    if (!(config.holdout_fraction > 0.0 && config.holdout_fraction < 1.0))
        throw ArgumentError("holdout fraction must lie in (0, 1)");

    const Dataset& pool = model.training_windows;
    const std::size_t n = pool.size();
    auto holdout_size = static_cast<std::size_t>(std::llround(config.holdout_fraction * static_cast<double>(n)));
    holdout_size = std::clamp<std::size_t>(holdout_size, 1, n > 1 ? n - 1 : 1);
    if (n < 2) throw InsufficientDataError("model holds too few training windows for a holdout");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    detail::Rng rng(config.seed);
    rng.shuffle(order);
    std::vector<std::size_t> holdout_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(holdout_size));
    std::vector<std::size_t> kept_rows(order.begin() + static_cast<std::ptrdiff_t>(holdout_size), order.end());
    const Dataset holdout = pool.select_rows(holdout_rows);
    const Dataset training = Dataset::merge(pool.select_rows(kept_rows), batch.windows);

    outcome.holdout_size = holdout_size;
    outcome.incumbent_risk = global_risk(model, holdout);
    DetectorModel candidate;
    try {
        candidate = train_windows(training, model.config);
    } catch (const TrainingError&) {
        outcome.status = FeedbackStatus::rejected;
        return outcome;
    }
    outcome.candidate_risk = global_risk(candidate, holdout);
    if (outcome.candidate_risk <= outcome.incumbent_risk) {
        candidate.training_windows = Dataset::merge(pool, batch.windows);
        candidate.metadata.model_version = model.metadata.model_version + 1;
        outcome.model = std::move(candidate);
        outcome.status = FeedbackStatus::accepted;
    } else {
        outcome.status = FeedbackStatus::rejected;
    }
    return outcome;
}

}  // namespace mdids
