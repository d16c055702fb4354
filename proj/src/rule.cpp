#include "mdids/rule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace mdids {

NonSeparableError::NonSeparableError(RuleIndicator best, double risk)
    : Error(ErrorClass::numeric,
            fmt::format("sequential covering did not terminate within {} levels (best rule risk {})", best.depth, risk)),
      best_(std::move(best)),
      risk_(risk) {}

double predict_rule(const RuleIndicator& indicator, double value) {
    return indicator.rule ? (*indicator.rule)(value) : indicator.constant_label;
}

namespace {

struct Element {
    double value;
    double label;
};

class SequentialCover {
public:
    SequentialCover(std::vector<Element> all, std::string name, const RuleParams& params)
        : all_(std::move(all)), name_(std::move(name)), params_(params) {}

    RuleIndicator run() { return level(all_, std::nullopt, 0); }

private:
    RuleIndicator level(std::vector<Element> data, std::optional<ThresholdRule> rule, std::size_t depth) {
        std::stable_sort(data.begin(), data.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
        const std::size_t n = data.size();
        std::vector<char> satisfied(n, 0);
        std::size_t sat = 0;
        std::size_t unsat = 0;

        for (std::size_t i = 0; i < n; ++i) {
            if (!rule) {
                rule = ThresholdRule{data[i].value, data[i].label, 1.0 - data[i].label};
                satisfied[i] = 1;
                ++sat;
                continue;
            }
            if ((*rule)(data[i].value) == data[i].label) {
                satisfied[i] = 1;
                ++sat;
                continue;
            }
            ++unsat;
            if (unsat >= sat) {
                rule = adjust(data, i, *rule);
                sat = unsat = 0;
                for (std::size_t k = 0; k <= i; ++k) {
                    satisfied[k] = (*rule)(data[k].value) == data[k].label;
                    satisfied[k] ? ++sat : ++unsat;
                }
            }
        }

        RuleIndicator out;
        out.feature_name = name_;
        out.rule = rule;
        out.satisfied = sat;
        out.unsatisfied = unsat;
        out.depth = depth;
        remember(out);

        if (static_cast<double>(unsat) > params_.unsatisfied_ratio * static_cast<double>(sat)) {
            if (depth + 1 > params_.max_depth) throw NonSeparableError(best_, best_risk_);
            std::vector<Element> rest;
            rest.reserve(unsat);
            for (std::size_t k = 0; k < n; ++k)
                if (!satisfied[k]) rest.push_back(data[k]);
            return level(std::move(rest), rule, depth + 1);
        }
        return out;
    }

    // Moves the threshold to the class boundary (midpoint between adjacent
    // distinct values) that satisfies data[i] and the most elements of this
    // level. Ties go to the boundary nearest data[i] in rank, then to the
    // current orientation, then to the lower threshold.
    ThresholdRule adjust(const std::vector<Element>& data, std::size_t i, const ThresholdRule& current) const {
        std::vector<double> values;
        std::vector<std::array<std::size_t, 2>> counts;
        std::size_t rank_i = 0;
        for (std::size_t k = 0; k < data.size(); ++k) {
            if (values.empty() || data[k].value > values.back()) {
                values.push_back(data[k].value);
                counts.push_back({0, 0});
            }
            ++counts.back()[data[k].label == 1.0 ? 1 : 0];
            if (k == i) rank_i = values.size() - 1;
        }
        std::array<std::size_t, 2> total{0, 0};
        for (const auto& c : counts) {
            total[0] += c[0];
            total[1] += c[1];
        }
        const double target = data[i].label;
        std::array<std::size_t, 2> below{0, 0};
        ThresholdRule best = current;
        std::size_t best_sat = 0;
        std::size_t best_dist = std::numeric_limits<std::size_t>::max();
        bool best_same = false;
        bool found = false;
        for (std::size_t k = 0; k < values.size(); ++k) {
            below[0] += counts[k][0];
            below[1] += counts[k][1];
            const double at_or_below = k >= rank_i ? target : 1.0 - target;
            const std::size_t sat = at_or_below == 0.0 ? below[0] + (total[1] - below[1])
                                                       : below[1] + (total[0] - below[0]);
            const std::size_t dist = k >= rank_i ? k - rank_i : rank_i - k;
            const bool same = at_or_below == current.label_at_or_below;
            bool better = !found || sat > best_sat ||
                          (sat == best_sat && (dist < best_dist || (dist == best_dist && same && !best_same)));
            if (!better) continue;
            double threshold = values[k];
            if (k + 1 < values.size()) {
                threshold = values[k] + (values[k + 1] - values[k]) / 2.0;
                if (!(threshold < values[k + 1])) threshold = values[k];
            }
            best = ThresholdRule{threshold, at_or_below, 1.0 - at_or_below};
            best_sat = sat;
            best_dist = dist;
            best_same = same;
            found = true;
        }
        return best;
    }

    void remember(const RuleIndicator& candidate) {
        std::size_t wrong = 0;
        for (const auto& e : all_)
            if (predict_rule(candidate, e.value) != e.label) ++wrong;
        const double risk = static_cast<double>(wrong) / static_cast<double>(all_.size());
        if (risk < best_risk_) {
            best_risk_ = risk;
            best_ = candidate;
        }
    }

    std::vector<Element> all_;
    std::string name_;
    RuleParams params_;
    RuleIndicator best_;
    double best_risk_ = std::numeric_limits<double>::infinity();
};

}  // namespace

RuleIndicator train_system(const Dataset& data, const RuleParams& params) {
    if (data.empty()) throw InsufficientDataError("cannot learn a rule from an empty dataset");
    if (data.columns() != 1)
        throw ContractError(fmt::format("sequential covering needs exactly one feature column, got {}", data.columns()));
    if (data.label_kind() != LabelKind::boolean) throw ContractError("sequential covering needs boolean labels");

    std::vector<Element> elements;
    elements.reserve(data.size());
    for (const auto& obs : data.observations()) elements.push_back({obs.features[0], obs.label});

    const bool single_class = std::all_of(elements.begin(), elements.end(),
                                          [&](const auto& e) { return e.label == elements.front().label; });
    if (single_class) {
        RuleIndicator constant;
        constant.feature_name = data.names().front();
        constant.constant_label = elements.front().label;
        constant.satisfied = elements.size();
        return constant;
    }
    return SequentialCover(std::move(elements), data.names().front(), params).run();
}

}  // namespace mdids
