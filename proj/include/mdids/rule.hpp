#pragma once

// Sequential-covering threshold rules over a single transformed feature.

#include <cstddef>
#include <optional>
#include <string>

#include "mdids/dataset.hpp"
#include "mdids/error.hpp"

namespace mdids {

/// value <= threshold -> label_at_or_below, otherwise label_above. The two
/// labels always differ.
struct ThresholdRule {
    double threshold = 0.0;
    double label_at_or_below = 0.0;
    double label_above = 1.0;

    double operator()(double value) const { return value <= threshold ? label_at_or_below : label_above; }
    bool operator==(const ThresholdRule&) const = default;
};

struct RuleIndicator {
    std::string feature_name;
    std::optional<ThresholdRule> rule;  // empty: constant indicator
    double constant_label = 0.0;
    // state at the terminating recursion level
    std::size_t satisfied = 0;
    std::size_t unsatisfied = 0;
    std::size_t depth = 0;  // 0 when no recursion happened

    bool operator==(const RuleIndicator&) const = default;
};

struct RuleParams {
    std::size_t max_depth = 16;
    /// Recurse while unsatisfied > ratio * satisfied.
    double unsatisfied_ratio = 0.2;

    bool operator==(const RuleParams&) const = default;
};

/// Raised when recursion exceeds RuleParams::max_depth. Carries the rule with
/// the lowest zero-one risk on the full training set seen at any level.
class NonSeparableError : public Error {
public:
    NonSeparableError(RuleIndicator best, double risk);
    const RuleIndicator& best() const noexcept { return best_; }
    double risk() const noexcept { return risk_; }

private:
    RuleIndicator best_;
    double risk_;
};

/// Requires a non-empty dataset with exactly one column and boolean labels.
RuleIndicator train_system(const Dataset& data, const RuleParams& params = {});

double predict_rule(const RuleIndicator& indicator, double value);

}  // namespace mdids
