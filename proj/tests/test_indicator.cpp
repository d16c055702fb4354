#include <doctest.h>

#include "fixtures.hpp"
#include "mdids/error.hpp"
#include "mdids/indicator.hpp"
#include "oracles.hpp"
#include "random.hpp"

using namespace mdids;

namespace {

RuleIndicator constant(double label) {
    RuleIndicator r;
    r.feature_name = "x";
    r.constant_label = label;
    return r;
}

RuleIndicator threshold(double t, double below) {
    RuleIndicator r;
    r.feature_name = "x";
    r.rule = ThresholdRule{t, below, 1 - below};
    return r;
}

TreeIndicator stump(double t) {
    TreeIndicator tree;
    tree.feature_names = {"x"};
    tree.nodes.push_back({1, {5, 5}, Split{0, t, 0}, 1, 2, 1});
    tree.nodes.push_back({2, {5, 0}, std::nullopt, std::nullopt, std::nullopt, 0});
    tree.nodes.push_back({3, {0, 5}, std::nullopt, std::nullopt, std::nullopt, 0});
    return tree;
}

}  // namespace

TEST_CASE("loss functions") {
    CHECK(loss(LossKind::zero_one, 1, 1) == 0);
    CHECK(loss(LossKind::zero_one, 0, 1) == 1);
    CHECK(loss(LossKind::absolute, 0.8, 0.5) == doctest::Approx(0.3));
    CHECK(loss(LossKind::absolute, 0, 1) == 1);
    CHECK_THROWS_AS(loss(LossKind::zero_one, 0.5, 1), ContractError);
    CHECK_THROWS_AS(loss(LossKind::absolute, 1.5, 1), ContractError);
}

TEST_CASE("majority predictor risk on the flood class balance") {
    const auto data = fixtures::separable_column(1243, 343);
    CHECK(empirical_risk(constant(0), data, LossKind::zero_one) == doctest::Approx(0.2162673).epsilon(1e-7));
    CHECK(empirical_risk(constant(0), data, LossKind::zero_one) == doctest::Approx(343.0 / 1586));
}

TEST_CASE("one error in ten") {
    std::vector<LabeledObservation> obs;
    for (int i = 0; i < 10; ++i) obs.push_back({i, {static_cast<double>(i)}, i == 3 ? 1.0 : 0.0});
    const Dataset data({"x"}, obs, LabelKind::boolean);
    CHECK(empirical_risk(constant(0), data, LossKind::zero_one) == doctest::Approx(0.1));
    CHECK(empirical_risk(constant(0), data, LossKind::absolute) == doctest::Approx(0.1));
    CHECK_THROWS_AS(empirical_risk(constant(0), Dataset({"x"}, {}, LabelKind::boolean), LossKind::zero_one),
                    InsufficientDataError);
}

TEST_CASE("selection ties prefer the rule") {
    std::vector<LabeledObservation> obs;
    for (int i = 0; i < 10; ++i) obs.push_back({i, {static_cast<double>(i)}, i >= 5 ? 1.0 : 0.0});
    const Dataset data({"x"}, obs, LabelKind::boolean);
    auto chosen = select_indicator("d", {stump(4.5), threshold(4.5, 0)}, data, LossKind::zero_one);
    CHECK(learner_name(chosen.model) == "rule");
    CHECK(chosen.empirical_risk == 0);
    chosen = select_indicator("d", {constant(0), stump(4.5)}, data, LossKind::zero_one);
    CHECK(learner_name(chosen.model) == "tree");
    // equal rules: the earlier one
    chosen = select_indicator("d", {threshold(4.5, 0), threshold(4.7, 0)}, data, LossKind::zero_one);
    CHECK(std::get<RuleIndicator>(chosen.model).rule->threshold == 4.5);
    CHECK_THROWS_AS(select_indicator("d", {}, data, LossKind::zero_one), ArgumentError);
}

TEST_CASE("selection matches a brute-force argmin") {
    mdids::detail::Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const auto data = fixtures::random_column(4 + rng.below(20), rng.next(), 0.5, trial % 3 == 0);
        std::vector<IndicatorModel> candidates;
        const auto k = 1 + rng.below(5);
        for (std::size_t c = 0; c < k; ++c) {
            const double t = rng.uniform() * 10;
            switch (rng.below(3)) {
                case 0: candidates.emplace_back(stump(t)); break;
                case 1: candidates.emplace_back(threshold(t, rng.below(2) ? 1.0 : 0.0)); break;
                default: candidates.emplace_back(constant(rng.below(2) ? 1.0 : 0.0));
            }
        }
        const auto expected = oracle::argmin_risk(candidates, data);
        const auto chosen = select_indicator("d", candidates, data, LossKind::zero_one);
        CHECK(chosen.model == candidates[expected]);
        CHECK(chosen.empirical_risk == doctest::Approx(oracle::zero_one_risk(candidates[expected], data)));
    }
}

TEST_CASE("train_indicator reports every candidate") {
    const auto data = fixtures::separable_column(50, 20);
    const auto trained = train_indicator("F1", data, {});
    REQUIRE(trained.candidates.size() == 2);
    CHECK(trained.candidates[0].learner == "tree");
    CHECK(trained.candidates[1].learner == "rule");
    CHECK(trained.indicator.empirical_risk == 0);
    CHECK(learner_name(trained.indicator.model) == "rule");

    LearnerOptions rule_only;
    rule_only.use_tree = false;
    const Dataset two({"a", "b"}, {{0, {1, 2}, 0}, {1, {2, 3}, 1}}, LabelKind::boolean);
    CHECK_THROWS_AS(train_indicator("d", two, rule_only), TrainingError);
}

TEST_CASE("graded prediction is the leaf probability") {
    TreeIndicator tree = stump(0);
    tree.nodes[1].class_counts = {3, 1};
    CHECK(predict_graded(tree, std::vector<double>{-1}) == doctest::Approx(0.25));
    CHECK(predict(tree, std::vector<double>{-1}) == 0);
    CHECK(predict_graded(threshold(0, 0), std::vector<double>{1}) == 1);
    CHECK_THROWS_AS(predict(threshold(0, 0), std::vector<double>{1, 2}), ContractError);
}
