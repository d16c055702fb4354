#include <doctest.h>

#include "fixtures.hpp"
#include "mdids/engine.hpp"
#include "mdids/error.hpp"
#include "mdids/global.hpp"

using namespace mdids;

namespace {

GlobalTrainingInputs factors_for(const std::vector<IndividualAnomalyIndicator>& inds,
                                 const std::vector<const Dataset*>& dims) {
    GlobalTrainingInputs in;
    in.labels = dims[0]->labels();
    for (std::size_t i = 0; i < dims[0]->size(); ++i) {
        std::vector<double> row;
        for (std::size_t d = 0; d < inds.size(); ++d)
            row.push_back(anomaly_factor(inds[d], dims[d]->observations()[i].features, false));
        in.af_rows.push_back(row);
    }
    return in;
}

}  // namespace

TEST_CASE("one dimension gives the identity") {
    GlobalTrainingInputs in{{{0}, {1}, {1}}, {0, 1, 1}};
    const auto g = fit_global({"F1"}, in);
    CHECK(g.is_identity());
    CHECK(evaluate_global(g, std::vector<double>{1}).flagged);
    CHECK(evaluate_global(g, std::vector<double>{1}).af == 1);
    CHECK_FALSE(evaluate_global(g, std::vector<double>{0}).flagged);
    CHECK(evaluate_global(g, std::vector<double>{0.5}).flagged);
    CHECK_THROWS_AS(evaluate_global(g, std::vector<double>{1, 0}), ContractError);
}

TEST_CASE("global fit errors") {
    CHECK_THROWS_AS(fit_global({"a"}, {{}, {}}), InsufficientDataError);
    CHECK_THROWS_AS(fit_global({"a"}, {{{1}}, {1, 0}}), AlignmentError);
    CHECK_THROWS_AS(fit_global({}, {{{1}}, {1}}), ArgumentError);
    CHECK_THROWS_AS(fit_global({"a", "b"}, {{{1, 0}, {1}}, {1, 0}}), AlignmentError);
}

TEST_CASE("all-benign labels give a constant zero global") {
    GlobalTrainingInputs in;
    for (int i = 0; i < 20; ++i) {
        in.af_rows.push_back({static_cast<double>(i % 2), static_cast<double>((i / 2) % 2)});
        in.labels.push_back(0);
    }
    const auto g = fit_global({"a", "b"}, in);
    for (double a : {0.0, 1.0})
        for (double b : {0.0, 1.0}) CHECK(evaluate_global(g, std::vector<double>{a, b}).af == 0);
}

TEST_CASE("adding a dimension learns the conjunction") {
    const auto dims = fixtures::conjunction_dimensions();
    const LearnerOptions learners;
    const auto rate = train_indicator("rate", dims.rate, learners).indicator;
    const auto inputs = factors_for({rate}, {&dims.rate});
    const auto before = serialize_indicator(rate);

    const auto added = add_dimension({rate}, inputs, "proto", dims.proto, learners);
    REQUIRE(added.indicators.size() == 2);
    CHECK(serialize_indicator(added.indicators[0]) == before);
    CHECK(serialize_indicator(rate) == before);
    CHECK(added.global.dimensions == std::vector<std::string>{"rate", "proto"});
    CHECK_FALSE(added.global.is_identity());
    for (double a : {0.0, 1.0})
        for (double b : {0.0, 1.0})
            CHECK(evaluate_global(added.global, std::vector<double>{a, b}).af == ((a == 1 && b == 1) ? 1.0 : 0.0));
    for (std::size_t i = 0; i < inputs.af_rows.size(); ++i) {
        CHECK(added.inputs.af_rows[i].size() == 2);
        CHECK(added.inputs.af_rows[i][0] == inputs.af_rows[i][0]);
    }

    // global risk is no worse than the better single dimension
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < added.inputs.af_rows.size(); ++i)
        wrong += evaluate_global(added.global, added.inputs.af_rows[i]).af != added.inputs.labels[i];
    const double global_risk = static_cast<double>(wrong) / static_cast<double>(added.inputs.af_rows.size());
    CHECK(global_risk <= std::min(added.indicators[0].empirical_risk, added.indicators[1].empirical_risk) + 1e-12);
    CHECK(global_risk == 0);
}

TEST_CASE("add_dimension alignment") {
    const auto dims = fixtures::conjunction_dimensions();
    const auto rate = train_indicator("rate", dims.rate, {}).indicator;
    auto inputs = factors_for({rate}, {&dims.rate});
    CHECK_THROWS_AS(add_dimension({rate}, inputs, "rate", dims.proto, {}), ArgumentError);
    auto short_inputs = inputs;
    short_inputs.af_rows.pop_back();
    short_inputs.labels.pop_back();
    CHECK_THROWS_AS(add_dimension({rate}, short_inputs, "proto", dims.proto, {}), AlignmentError);
    auto relabeled = inputs;
    relabeled.labels[0] = 1 - relabeled.labels[0];
    CHECK_THROWS_AS(add_dimension({rate}, relabeled, "proto", dims.proto, {}), AlignmentError);
}

TEST_CASE("a constant new dimension leaves the decisions unchanged") {
    const auto dims = fixtures::conjunction_dimensions();
    const auto rate = train_indicator("rate", dims.rate, {}).indicator;
    const auto inputs = factors_for({rate}, {&dims.rate});
    std::vector<LabeledObservation> flat;
    for (const auto& o : dims.rate.observations()) flat.push_back({o.window_start, {1.0}, o.label});
    const auto added = add_dimension({rate}, inputs, "flat", Dataset({"flat"}, flat, LabelKind::boolean), {});
    for (std::size_t i = 0; i < inputs.af_rows.size(); ++i)
        CHECK(evaluate_global(added.global, added.inputs.af_rows[i]).af == inputs.af_rows[i][0]);
}
