#include <doctest.h>

#include <sstream>

#include "mdids/config.hpp"
#include "mdids/error.hpp"

using namespace mdids;

namespace {

Config parse(const std::string& text, const std::filesystem::path& base = {}) {
    std::istringstream in(text);
    return parse_config(in, base);
}

}  // namespace

TEST_CASE("defaults") {
    const auto c = parse("");
    CHECK(c.seed == 42);
    CHECK(c.feedback.seed == 42);
    CHECK(c.simulation.seed == 42);
    CHECK(c.train.variability_threshold == 75);
    CHECK(c.train.learners.use_tree);
    CHECK(c.train.learners.use_rule);
    CHECK(c.detect.lag_windows == 2);
    CHECK(c.label_column == "label");
}

TEST_CASE("every key is read") {
    const auto c = parse(R"(# detector settings
window_seconds = 5
aggregation.default = mean
aggregation.cpu = count
label_policy = last
label_column = attack
group.net = udp, tcp
group.host = cpu
variability_threshold = 90   # keep more
tree.cp_min = 0.05
tree.min_split = 10
tree.max_depth = 4
rule.max_depth = 8
rule.unsatisfied_ratio = 0.1
learners = rule
loss = absolute
global.threshold = 0.7
global.graded_afs = true
global.min_split = 3
global.cp_min = 0.02
feedback.min_batch = 5
feedback.holdout_fraction = 0.3
detect.lag_windows = 4
sim.p_loss = 0.25
sim.fragments = 5
sim.rounds = 7
sim.exchange_indicators = false
seed = 9
node.a.model = models/a.json
node.a.validation = /data/a.csv
)", "/etc/mdids");
    CHECK(c.train.window_seconds == 5);
    CHECK(c.train.default_policy == AggregationPolicy::mean);
    CHECK(c.train.policies.at("cpu") == AggregationPolicy::count);
    CHECK(c.train.label_policy == LabelPolicy::last);
    CHECK(c.label_column == "attack");
    REQUIRE(c.train.groups.size() == 2);
    CHECK(c.train.groups[0].parameters == std::vector<std::string>{"udp", "tcp"});
    CHECK(c.train.variability_threshold == 90);
    CHECK(c.train.learners.tree == TreeParams{0.05, 10, 4});
    CHECK(c.train.learners.rule == RuleParams{8, 0.1});
    CHECK_FALSE(c.train.learners.use_tree);
    CHECK(c.train.learners.loss == LossKind::absolute);
    CHECK(c.train.global.flag_threshold == 0.7);
    CHECK(c.train.global.graded_afs);
    CHECK(c.train.global.tree.min_split == 3);
    CHECK(c.feedback.min_batch == 5);
    CHECK(c.feedback.holdout_fraction == 0.3);
    CHECK(c.detect.lag_windows == 4);
    CHECK(c.simulation.p_loss == 0.25);
    CHECK(c.simulation.fragments == 5);
    CHECK(c.simulation.rounds == 7);
    CHECK_FALSE(c.simulation.exchange_indicators);
    CHECK(c.seed == 9);
    CHECK(c.feedback.seed == 9);
    CHECK(c.simulation.seed == 9);
    CHECK(c.nodes.at("a").model == std::filesystem::path("/etc/mdids/models/a.json"));
    CHECK(c.nodes.at("a").validation == std::filesystem::path("/data/a.csv"));
}

TEST_CASE("bad values name the line") {
    CHECK_THROWS_WITH_AS(parse("seed = 1\nvariability_threshold = 0\n"), doctest::Contains("line 2"), ArgumentError);
    CHECK_THROWS_AS(parse("variability_threshold = 101"), ArgumentError);
    CHECK_THROWS_AS(parse("tree.min_split = 1"), ArgumentError);
    CHECK_THROWS_AS(parse("tree.max_depth = 31"), ArgumentError);
    CHECK_THROWS_AS(parse("rule.unsatisfied_ratio = 1"), ArgumentError);
    CHECK_THROWS_AS(parse("feedback.holdout_fraction = 0"), ArgumentError);
    CHECK_THROWS_AS(parse("feedback.holdout_fraction = 1"), ArgumentError);
    CHECK_THROWS_AS(parse("sim.p_loss = 1.5"), ArgumentError);
    CHECK_THROWS_AS(parse("sim.fragments = 1"), ArgumentError);
    CHECK_THROWS_AS(parse("aggregation.default = median"), ArgumentError);
    CHECK_THROWS_AS(parse("learners = forest"), ArgumentError);
    CHECK_THROWS_AS(parse("seed = -1"), ArgumentError);
    CHECK_THROWS_AS(parse("window_seconds = five"), ArgumentError);
    CHECK_THROWS_WITH_AS(parse("colour = red"), doctest::Contains("colour"), ArgumentError);
    CHECK_THROWS_AS(parse("just words"), ArgumentError);
    CHECK_THROWS_WITH_AS(parse("seed = 1\nseed = 2\n"), doctest::Contains("line 1"), ArgumentError);
    CHECK_THROWS_AS(parse("group.a = x\ngroup.a = y\n"), ArgumentError);
}

TEST_CASE("set_seed reaches every seeded stage") {
    auto c = parse("seed = 3\n");
    c.set_seed(11);
    CHECK(c.seed == 11);
    CHECK(c.feedback.seed == 11);
    CHECK(c.simulation.seed == 11);
}

TEST_CASE("missing config file") {
    CHECK_THROWS_AS(load_config("/nonexistent/mdids.conf"), ArgumentError);
}
