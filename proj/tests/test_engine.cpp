#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "mdids/engine.hpp"
#include "mdids/error.hpp"
#include "oracles.hpp"
#include "random.hpp"

using namespace mdids;

namespace {

const DetectorModel& flood_model() {
    static const DetectorModel model = train(fixtures::udp_flood_records(), TrainConfig{});
    return model;
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "mdids_engine_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

Dataset relabel(const Dataset& d, bool invert) {
    std::vector<LabeledObservation> obs = d.observations();
    if (invert)
        for (auto& o : obs) o.label = 1 - o.label;
    return Dataset(d.names(), obs, LabelKind::boolean);
}

}  // namespace

TEST_CASE("training on the flood fixture") {
    const auto& m = flood_model();
    CHECK(m.parameters == std::vector<std::string>{"udp_bytes", "cpu_cycles"});
    CHECK(m.metadata.observations == 1586);
    CHECK(m.metadata.benign == 1243);
    CHECK(m.metadata.anomalous == 343);
    REQUIRE(m.blocks.size() == 1);
    CHECK(m.blocks[0].pca.selected_p == 1);
    REQUIRE(m.dimensions.size() == 1);
    CHECK(m.global.is_identity());
    CHECK(m.metadata.global_risk == 0);
    CHECK(m.metadata.model_version == 1);
    CHECK(m.training_windows.size() == 1586);
    CHECK(m.indicators[0].empirical_risk == 0);
}

TEST_CASE("re-scoring flags exactly the attack windows") {
    const auto records = fixtures::udp_flood_records();
    const auto reports = detect(flood_model(), records.records);
    const auto windows = fixtures::udp_flood_windows();
    REQUIRE(reports.size() == windows.size());
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        CHECK(reports[i].window_start == windows.observations()[i].window_start);
        CHECK(reports[i].flagged == (windows.observations()[i].label == 1));
        flagged += reports[i].flagged;
    }
    CHECK(flagged == fixtures::kFloodAttacks);
    const auto eval = evaluate(flood_model(), windows);
    CHECK(eval.true_positive == 343);
    CHECK(eval.true_negative == 1243);
    CHECK(eval.risk == 0);
}

TEST_CASE("four separable windows") {
    std::vector<LabeledObservation> obs = {{0, {1, 10}, 0}, {1, {2, 11}, 0}, {2, {50, 90}, 1}, {3, {52, 95}, 1}};
    const auto model = train_windows(Dataset({"a", "b"}, obs, LabelKind::boolean), TrainConfig{});
    std::size_t flagged = 0;
    for (const auto& o : obs) {
        const auto r = score_window(model, o);
        CHECK(r.flagged == (o.label == 1));
        flagged += r.flagged;
    }
    CHECK(flagged == 2);
}

TEST_CASE("training errors") {
    auto records = fixtures::udp_flood_records(7, 100, 0);
    CHECK_THROWS_AS(train(records, TrainConfig{}), TrainingError);
    auto unlabeled = fixtures::udp_flood_records(7, 100, 20);
    for (auto& r : unlabeled.records) r.label.reset();
    CHECK_THROWS_AS(train(unlabeled, TrainConfig{}), SchemaError);
    CHECK_THROWS_AS(train_windows(fixtures::udp_flood_windows(7, 1, 0), TrainConfig{}), InsufficientDataError);
    TrainConfig bad;
    bad.variability_threshold = 0;
    CHECK_THROWS_AS(train(fixtures::udp_flood_records(7, 100, 20), bad), ArgumentError);
    TrainConfig grouped;
    grouped.groups = {{"net", {"udp_bytes", "nope"}}};
    CHECK_THROWS_AS(train(fixtures::udp_flood_records(7, 100, 20), grouped), SchemaError);
}

TEST_CASE("grouped training builds one dimension per group") {
    TrainConfig cfg;
    cfg.groups = {{"net", {"udp_bytes"}}, {"host", {"cpu_cycles"}}};
    const auto model = train(fixtures::udp_flood_records(), cfg);
    REQUIRE(model.dimensions.size() == 2);
    CHECK(model.dimensions[0].name == "net");
    CHECK(model.dimensions[1].name == "host");
    CHECK_FALSE(model.global.is_identity());
    CHECK(model.metadata.global_risk <= std::min(model.indicators[0].empirical_risk, model.indicators[1].empirical_risk));
}

TEST_CASE("benign-looking windows are never flagged") {
    const auto windows = fixtures::udp_flood_windows();
    std::vector<double> mean(2, 0.0);
    std::size_t benign = 0;
    for (const auto& o : windows.observations())
        if (o.label == 0) {
            mean[0] += o.features[0];
            mean[1] += o.features[1];
            ++benign;
        }
    for (auto& v : mean) v /= static_cast<double>(benign);
    CHECK_FALSE(score_window(flood_model(), LabeledObservation{0, mean, 0.0}).flagged);
    mdids::detail::Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const double udp = 1200 + rng.uniform() * 14800;
        CHECK_FALSE(score_window(flood_model(), LabeledObservation{i, {udp, 800 + 0.02 * udp + rng.uniform() * 1400}, 0.0}).flagged);
    }
}

TEST_CASE("streaming detector") {
    const auto& model = flood_model();
    const auto before = serialize_model(model);
    Detector det(model);
    CHECK(det.finish().empty());

    Detector stream(model, {2});
    std::vector<AnomalyReport> out;
    auto take = [&](auto v) { out.insert(out.end(), v.begin(), v.end()); };
    take(stream.push({10, {1000, 900}, std::nullopt}));
    take(stream.push({11, {60000, 2500}, std::nullopt}));
    CHECK(out.empty());
    take(stream.push({13, {1000, 900}, std::nullopt}));
    REQUIRE(out.size() == 1);
    CHECK(out[0].window_start == 10);
    // within the lag: still accepted
    take(stream.push({11, {1000, 0}, std::nullopt}));
    CHECK(stream.rejected() == 0);
    // older than the lag
    take(stream.push({9, {1000, 900}, std::nullopt}));
    take(stream.push({10, {1000, 900}, std::nullopt}));
    CHECK(stream.rejected() == 2);
    take(stream.finish());
    REQUIRE(out.size() == 3);
    CHECK(out[1].window_start == 11);
    CHECK(out[1].flagged);
    CHECK(out[2].window_start == 13);
    CHECK_FALSE(out[2].flagged);
    CHECK(stream.scored() == 3);
    CHECK(stream.flagged() == 1);
    for (std::size_t i = 1; i < out.size(); ++i) CHECK(out[i - 1].window_start < out[i].window_start);
    CHECK(serialize_model(model) == before);
}

TEST_CASE("detect rejects a schema mismatch") {
    std::vector<RawRecord> recs = {{0, {1, 2, 3}, std::nullopt}};
    CHECK_THROWS(detect(flood_model(), recs));
}

TEST_CASE("feedback with consistent labels is accepted") {
    const auto batch = fixtures::udp_flood_windows(8, 200, 40, 100000);
    const auto out = feedback(flood_model(), {batch});
    CHECK(out.status == FeedbackStatus::accepted);
    CHECK(out.candidate_risk <= out.incumbent_risk);
    CHECK(out.model.metadata.model_version == 2);
    CHECK(out.model.training_windows.size() == 1586 + 200);
    CHECK(out.holdout_size == 317);
}

TEST_CASE("feedback with inverted labels is rejected") {
    const auto batch = relabel(fixtures::udp_flood_windows(9, 1586, 343, 100000), true);
    const auto out = feedback(flood_model(), {batch});
    CHECK(out.status == FeedbackStatus::rejected);
    CHECK(out.candidate_risk > out.incumbent_risk);
    CHECK(out.model == flood_model());
}

TEST_CASE("small feedback batches are deferred") {
    const auto batch = fixtures::udp_flood_windows(8, 10, 2, 100000);
    const auto out = feedback(flood_model(), {batch});
    CHECK(out.status == FeedbackStatus::deferred);
    CHECK(out.model == flood_model());
    CHECK(std::isnan(out.candidate_risk));
    FeedbackConfig bad;
    bad.holdout_fraction = 1;
    CHECK_THROWS_AS(feedback(flood_model(), {fixtures::udp_flood_windows(8, 100, 20, 100000)}, bad), ArgumentError);
}

TEST_CASE("feedback gate follows the risk comparison") {
    mdids::detail::Rng rng(6);
    for (int trial = 0; trial < 6; ++trial) {
        auto obs = fixtures::udp_flood_windows(20 + trial, 300, 60, 100000).observations();
        for (auto& o : obs)
            if (rng.uniform() < 0.15 * trial) o.label = 1 - o.label;
        FeedbackConfig cfg;
        cfg.seed = rng.next();
        const auto out = feedback(flood_model(), {Dataset({"udp_bytes", "cpu_cycles"}, obs, LabelKind::boolean)}, cfg);
        REQUIRE(out.status != FeedbackStatus::deferred);
        CHECK((out.status == FeedbackStatus::accepted) == (out.candidate_risk <= out.incumbent_risk));
    }
}

TEST_CASE("persist and load round-trip") {
    const auto path = scratch("model.json");
    persist(flood_model(), path);
    const auto loaded = load(path);
    CHECK(loaded == flood_model());
    const auto again = scratch("model2.json");
    persist(loaded, again);
    CHECK(slurp(path) == slurp(again));
    CHECK(serialize_model(deserialize_model(serialize_model(flood_model()))) == serialize_model(flood_model()));
    CHECK_THROWS_AS(load(scratch("missing.json")), Error);
}

TEST_CASE("version and integrity checks") {
    const auto text = serialize_model(flood_model());
    auto bumped = text;
    bumped.replace(bumped.find("version=1"), 9, "version=2");
    try {
        deserialize_model(bumped);
        FAIL("expected a version error");
    } catch (const FormatVersionError& e) {
        CHECK(e.expected() == 1);
        CHECK(e.found() == 2);
        CHECK(std::string(e.what()).find('1') != std::string::npos);
        CHECK(std::string(e.what()).find('2') != std::string::npos);
    }
    auto flipped = text;
    flipped[text.size() / 2] ^= 0x01;
    CHECK_THROWS_AS(deserialize_model(flipped), IntegrityError);
    CHECK_THROWS_AS(deserialize_model(text.substr(0, text.size() - 20)), IntegrityError);
    CHECK_THROWS_AS(deserialize_model(""), IntegrityError);
    CHECK_THROWS_AS(deserialize_model("garbage\n{}"), IntegrityError);

    const auto path = scratch("flipped.json");
    spit(path, flipped);
    CHECK_THROWS_AS(load(path), IntegrityError);
}

TEST_CASE("training is deterministic") {
    const auto a = serialize_model(train(fixtures::udp_flood_records(), TrainConfig{}));
    CHECK(a == serialize_model(flood_model()));
}
