// Model file: one header line, then a JSON body.
//
//   mdids-model version=1 crc32=0123abcd
//   { ... }
//
// The checksum covers the body bytes exactly as written.

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <zlib.h>

#include "mdids/engine.hpp"
#include "mdids/error.hpp"
#include "text.hpp"

namespace mdids {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "mdids-model";

// --- encoding --------------------------------------------------------------

json encode(const TreeParams& p) {
    return {{"cp_min", p.cp_min}, {"min_split", p.min_split}, {"max_depth", p.max_depth}};
}

json encode(const TreeIndicator& t) {
    json nodes = json::array();
    for (const auto& n : t.nodes) {
        json j = {{"id", n.node_id}, {"counts", n.class_counts}, {"complexity", n.complexity}};
        j["split"] = n.split ? json{{"column", n.split->column},
                                    {"threshold", n.split->threshold},
                                    {"improvement", n.split->improvement}}
                             : json(nullptr);
        j["left"] = n.left ? json(*n.left) : json(nullptr);
        j["right"] = n.right ? json(*n.right) : json(nullptr);
        nodes.push_back(std::move(j));
    }
    json cp = json::array();
    for (const auto& r : t.cp_table) cp.push_back({r.cp, r.nsplit, r.rel_error});
    return {{"feature_names", t.feature_names}, {"params", encode(t.params)}, {"cp_table", cp}, {"nodes", nodes}};
}

json encode(const RuleIndicator& r) {
    json j = {{"feature_name", r.feature_name},
              {"constant_label", r.constant_label},
              {"satisfied", r.satisfied},
              {"unsatisfied", r.unsatisfied},
              {"depth", r.depth}};
    j["rule"] = r.rule ? json{{"threshold", r.rule->threshold},
                              {"label_at_or_below", r.rule->label_at_or_below},
                              {"label_above", r.rule->label_above}}
                       : json(nullptr);
    return j;
}

json encode(const IndividualAnomalyIndicator& ind) {
    json j = {{"dimension_id", ind.dimension_id},
              {"empirical_risk", ind.empirical_risk},
              {"learner", learner_name(ind.model)}};
    j["model"] = std::visit([](const auto& m) { return encode(m); }, ind.model);
    return j;
}

json encode(const PcaModel& m) {
    const auto& s = m.standardization;
    json pairs = json::array();
    for (const auto& e : m.eigenpairs) pairs.push_back({{"value", e.value}, {"vector", e.vector}});
    return {{"standardization",
             {{"source_names", s.source_names},
              {"retained", s.retained},
              {"means", s.means},
              {"stddevs", s.stddevs},
              {"dropped", s.dropped}}},
            {"eigenpairs", pairs},
            {"selected_p", m.selected_p},
            {"feature_matrix", m.feature_matrix.to_rows()},
            {"feature_shape", {m.feature_matrix.rows(), m.feature_matrix.cols()}},
            {"component_names", m.component_names}};
}

json encode(const Dataset& d) {
    json starts = json::array(), features = json::array(), labels = json::array();
    for (const auto& o : d.observations()) {
        starts.push_back(o.window_start);
        features.push_back(o.features);
        labels.push_back(o.label);
    }
    return {{"names", d.names()},
            {"label_kind", to_string(d.label_kind())},
            {"window_starts", starts},
            {"features", features},
            {"labels", labels}};
}

json encode(const TrainConfig& c) {
    json policies = json::object();
    for (const auto& [k, v] : c.policies) policies[k] = to_string(v);
    json groups = json::array();
    for (const auto& g : c.groups) groups.push_back({{"name", g.name}, {"parameters", g.parameters}});
    const auto& l = c.learners;
    return {{"window_seconds", c.window_seconds},
            {"default_policy", to_string(c.default_policy)},
            {"policies", policies},
            {"label_policy", to_string(c.label_policy)},
            {"groups", groups},
            {"variability_threshold", c.variability_threshold},
            {"learners",
             {{"use_tree", l.use_tree},
              {"use_rule", l.use_rule},
              {"tree", encode(l.tree)},
              {"rule_max_depth", l.rule.max_depth},
              {"rule_unsatisfied_ratio", l.rule.unsatisfied_ratio},
              {"loss", to_string(l.loss)}}},
            {"global",
             {{"tree", encode(c.global.tree)},
              {"flag_threshold", c.global.flag_threshold},
              {"graded_afs", c.global.graded_afs}}}};
}

json encode(const DetectorModel& m) {
    json blocks = json::array();
    for (const auto& b : m.blocks) blocks.push_back({{"name", b.name}, {"parameters", b.parameters}, {"pca", encode(b.pca)}});
    json dims = json::array();
    for (const auto& d : m.dimensions) dims.push_back({{"name", d.name}, {"block", d.block}, {"components", d.components}});
    json inds = json::array();
    for (const auto& i : m.indicators) inds.push_back(encode(i));
    json candidates = json::array();
    for (const auto& per_dim : m.metadata.candidate_risks) {
        json row = json::array();
        for (const auto& c : per_dim) row.push_back({{"learner", c.learner}, {"risk", c.risk}});
        candidates.push_back(std::move(row));
    }
    return {{"parameters", m.parameters},
            {"config", encode(m.config)},
            {"blocks", blocks},
            {"dimensions", dims},
            {"indicators", inds},
            {"global",
             {{"dimensions", m.global.dimensions},
              {"flag_threshold", m.global.flag_threshold},
              {"tree", m.global.tree ? encode(*m.global.tree) : json(nullptr)}}},
            {"metadata",
             {{"observations", m.metadata.observations},
              {"benign", m.metadata.benign},
              {"anomalous", m.metadata.anomalous},
              {"candidate_risks", candidates},
              {"global_risk", m.metadata.global_risk},
              {"model_version", m.metadata.model_version}}},
            {"training_windows", encode(m.training_windows)}};
}

// --- decoding ----------------------------------------------------------------

template <class T>
std::optional<T> optional_of(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<T>();
}

TreeParams decode_tree_params(const json& j) {
    return {j.at("cp_min").get<double>(), j.at("min_split").get<std::size_t>(), j.at("max_depth").get<std::size_t>()};
}

TreeIndicator decode_tree(const json& j) {
    TreeIndicator t;
    t.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    t.params = decode_tree_params(j.at("params"));
    for (const auto& r : j.at("cp_table"))
        t.cp_table.push_back({r.at(0).get<double>(), r.at(1).get<std::size_t>(), r.at(2).get<double>()});
    for (const auto& n : j.at("nodes")) {
        TreeNode node;
        node.node_id = n.at("id").get<std::uint64_t>();
        node.class_counts = n.at("counts").get<std::array<std::size_t, 2>>();
        node.complexity = n.at("complexity").get<double>();
        if (const auto& s = n.at("split"); !s.is_null())
            node.split = Split{s.at("column").get<std::size_t>(), s.at("threshold").get<double>(),
                               s.at("improvement").get<double>()};
        node.left = optional_of<std::size_t>(n.at("left"));
        node.right = optional_of<std::size_t>(n.at("right"));
        t.nodes.push_back(node);
    }
    if (t.nodes.empty()) throw IntegrityError("tree without nodes");
    for (const auto& n : t.nodes) {
        if (n.split.has_value() != (n.left.has_value() && n.right.has_value()))
            throw IntegrityError("tree node with inconsistent children");
        if ((n.left && *n.left >= t.nodes.size()) || (n.right && *n.right >= t.nodes.size()))
            throw IntegrityError("tree child index out of range");
        if (n.split && n.split->column >= t.feature_names.size()) throw IntegrityError("split column out of range");
    }
    return t;
}

RuleIndicator decode_rule(const json& j) {
    RuleIndicator r;
    r.feature_name = j.at("feature_name").get<std::string>();
    r.constant_label = j.at("constant_label").get<double>();
    r.satisfied = j.at("satisfied").get<std::size_t>();
    r.unsatisfied = j.at("unsatisfied").get<std::size_t>();
    r.depth = j.at("depth").get<std::size_t>();
    if (const auto& rule = j.at("rule"); !rule.is_null())
        r.rule = ThresholdRule{rule.at("threshold").get<double>(), rule.at("label_at_or_below").get<double>(),
                               rule.at("label_above").get<double>()};
    return r;
}

IndividualAnomalyIndicator decode_indicator(const json& j) {
    IndividualAnomalyIndicator ind;
    ind.dimension_id = j.at("dimension_id").get<std::string>();
    ind.empirical_risk = j.at("empirical_risk").get<double>();
    const auto learner = j.at("learner").get<std::string>();
    if (learner == "tree") ind.model = decode_tree(j.at("model"));
    else if (learner == "rule") ind.model = decode_rule(j.at("model"));
    else throw IntegrityError(fmt::format("unknown learner '{}'", learner));
    return ind;
}

PcaModel decode_pca(const json& j) {
    PcaModel m;
    const auto& s = j.at("standardization");
    m.standardization.source_names = s.at("source_names").get<std::vector<std::string>>();
    m.standardization.retained = s.at("retained").get<std::vector<std::size_t>>();
    m.standardization.means = s.at("means").get<std::vector<double>>();
    m.standardization.stddevs = s.at("stddevs").get<std::vector<double>>();
    m.standardization.dropped = s.at("dropped").get<std::vector<std::string>>();
    for (const auto& e : j.at("eigenpairs"))
        m.eigenpairs.push_back({e.at("value").get<double>(), e.at("vector").get<std::vector<double>>()});
    m.selected_p = j.at("selected_p").get<std::size_t>();
    const auto shape = j.at("feature_shape").get<std::array<std::size_t, 2>>();
    const auto rows = j.at("feature_matrix").get<std::vector<std::vector<double>>>();
    m.feature_matrix = rows.empty() ? Matrix(shape[0], shape[1]) : Matrix::from_rows(rows);
    if (m.feature_matrix.rows() != shape[0] || m.feature_matrix.cols() != shape[1] || shape[1] != m.selected_p)
        throw IntegrityError("feature matrix shape does not match");
    m.component_names = j.at("component_names").get<std::vector<std::string>>();
    return m;
}

Dataset decode_dataset(const json& j) {
    const auto starts = j.at("window_starts").get<std::vector<std::int64_t>>();
    const auto features = j.at("features").get<std::vector<std::vector<double>>>();
    const auto labels = j.at("labels").get<std::vector<double>>();
    if (starts.size() != features.size() || starts.size() != labels.size())
        throw IntegrityError("training windows have ragged columns");
    std::vector<LabeledObservation> obs;
    obs.reserve(starts.size());
    for (std::size_t i = 0; i < starts.size(); ++i) obs.push_back({starts[i], features[i], labels[i]});
    const auto kind_text = j.at("label_kind").get<std::string>();
    LabelKind kind = LabelKind::none;
    if (kind_text == to_string(LabelKind::boolean)) kind = LabelKind::boolean;
    else if (kind_text == to_string(LabelKind::graded)) kind = LabelKind::graded;
    return Dataset(j.at("names").get<std::vector<std::string>>(), std::move(obs), kind);
}

LossKind parse_loss(const std::string& text) {
    if (text == to_string(LossKind::zero_one)) return LossKind::zero_one;
    if (text == to_string(LossKind::absolute)) return LossKind::absolute;
    throw IntegrityError(fmt::format("unknown loss '{}'", text));
}

TrainConfig decode_config(const json& j) {
    TrainConfig c;
    c.window_seconds = j.at("window_seconds").get<std::int64_t>();
    c.default_policy = parse_aggregation_policy(j.at("default_policy").get<std::string>());
    for (const auto& [k, v] : j.at("policies").items()) c.policies[k] = parse_aggregation_policy(v.get<std::string>());
    c.label_policy = parse_label_policy(j.at("label_policy").get<std::string>());
    for (const auto& g : j.at("groups"))
        c.groups.push_back({g.at("name").get<std::string>(), g.at("parameters").get<std::vector<std::string>>()});
    c.variability_threshold = j.at("variability_threshold").get<double>();
    const auto& l = j.at("learners");
    c.learners.use_tree = l.at("use_tree").get<bool>();
    c.learners.use_rule = l.at("use_rule").get<bool>();
    c.learners.tree = decode_tree_params(l.at("tree"));
    c.learners.rule.max_depth = l.at("rule_max_depth").get<std::size_t>();
    c.learners.rule.unsatisfied_ratio = l.at("rule_unsatisfied_ratio").get<double>();
    c.learners.loss = parse_loss(l.at("loss").get<std::string>());
    const auto& g = j.at("global");
    c.global.tree = decode_tree_params(g.at("tree"));
    c.global.flag_threshold = g.at("flag_threshold").get<double>();
    c.global.graded_afs = g.at("graded_afs").get<bool>();
    return c;
}

DetectorModel decode_model(const json& j) {
    DetectorModel m;
    m.parameters = j.at("parameters").get<std::vector<std::string>>();
    m.config = decode_config(j.at("config"));
    for (const auto& b : j.at("blocks"))
        m.blocks.push_back({b.at("name").get<std::string>(), b.at("parameters").get<std::vector<std::size_t>>(),
                            decode_pca(b.at("pca"))});
    for (const auto& d : j.at("dimensions"))
        m.dimensions.push_back({d.at("name").get<std::string>(), d.at("block").get<std::size_t>(),
                                d.at("components").get<std::vector<std::size_t>>()});
    for (const auto& i : j.at("indicators")) m.indicators.push_back(decode_indicator(i));
    const auto& g = j.at("global");
    m.global.dimensions = g.at("dimensions").get<std::vector<std::string>>();
    m.global.flag_threshold = g.at("flag_threshold").get<double>();
    if (!g.at("tree").is_null()) m.global.tree = decode_tree(g.at("tree"));
    const auto& md = j.at("metadata");
    m.metadata.observations = md.at("observations").get<std::size_t>();
    m.metadata.benign = md.at("benign").get<std::size_t>();
    m.metadata.anomalous = md.at("anomalous").get<std::size_t>();
    for (const auto& row : md.at("candidate_risks")) {
        std::vector<CandidateRisk> per_dim;
        for (const auto& c : row) per_dim.push_back({c.at("learner").get<std::string>(), c.at("risk").get<double>()});
        m.metadata.candidate_risks.push_back(std::move(per_dim));
    }
    m.metadata.global_risk = md.at("global_risk").get<double>();
    m.metadata.model_version = md.at("model_version").get<std::uint64_t>();
    m.training_windows = decode_dataset(j.at("training_windows"));

    if (m.indicators.size() != m.dimensions.size() || m.global.dimensions.size() != m.dimensions.size())
        throw IntegrityError("model has mismatched dimension counts");
    for (const auto& b : m.blocks)
        for (auto p : b.parameters)
            if (p >= m.parameters.size()) throw IntegrityError("block parameter index out of range");
    for (const auto& d : m.dimensions) {
        if (d.block >= m.blocks.size()) throw IntegrityError("dimension block index out of range");
        for (auto c : d.components)
            if (c >= m.blocks[d.block].pca.selected_p) throw IntegrityError("dimension component out of range");
    }
    return m;
}

std::uint32_t checksum(std::string_view body) {
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
}

}  // namespace

std::string serialize_model(const DetectorModel& model) {
    const std::string body = encode(model).dump(1) + "\n";
    return fmt::format("{} version={} crc32={:08x}\n{}", kMagic, kModelFormatVersion, checksum(body), body);
}

DetectorModel deserialize_model(std::string_view text) {
    const auto eol = text.find('\n');
    if (eol == std::string_view::npos) throw IntegrityError("model file is truncated (no header line)");
    const auto header = detail::tokens(text.substr(0, eol));
    if (header.size() != 3 || header[0] != kMagic) throw IntegrityError("not a model file (bad header)");

    auto field = [&](std::string_view token, std::string_view key) -> std::string_view {
        if (token.substr(0, key.size() + 1) != fmt::format("{}=", key))
            throw IntegrityError(fmt::format("model header lacks '{}'", key));
        return token.substr(key.size() + 1);
    };
    const auto version_text = field(header[1], "version");
    int version = 0;
    try {
        std::size_t used = 0;
        version = std::stoi(std::string(version_text), &used);
        if (used != version_text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw IntegrityError(fmt::format("unreadable format version '{}'", version_text));
    }
    if (version != kModelFormatVersion) throw FormatVersionError(kModelFormatVersion, version);

    const auto crc_text = field(header[2], "crc32");
    std::uint32_t expected = 0;
    try {
        std::size_t used = 0;
        expected = static_cast<std::uint32_t>(std::stoul(std::string(crc_text), &used, 16));
        if (used != crc_text.size() || crc_text.size() != 8) throw std::invalid_argument("width");
    } catch (const std::exception&) {
        throw IntegrityError(fmt::format("unreadable checksum '{}'", crc_text));
    }
    const auto body = text.substr(eol + 1);
    if (const auto actual = checksum(body); actual != expected)
        throw IntegrityError(fmt::format("model checksum mismatch: header says {:08x}, body hashes to {:08x}",
                                         expected, actual));
    try {
        return decode_model(json::parse(body));
    } catch (const json::exception& e) {
        throw IntegrityError(fmt::format("malformed model body: {}", e.what()));
    } catch (const IntegrityError&) {
        throw;
    } catch (const Error& e) {
        throw IntegrityError(fmt::format("invalid model body: {}", e.what()));
    }
}

std::string serialize_indicator(const IndividualAnomalyIndicator& indicator) {
    return encode(indicator).dump();
}

void persist(const DetectorModel& model, const std::filesystem::path& path) {
    const auto text = serialize_model(model);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ArgumentError(fmt::format("cannot write model to '{}'", path.string()));
        out << text;
        if (!out.flush()) throw ArgumentError(fmt::format("failed writing model to '{}'", path.string()));
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw ArgumentError(fmt::format("cannot move model into '{}': {}", path.string(), ec.message()));
}

DetectorModel load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError(fmt::format("cannot open model '{}'", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_model(buf.str());
}

}  // namespace mdids
