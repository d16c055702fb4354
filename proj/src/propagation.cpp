#include "mdids/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <sstream>

#include <fmt/format.h>

#include "mdids/error.hpp"
#include "random.hpp"
#include "text.hpp"

namespace mdids {

// ---------------------------------------------------------------------------
// Topology

void Topology::add_node(const std::string& id) {
    if (id.empty()) throw ArgumentError("node id must not be empty");
    adjacency_[id];
}

void Topology::add_edge(const std::string& a, const std::string& b) {
    if (a == b) throw ArgumentError(fmt::format("self-loop on node '{}'", a));
    add_node(a);
    add_node(b);
    if (adjacency_[a].insert(b).second) {
        adjacency_[b].insert(a);
        ++edges_;
    }
}

std::vector<std::string> Topology::nodes() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : adjacency_) out.push_back(id);
    return out;
}

const std::set<std::string>& Topology::neighbors(const std::string& id) const {
    auto it = adjacency_.find(id);
    if (it == adjacency_.end()) throw ArgumentError(fmt::format("unknown node '{}'", id));
    return it->second;
}

std::optional<std::size_t> Topology::distance(const std::string& from, const std::string& to) const {
    if (!contains(from) || !contains(to)) return std::nullopt;
    std::map<std::string, std::size_t> dist{{from, 0}};
    std::queue<std::string> queue;
    queue.push(from);
    while (!queue.empty()) {
        auto cur = queue.front();
        queue.pop();
        if (cur == to) return dist[cur];
        for (const auto& nb : adjacency_.at(cur))
            if (dist.emplace(nb, dist[cur] + 1).second) queue.push(nb);
    }
    return std::nullopt;
}

namespace {

bool skippable(std::string_view line) {
    const auto t = detail::trim(line);
    return t.empty() || t.front() == '#';
}

}  // namespace

Topology parse_topology(std::istream& in) {
    Topology topology;
    std::vector<ParseIssue> issues;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (skippable(line)) continue;
        const auto tok = detail::tokens(line);
        if (tok.size() != 2) {
            issues.push_back({lineno, 0, fmt::format("expected 'nodeA nodeB', got {} fields", tok.size())});
            continue;
        }
        if (tok[0] == tok[1]) {
            issues.push_back({lineno, 0, fmt::format("self-loop on node '{}'", tok[0])});
            continue;
        }
        topology.add_edge(std::string(tok[0]), std::string(tok[1]));
    }
    if (!issues.empty()) throw ParseError(std::move(issues));
    return topology;
}

// ---------------------------------------------------------------------------
// Fragmentation

std::vector<Fragment> fragment_message(std::span<const std::uint8_t> message, std::size_t m, std::uint64_t seed,
                                       std::uint64_t message_id) {
    if (m < 2) throw ArgumentError(fmt::format("fragment count must be at least 2, got {}", m));
    detail::Rng rng(seed);
    std::vector<Fragment> out;
    out.reserve(m);
    std::vector<std::uint8_t> last(message.begin(), message.end());
    for (std::size_t k = 1; k < m; ++k) {
        Fragment f{message_id, k, m, std::vector<std::uint8_t>(message.size())};
        for (std::size_t i = 0; i < message.size(); ++i) {
            f.payload[i] = static_cast<std::uint8_t>(rng.next() >> 56);
            last[i] ^= f.payload[i];
        }
        out.push_back(std::move(f));
    }
    out.push_back({message_id, m, m, std::move(last)});
    return out;
}

std::vector<std::uint8_t> reassemble(std::span<const Fragment> fragments) {
    if (fragments.empty()) throw ContractError("no fragments to reassemble");
    const auto id = fragments.front().message_id;
    const auto total = fragments.front().total;
    const auto length = fragments.front().payload.size();
    std::vector<bool> seen(total + 1, false);
    for (const auto& f : fragments) {
        if (f.message_id != id)
            throw ContractError(fmt::format("fragments of messages {} and {} mixed", id, f.message_id));
        if (f.total != total) throw ContractError(fmt::format("message {} has inconsistent fragment totals", id));
        if (f.index < 1 || f.index > total)
            throw ContractError(fmt::format("fragment index {} outside 1..{}", f.index, total));
        if (seen[f.index]) throw ContractError(fmt::format("fragment {} of message {} given twice", f.index, id));
        if (f.payload.size() != length) throw ContractError(fmt::format("message {} has unequal fragment lengths", id));
        seen[f.index] = true;
    }
    std::vector<std::size_t> missing;
    for (std::size_t k = 1; k <= total; ++k)
        if (!seen[k]) missing.push_back(k);
    if (!missing.empty()) throw IncompleteMessageError(std::move(missing));

    std::vector<std::uint8_t> out(length, 0);
    for (const auto& f : fragments)
        for (std::size_t i = 0; i < length; ++i) out[i] ^= f.payload[i];
    return out;
}

// ---------------------------------------------------------------------------
// Indicator adoption

AdoptionDecision adopt_indicator(const DetectorModel& local, const DetectorModel& received, const Dataset& validation) {
    AdoptionDecision d;
    d.local_risk = global_risk(local, validation);
    if (received.parameters != local.parameters || received.global.dimensions != local.global.dimensions) {
        d.received_risk = std::numeric_limits<double>::quiet_NaN();
        d.reason = "schema";
        return d;
    }
    d.received_risk = global_risk(received, validation);
    d.adopted = d.received_risk < d.local_risk;
    d.reason = d.adopted ? "lower-risk" : "not-lower";
    return d;
}

// ---------------------------------------------------------------------------
// Event script

std::vector<DetectionEvent> parse_event_script(std::istream& in) {
    std::vector<DetectionEvent> events;
    std::vector<ParseIssue> issues;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (skippable(line)) continue;
        const auto fields = detail::split(detail::trim(line), ',');
        if (first && fields.size() == 3 && detail::trim(fields[0]) == "round") {
            first = false;
            continue;
        }
        first = false;
        if (fields.size() != 3) {
            issues.push_back({lineno, 0, fmt::format("expected 'round,node,source', got {} fields", fields.size())});
            continue;
        }
        const auto round_text = detail::trim(fields[0]);
        const auto node = detail::trim(fields[1]);
        const auto source = detail::trim(fields[2]);
        const auto round = detail::parse_double(round_text);
        if (!round || *round < 0 || *round != static_cast<double>(static_cast<std::size_t>(*round))) {
            issues.push_back({lineno, 1, fmt::format("round '{}' is not a non-negative integer", round_text)});
            continue;
        }
        if (node.empty() || detail::tokens(node).size() != 1) {
            issues.push_back({lineno, 2, "node id must be a single non-empty token"});
            continue;
        }
        if (source.empty() || detail::tokens(source).size() != 1) {
            issues.push_back({lineno, 3, "source must be a single non-empty token"});
            continue;
        }
        events.push_back({static_cast<std::size_t>(*round), std::string(node), std::string(source)});
    }
    if (!issues.empty()) throw ParseError(std::move(issues));
    return events;
}

// ---------------------------------------------------------------------------
// Simulation

std::string format_event(const TraceEvent& event) {
    std::string out = fmt::format("round={} event={}", event.round, event.kind);
    for (const auto& [k, v] : event.fields) out += fmt::format(" {}={}", k, v);
    return out;
}

RoundStats& RoundStats::operator+=(const RoundStats& o) {
    messages_sent += o.messages_sent;
    messages_lost += o.messages_lost;
    fragments_dropped += o.fragments_dropped;
    list_updates += o.list_updates;
    adoptions += o.adoptions;
    return *this;
}

Simulation make_simulation(Topology topology, const std::map<std::string, NodeSetup>& setups,
                           std::vector<DetectionEvent> script, const SimulationConfig& config) {
    if (!(config.p_loss >= 0.0 && config.p_loss <= 1.0))
        throw ArgumentError(fmt::format("p_loss must lie in [0, 1], got {}", config.p_loss));
    if (config.fragments < 2) throw ArgumentError(fmt::format("fragment count must be at least 2, got {}", config.fragments));
    for (const auto& e : script) {
        if (!topology.contains(e.node))
            throw ScriptError(fmt::format("event at round {} names unknown node '{}'", e.round, e.node));
        if (e.round >= config.rounds)
            throw ScriptError(fmt::format("event at round {} lies outside rounds 0..{}", e.round,
                                          config.rounds == 0 ? 0 : config.rounds - 1));
    }
    for (const auto& [id, setup] : setups) {
        if (!topology.contains(id)) throw ScriptError(fmt::format("node settings given for unknown node '{}'", id));
        if (setup.validation && !setup.model)
            throw ContractError(fmt::format("node '{}' has validation data but no model", id));
        if (setup.validation) {
            if (setup.validation->label_kind() != LabelKind::boolean)
                throw ContractError(fmt::format("validation data of node '{}' needs boolean labels", id));
            if (setup.validation->names() != setup.model->parameters)
                throw SchemaError(fmt::format("validation data of node '{}' does not match its model", id));
        }
    }

    Simulation sim;
    sim.config = config;
    sim.script = std::move(script);
    for (const auto& id : topology.nodes()) {
        NodeState node;
        node.id = id;
        if (auto it = setups.find(id); it != setups.end()) {
            node.model = it->second.model;
            node.validation = it->second.validation;
        }
        if (node.model) node.indicator_owed = topology.neighbors(id);
        sim.nodes.emplace(id, std::move(node));
    }
    sim.topology = std::move(topology);
    return sim;
}

namespace {

struct Message {
    std::string from;
    std::vector<MaliciousEntry> entries;
    std::string model_text;
};

std::vector<std::uint8_t> encode_message(const Message& msg) {
    std::string text = fmt::format("from {}\n", msg.from);
    for (const auto& e : msg.entries)
        text += fmt::format("entry {} {} {}\n", e.source, e.first_seen_round, e.reporting_node);
    if (!msg.model_text.empty()) text += "model\n" + msg.model_text;
    return {text.begin(), text.end()};
}

Message decode_message(const std::vector<std::uint8_t>& bytes) {
    const std::string text(bytes.begin(), bytes.end());
    Message msg;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto eol = text.find('\n', pos);
        const auto line = std::string_view(text).substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        pos = eol == std::string::npos ? text.size() : eol + 1;
        if (line == "model") {
            msg.model_text = text.substr(pos);
            break;
        }
        const auto tok = detail::tokens(line);
        if (tok.size() == 2 && tok[0] == "from") {
            msg.from = tok[1];
        } else if (tok.size() == 4 && tok[0] == "entry") {
            msg.entries.push_back({std::string(tok[1]), std::stoul(std::string(tok[2])), std::string(tok[3])});
        } else {
            throw IntegrityError(fmt::format("malformed message line '{}'", line));
        }
    }
    return msg;
}

std::string risk_text(double r) {
    return std::isnan(r) ? "nan" : fmt::format("{}", r);
}

}  // namespace

RoundTrace propagate_round(Simulation& s, std::uint64_t seed) {
    RoundTrace trace;
    const std::size_t r = s.round;
    trace.round = r;
    auto emit = [&](std::string kind, std::vector<std::pair<std::string, std::string>> fields) {
        trace.events.push_back({r, std::move(kind), std::move(fields)});
    };
    detail::Rng link(detail::mix_seed(seed, r));

    // sends use only what each node held at the start of the round
    for (auto& [id, node] : s.nodes) {
        std::optional<std::string> model_text;
        for (const auto& nb : s.topology.neighbors(id)) {
            Message msg{id, {}, {}};
            auto& sent = node.delivered[nb];
            for (const auto& [source, entry] : node.malicious) {
                auto from = node.learned_from.find(source);
                if (sent.count(source) || (from != node.learned_from.end() && from->second == nb)) continue;
                msg.entries.push_back(entry);
            }
            const bool with_model = s.config.exchange_indicators && node.model && node.indicator_owed.count(nb);
            if (msg.entries.empty() && !with_model) continue;
            if (with_model) {
                if (!model_text) {
                    DetectorModel shared = *node.model;
                    shared.training_windows = Dataset();
                    model_text = serialize_model(shared);
                }
                msg.model_text = *model_text;
            }

            const auto message_id = s.next_message_id++;
            auto fragments = fragment_message(encode_message(msg), s.config.fragments,
                                              detail::mix_seed(seed, r, message_id), message_id);
            std::size_t dropped = 0;
            for (std::size_t k = 0; k < fragments.size(); ++k)
                if (link.uniform() < s.config.p_loss) ++dropped;
            ++trace.stats.messages_sent;
            emit("send", {{"from", id},
                          {"to", nb},
                          {"message", std::to_string(message_id)},
                          {"fragments", std::to_string(fragments.size())},
                          {"entries", std::to_string(msg.entries.size())},
                          {"indicator", with_model ? "1" : "0"}});
            if (dropped > 0) {
                ++trace.stats.messages_lost;
                trace.stats.fragments_dropped += dropped;
                emit("drop", {{"from", id},
                              {"to", nb},
                              {"message", std::to_string(message_id)},
                              {"dropped", std::to_string(dropped)}});
                continue;
            }
            for (const auto& e : msg.entries) sent.insert(e.source);
            if (with_model) node.indicator_owed.erase(nb);
            auto& inbox = s.nodes.at(nb).inbox;
            inbox.insert(inbox.end(), fragments.begin(), fragments.end());
        }
    }

    // deliveries
    for (auto& [id, node] : s.nodes) {
        std::map<std::uint64_t, std::vector<Fragment>> messages;
        for (auto& f : node.inbox) messages[f.message_id].push_back(std::move(f));
        node.inbox.clear();
        for (const auto& [message_id, fragments] : messages) {
            const auto msg = decode_message(reassemble(fragments));
            for (const auto& e : msg.entries) {
                if (node.malicious.count(e.source)) continue;
                node.malicious.emplace(e.source, MaliciousEntry{e.source, r, e.reporting_node});
                node.learned_from[e.source] = msg.from;
                ++trace.stats.list_updates;
                emit("learn", {{"node", id}, {"source", e.source}, {"from", msg.from}, {"reporter", e.reporting_node}});
            }
            if (msg.model_text.empty()) continue;
            if (!node.model || !node.validation) {
                emit("indicator", {{"node", id}, {"from", msg.from}, {"decision", "ignored"}, {"reason", "no-validation"}});
                continue;
            }
            auto received = deserialize_model(msg.model_text);
            const auto decision = adopt_indicator(*node.model, received, *node.validation);
            node.adoptions.push_back({r, msg.from, decision});
            emit("indicator", {{"node", id},
                               {"from", msg.from},
                               {"decision", decision.adopted ? "adopted" : "kept"},
                               {"reason", decision.reason},
                               {"local_risk", risk_text(decision.local_risk)},
                               {"received_risk", risk_text(decision.received_risk)}});
            if (decision.adopted) {
                received.training_windows = std::move(node.model->training_windows);
                node.model = std::move(received);
                node.indicator_owed = s.topology.neighbors(id);
                ++trace.stats.adoptions;
            }
        }
    }

    // this round's detections go out next round
    for (const auto& e : s.script) {
        if (e.round != r) continue;
        auto& node = s.nodes.at(e.node);
        const bool fresh = node.malicious.emplace(e.source, MaliciousEntry{e.source, r, e.node}).second;
        if (fresh) ++trace.stats.list_updates;
        emit("detect", {{"node", e.node}, {"source", e.source}, {"new", fresh ? "1" : "0"}});
    }

    emit("summary", {{"messages", std::to_string(trace.stats.messages_sent)},
                     {"lost", std::to_string(trace.stats.messages_lost)},
                     {"dropped", std::to_string(trace.stats.fragments_dropped)},
                     {"updates", std::to_string(trace.stats.list_updates)},
                     {"adoptions", std::to_string(trace.stats.adoptions)}});
    ++s.round;
    return trace;
}

SimulationResult simulate(Topology topology, const std::map<std::string, NodeSetup>& setups,
                          std::vector<DetectionEvent> script, const SimulationConfig& config) {
    auto sim = make_simulation(std::move(topology), setups, std::move(script), config);
    SimulationResult result;
    for (std::size_t r = 0; r < config.rounds; ++r) {
        result.rounds.push_back(propagate_round(sim, config.seed));
        result.totals += result.rounds.back().stats;
    }
    result.nodes = std::move(sim.nodes);
    return result;
}

std::optional<std::size_t> arrival_round(const SimulationResult& result, const std::string& node,
                                         const std::string& source) {
    auto it = result.nodes.find(node);
    if (it == result.nodes.end()) return std::nullopt;
    auto entry = it->second.malicious.find(source);
    if (entry == it->second.malicious.end()) return std::nullopt;
    return entry->second.first_seen_round;
}

void write_trace(std::ostream& out, const SimulationResult& result) {
    for (const auto& round : result.rounds)
        for (const auto& e : round.events) out << format_event(e) << '\n';
}

}  // namespace mdids
