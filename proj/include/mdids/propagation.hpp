#pragma once

// Round-synchronous simulation of detector nodes that share malicious-source
// lists and anomaly indicators with their immediate neighbors. Messages are
// split into XOR fragments in transit and links may drop fragments.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdids/dataset.hpp"
#include "mdids/engine.hpp"

namespace mdids {

/// Undirected graph without self-loops.
class Topology {
public:
    void add_node(const std::string& id);
    /// Throws ArgumentError for a self-loop. Repeated edges are ignored.
    void add_edge(const std::string& a, const std::string& b);

    bool contains(const std::string& id) const { return adjacency_.count(id) != 0; }
    std::vector<std::string> nodes() const;                         // sorted
    const std::set<std::string>& neighbors(const std::string& id) const;
    std::size_t edge_count() const noexcept { return edges_; }
    /// Hop distance, empty when unreachable.
    std::optional<std::size_t> distance(const std::string& from, const std::string& to) const;

private:
    std::map<std::string, std::set<std::string>> adjacency_;
    std::size_t edges_ = 0;
};

/// One `nodeA nodeB` pair per line; blank lines and `#` comments are skipped.
Topology parse_topology(std::istream& in);

struct MaliciousEntry {
    std::string source;
    std::size_t first_seen_round = 0;
    std::string reporting_node;

    bool operator==(const MaliciousEntry&) const = default;
};

struct Fragment {
    std::uint64_t message_id = 0;
    std::size_t index = 1;  // 1-based
    std::size_t total = 2;
    std::vector<std::uint8_t> payload;

    bool operator==(const Fragment&) const = default;
};

/// Fragments 1..m-1 are random pads drawn from `seed`; fragment m is the
/// message XOR every pad. Throws ArgumentError when m < 2.
std::vector<Fragment> fragment_message(std::span<const std::uint8_t> message, std::size_t m, std::uint64_t seed,
                                       std::uint64_t message_id = 0);
/// XOR of every payload. Missing indices raise IncompleteMessageError.
std::vector<std::uint8_t> reassemble(std::span<const Fragment> fragments);

struct AdoptionDecision {
    bool adopted = false;
    double local_risk = 0.0;
    double received_risk = 0.0;
    std::string reason;  // lower-risk, not-lower or schema
};

/// Adopt only when the received model has strictly lower risk on the local
/// validation windows. Models over other parameters or dimensions are refused.
AdoptionDecision adopt_indicator(const DetectorModel& local, const DetectorModel& received, const Dataset& validation);

struct AdoptionRecord {
    std::size_t round = 0;
    std::string from;
    AdoptionDecision decision;
};

struct NodeState {
    std::string id;
    std::optional<DetectorModel> model;
    std::optional<Dataset> validation;  // labeled windows for adoption decisions
    std::map<std::string, MaliciousEntry> malicious;  // keyed by source
    std::map<std::string, std::string> learned_from;  // source -> neighbor
    std::map<std::string, std::set<std::string>> delivered;  // neighbor -> sources it got from us
    std::set<std::string> indicator_owed;  // neighbors still owed our current model
    std::vector<Fragment> inbox;
    std::vector<AdoptionRecord> adoptions;
};

struct NodeSetup {
    std::optional<DetectorModel> model;
    std::optional<Dataset> validation;
};

struct DetectionEvent {
    std::size_t round = 0;
    std::string node;
    std::string source;

    bool operator==(const DetectionEvent&) const = default;
};

/// `round,node,source` per line; an optional header line naming those
/// columns, blank lines and `#` comments are skipped.
std::vector<DetectionEvent> parse_event_script(std::istream& in);

struct SimulationConfig {
    double p_loss = 0.0;
    std::size_t fragments = 2;
    std::size_t rounds = 10;
    std::uint64_t seed = 42;
    bool exchange_indicators = true;
};

struct TraceEvent {
    std::size_t round = 0;
    std::string kind;
    std::vector<std::pair<std::string, std::string>> fields;
};

/// `round=R event=KIND key=value ...`
std::string format_event(const TraceEvent& event);

struct RoundStats {
    std::size_t messages_sent = 0;
    std::size_t messages_lost = 0;
    std::size_t fragments_dropped = 0;
    std::size_t list_updates = 0;
    std::size_t adoptions = 0;

    RoundStats& operator+=(const RoundStats& other);
};

struct RoundTrace {
    std::size_t round = 0;
    std::vector<TraceEvent> events;
    RoundStats stats;
};

struct Simulation {
    Topology topology;
    SimulationConfig config;
    std::map<std::string, NodeState> nodes;
    std::vector<DetectionEvent> script;
    std::size_t round = 0;  // next round to run
    std::uint64_t next_message_id = 1;
};

/// Validates the script (ScriptError) and node setups before any round runs.
Simulation make_simulation(Topology topology, const std::map<std::string, NodeSetup>& setups,
                           std::vector<DetectionEvent> script, const SimulationConfig& config);

/// Runs one round: sends, then deliveries, then the round's detections, so a
/// detection in round r reaches a node at distance d in round r + d at best.
RoundTrace propagate_round(Simulation& state, std::uint64_t seed);

struct SimulationResult {
    std::vector<RoundTrace> rounds;
    std::map<std::string, NodeState> nodes;
    RoundStats totals;
};

SimulationResult simulate(Topology topology, const std::map<std::string, NodeSetup>& setups,
                          std::vector<DetectionEvent> script, const SimulationConfig& config);

/// Round at which `node` first listed `source`, if ever.
std::optional<std::size_t> arrival_round(const SimulationResult& result, const std::string& node,
                                         const std::string& source);

void write_trace(std::ostream& out, const SimulationResult& result);

}  // namespace mdids
