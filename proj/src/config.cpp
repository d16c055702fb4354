#include "mdids/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>

#include <fmt/format.h>

#include "mdids/error.hpp"
#include "text.hpp"

namespace mdids {

void Config::set_seed(std::uint64_t value) {
    seed = value;
    feedback.seed = value;
    simulation.seed = value;
}

namespace {

class LineReader {
public:
    LineReader(std::size_t line, std::string key, std::string_view value)
        : line_(line), key_(std::move(key)), value_(value) {}

    [[noreturn]] void fail(std::string_view why) const {
        throw ArgumentError(fmt::format("config line {}: {} {}", line_, key_, why));
    }

    double number(double lo, double hi, bool lo_open = false, bool hi_open = false) const {
        auto v = detail::parse_double(value_);
        if (!v) fail(fmt::format("expects a number, got '{}'", value_));
        if ((lo_open ? *v <= lo : *v < lo) || (hi_open ? *v >= hi : *v > hi))
            fail(fmt::format("must lie in {}{}, {}{}, got {}", lo_open ? "(" : "[", lo, hi, hi_open ? ")" : "]", *v));
        return *v;
    }

    std::uint64_t unsigned_integer(std::uint64_t lo, std::uint64_t hi = UINT64_MAX) const {
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(value_.data(), value_.data() + value_.size(), v);
        if (ec != std::errc{} || ptr != value_.data() + value_.size())
            fail(fmt::format("expects a non-negative integer, got '{}'", value_));
        if (v < lo || v > hi) fail(fmt::format("must lie in [{}, {}], got {}", lo, hi, v));
        return v;
    }

    bool boolean() const {
        if (value_ == "true" || value_ == "1" || value_ == "yes") return true;
        if (value_ == "false" || value_ == "0" || value_ == "no") return false;
        fail(fmt::format("expects true or false, got '{}'", value_));
    }

    std::string text() const {
        if (value_.empty()) fail("needs a value");
        return std::string(value_);
    }

    std::vector<std::string> list() const {
        std::vector<std::string> out;
        for (auto item : detail::split(value_, ',')) {
            item = detail::trim(item);
            if (item.empty()) fail("has an empty list item");
            out.emplace_back(item);
        }
        return out;
    }

    template <class F>
    auto wrap(F&& parse) const {
        try {
            return parse(value_);
        } catch (const ArgumentError& e) {
            fail(e.what());
        }
    }

private:
    std::size_t line_;
    std::string key_;
    std::string_view value_;
};

}  // namespace

Config parse_config(std::istream& in, const std::filesystem::path& base_dir) {
    Config c;
    std::string raw;
    std::size_t lineno = 0;
    bool seen_seed = false;
    std::map<std::string, std::size_t> seen;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };

    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ArgumentError(fmt::format("config line {}: expected 'key = value'", lineno));
        const std::string key(detail::trim(line.substr(0, eq)));
        const auto value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ArgumentError(fmt::format("config line {}: missing key", lineno));
        if (auto [it, fresh] = seen.emplace(key, lineno); !fresh)
            throw ArgumentError(fmt::format("config line {}: {} already set on line {}", lineno, key, it->second));
        const LineReader v(lineno, key, value);
        auto& t = c.train;

        if (key == "window_seconds") t.window_seconds = static_cast<std::int64_t>(v.unsigned_integer(1, INT32_MAX));
        else if (key == "aggregation.default") t.default_policy = v.wrap(parse_aggregation_policy);
        else if (key.starts_with("aggregation.")) t.policies[key.substr(12)] = v.wrap(parse_aggregation_policy);
        else if (key == "label_policy") t.label_policy = v.wrap(parse_label_policy);
        else if (key == "label_column") c.label_column = v.text();
        else if (key.starts_with("group.") && key.size() > 6) t.groups.push_back({key.substr(6), v.list()});
        else if (key == "variability_threshold") t.variability_threshold = v.number(0, 100, true);
        else if (key == "tree.cp_min") t.learners.tree.cp_min = v.number(0, 1, true);
        else if (key == "tree.min_split") t.learners.tree.min_split = v.unsigned_integer(2);
        else if (key == "tree.max_depth") t.learners.tree.max_depth = v.unsigned_integer(1, 30);
        else if (key == "rule.max_depth") t.learners.rule.max_depth = v.unsigned_integer(1, 1000);
        else if (key == "rule.unsatisfied_ratio") t.learners.rule.unsatisfied_ratio = v.number(0, 1, false, true);
        else if (key == "learners") {
            t.learners.use_tree = t.learners.use_rule = false;
            for (const auto& name : v.list()) {
                if (name == "tree") t.learners.use_tree = true;
                else if (name == "rule") t.learners.use_rule = true;
                else v.fail(fmt::format("names unknown learner '{}'", name));
            }
        } else if (key == "loss") {
            const auto name = v.text();
            if (name == "zero-one") t.learners.loss = LossKind::zero_one;
            else if (name == "absolute") t.learners.loss = LossKind::absolute;
            else v.fail(fmt::format("must be zero-one or absolute, got '{}'", name));
        } else if (key == "global.threshold") t.global.flag_threshold = v.number(0, 1);
        else if (key == "global.graded_afs") t.global.graded_afs = v.boolean();
        else if (key == "global.min_split") t.global.tree.min_split = v.unsigned_integer(2);
        else if (key == "global.cp_min") t.global.tree.cp_min = v.number(0, 1, true);
        else if (key == "feedback.min_batch") c.feedback.min_batch = v.unsigned_integer(1);
        else if (key == "feedback.holdout_fraction") c.feedback.holdout_fraction = v.number(0, 1, true, true);
        else if (key == "detect.lag_windows") c.detect.lag_windows = v.unsigned_integer(0, 1000000);
        else if (key == "sim.p_loss") c.simulation.p_loss = v.number(0, 1);
        else if (key == "sim.fragments") c.simulation.fragments = v.unsigned_integer(2, 64);
        else if (key == "sim.rounds") c.simulation.rounds = v.unsigned_integer(1, 1000000);
        else if (key == "sim.exchange_indicators") c.simulation.exchange_indicators = v.boolean();
        else if (key == "seed") {
            c.seed = v.unsigned_integer(0);
            seen_seed = true;
        } else if (key.starts_with("node.") && key.ends_with(".model") && key.size() > 11)
            c.nodes[key.substr(5, key.size() - 11)].model = resolve(v.text());
        else if (key.starts_with("node.") && key.ends_with(".validation") && key.size() > 16)
            c.nodes[key.substr(5, key.size() - 16)].validation = resolve(v.text());
        else throw ArgumentError(fmt::format("config line {}: unknown key '{}'", lineno, key));
    }
    for (std::size_t i = 0; i < c.train.groups.size(); ++i)
        for (std::size_t j = i + 1; j < c.train.groups.size(); ++j)
            if (c.train.groups[i].name == c.train.groups[j].name)
                throw ArgumentError(fmt::format("feature group '{}' defined twice", c.train.groups[i].name));
    if (!c.train.learners.use_tree && !c.train.learners.use_rule) throw ArgumentError("learners must name at least one");
    c.set_seed(seen_seed ? c.seed : kDefaultSeed);
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError(fmt::format("cannot open config '{}'", path.string()));
    return parse_config(in, path.parent_path());
}

}  // namespace mdids
