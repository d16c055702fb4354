#pragma once

// Flat `key = value` configuration with `#` comments.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "mdids/engine.hpp"
#include "mdids/propagation.hpp"

namespace mdids {

inline constexpr std::uint64_t kDefaultSeed = 42;

struct NodeFiles {
    std::filesystem::path model;
    std::filesystem::path validation;
};

struct Config {
    TrainConfig train;
    std::string label_column = "label";
    DetectOptions detect;
    FeedbackConfig feedback;
    SimulationConfig simulation;
    std::uint64_t seed = kDefaultSeed;
    std::map<std::string, NodeFiles> nodes;  // per-node files for simulate

    /// Copies `seed` into the feedback and simulation settings.
    void set_seed(std::uint64_t value);
};

/// Every value is range-checked; problems raise ArgumentError naming the line.
/// Relative node paths are resolved against `base_dir`.
Config parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

}  // namespace mdids
