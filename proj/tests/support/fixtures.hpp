#pragma once

// Synthetic datasets shared by the unit and acceptance tests.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mdids/dataset.hpp"

namespace fixtures {

inline constexpr std::size_t kFloodWindows = 1586;
inline constexpr std::size_t kFloodAttacks = 343;

/// One record per second: udp_bytes and cpu_cycles, label 1 during flood
/// bursts. Benign traffic stays under 16000 bytes/s, floods exceed 53000.
mdids::RecordTable udp_flood_records(std::uint64_t seed = 7, std::size_t windows = kFloodWindows,
                                     std::size_t attacks = kFloodAttacks, std::int64_t start = 0);
mdids::Dataset udp_flood_windows(std::uint64_t seed = 7, std::size_t windows = kFloodWindows,
                                 std::size_t attacks = kFloodAttacks, std::int64_t start = 0);

/// Same records with every label flipped.
mdids::RecordTable inverted(mdids::RecordTable table);

std::string to_csv(const mdids::RecordTable& table, bool with_label = true);

/// The seven transformed values of the worked sequential-covering example.
mdids::Dataset covering_example();

/// Two columns whose sample correlation is exactly `r` (up to rounding).
mdids::Dataset correlated_pair(std::size_t n, double r, std::uint64_t seed);

/// One column, `benign` zeros below `anomalous` ones, fully separable.
mdids::Dataset separable_column(std::size_t benign, std::size_t anomalous, std::uint64_t seed = 3);

/// Rate and protocol dimensions; the label is 1 exactly when both are high.
struct Conjunction {
    mdids::Dataset rate;
    mdids::Dataset proto;
};
Conjunction conjunction_dimensions(std::uint64_t seed = 11);

/// Labeled one-column dataset with random values and labels.
mdids::Dataset random_column(std::size_t n, std::uint64_t seed, double p_one = 0.5, bool integer_values = false);

}  // namespace fixtures
