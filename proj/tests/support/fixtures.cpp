#include "fixtures.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "random.hpp"

namespace fixtures {

using mdids::Dataset;
using mdids::LabeledObservation;
using mdids::LabelKind;
using mdids::RawRecord;
using mdids::RecordTable;

namespace {

double uniform(mdids::detail::Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * rng.uniform();
}

}  // namespace

RecordTable udp_flood_records(std::uint64_t seed, std::size_t windows, std::size_t attacks, std::int64_t start) {
    if (attacks > windows) throw std::invalid_argument("more attacks than windows");
    // three bursts spread over the capture
    std::vector<bool> attack(windows, false);
    std::size_t placed = 0;
    for (std::size_t b = 0; b < 3; ++b) {
        const std::size_t size = attacks / 3 + (b < attacks % 3 ? 1 : 0);
        const std::size_t centre = windows * (b + 1) / 4;
        std::size_t first = centre > size / 2 ? centre - size / 2 : 0;
        for (std::size_t i = first; i < windows && placed < attacks && i < first + size; ++i)
            if (!attack[i]) attack[i] = true, ++placed;
    }
    for (std::size_t i = 0; placed < attacks; ++i)
        if (!attack[i]) attack[i] = true, ++placed;

    mdids::detail::Rng rng(seed);
    RecordTable table;
    table.parameters = {"udp_bytes", "cpu_cycles"};
    for (std::size_t i = 0; i < windows; ++i) {
        const double udp = attack[i] ? uniform(rng, 53000, 73000) : uniform(rng, 1200, 16000);
        const double cpu = 800 + 0.02 * udp + uniform(rng, 0, 1400);
        table.records.push_back({start + static_cast<std::int64_t>(i), {std::round(udp), std::round(cpu)},
                                 attack[i] ? 1.0 : 0.0});
    }
    return table;
}

Dataset udp_flood_windows(std::uint64_t seed, std::size_t windows, std::size_t attacks, std::int64_t start) {
    const auto table = udp_flood_records(seed, windows, attacks, start);
    return mdids::aggregate_windows(table.records, table.parameters, mdids::WindowSpec{});
}

RecordTable inverted(RecordTable table) {
    for (auto& r : table.records)
        if (r.label) r.label = 1.0 - *r.label;
    return table;
}

std::string to_csv(const RecordTable& table, bool with_label) {
    std::ostringstream out;
    if (with_label) {
        mdids::write_records(out, table, "label");
    } else {
        RecordTable copy = table;
        for (auto& r : copy.records) r.label.reset();
        mdids::write_records(out, copy, "label");
    }
    return out.str();
}

Dataset covering_example() {
    const std::vector<std::pair<double, double>> rows = {{-0.603, 0}, {-0.606, 0}, {1.383, 1}, {-0.333, 0},
                                                         {1.383, 1},  {-0.606, 0}, {-0.603, 0}};
    std::vector<LabeledObservation> obs;
    for (std::size_t i = 0; i < rows.size(); ++i)
        obs.push_back({static_cast<std::int64_t>(i), {rows[i].first}, rows[i].second});
    return Dataset({"F1"}, std::move(obs), LabelKind::boolean);
}

Dataset correlated_pair(std::size_t n, double r, std::uint64_t seed) {
    mdids::detail::Rng rng(seed);
    std::vector<double> x(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = uniform(rng, -1, 1);
        z[i] = uniform(rng, -1, 1);
    }
    auto centre = [](std::vector<double>& v) {
        double m = 0;
        for (double a : v) m += a;
        m /= static_cast<double>(v.size());
        for (double& a : v) a -= m;
    };
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    centre(x);
    centre(z);
    const double proj = dot(z, x) / dot(x, x);
    for (std::size_t i = 0; i < n; ++i) z[i] -= proj * x[i];
    const double nx = std::sqrt(dot(x, x)), nz = std::sqrt(dot(z, z));
    std::vector<LabeledObservation> obs;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = x[i] / nx, b = z[i] / nz;
        const double y = r * a + std::sqrt(1 - r * r) * b;
        obs.push_back({static_cast<std::int64_t>(i), {300 + 50 * a, 20 + 7 * y}, 0.0});
    }
    return Dataset({"udp_bytes", "cpu_cycles"}, std::move(obs), LabelKind::none);
}

Dataset separable_column(std::size_t benign, std::size_t anomalous, std::uint64_t seed) {
    mdids::detail::Rng rng(seed);
    std::vector<LabeledObservation> obs;
    for (std::size_t i = 0; i < benign + anomalous; ++i) {
        const bool attack = i >= benign;
        obs.push_back({static_cast<std::int64_t>(i), {attack ? uniform(rng, 2, 4) : uniform(rng, -1, 0.5)},
                       attack ? 1.0 : 0.0});
    }
    return Dataset({"F1"}, std::move(obs), LabelKind::boolean);
}

Conjunction conjunction_dimensions(std::uint64_t seed) {
    // combination counts: both high 120, rate only 40, proto only 40, neither 200
    std::vector<std::pair<bool, bool>> combos;
    combos.insert(combos.end(), 120, {true, true});
    combos.insert(combos.end(), 40, {true, false});
    combos.insert(combos.end(), 40, {false, true});
    combos.insert(combos.end(), 200, {false, false});
    mdids::detail::Rng rng(seed);
    rng.shuffle(combos);
    std::vector<LabeledObservation> rate, proto;
    for (std::size_t i = 0; i < combos.size(); ++i) {
        const auto [hi_rate, hi_proto] = combos[i];
        const double label = hi_rate && hi_proto ? 1.0 : 0.0;
        const auto step = static_cast<double>(rng.below(3));
        rate.push_back({static_cast<std::int64_t>(i), {hi_rate ? 8 + step : 1 + step}, label});
        proto.push_back({static_cast<std::int64_t>(i), {hi_proto ? 0.9 + 0.03 * step : 0.1 + 0.03 * step}, label});
    }
    return {Dataset({"rate"}, std::move(rate), LabelKind::boolean),
            Dataset({"proto"}, std::move(proto), LabelKind::boolean)};
}

Dataset random_column(std::size_t n, std::uint64_t seed, double p_one, bool integer_values) {
    mdids::detail::Rng rng(seed);
    std::vector<LabeledObservation> obs;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = integer_values ? static_cast<double>(rng.below(6)) : uniform(rng, -5, 5);
        obs.push_back({static_cast<std::int64_t>(i), {v}, rng.uniform() < p_one ? 1.0 : 0.0});
    }
    return Dataset({"x"}, std::move(obs), LabelKind::boolean);
}

}  // namespace fixtures
