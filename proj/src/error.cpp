#include "mdids/error.hpp"

#include <fmt/format.h>

namespace mdids {

namespace {

std::string describe(const std::vector<ParseIssue>& issues) {
    if (issues.empty()) return "parse error";
    const auto& first = issues.front();
    std::string out = fmt::format("line {}: {}", first.line, first.reason);
    if (issues.size() > 1) out += fmt::format(" (and {} more)", issues.size() - 1);
    return out;
}

std::string describe_missing(const std::vector<std::size_t>& missing) {
    std::string out = "incomplete message, missing fragments:";
    for (auto k : missing) out += fmt::format(" {}", k);
    return out;
}

}  // namespace

ParseError::ParseError(std::vector<ParseIssue> issues)
    : Error(ErrorClass::data, describe(issues)), issues_(std::move(issues)) {}

FormatVersionError::FormatVersionError(int expected, int found)
    : Error(ErrorClass::integrity,
            fmt::format("unsupported model format version {} (this build reads version {})", found, expected)),
      expected_(expected),
      found_(found) {}

IncompleteMessageError::IncompleteMessageError(std::vector<std::size_t> missing)
    : Error(ErrorClass::data, describe_missing(missing)), missing_(std::move(missing)) {}

}  // namespace mdids
