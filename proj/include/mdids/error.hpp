#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdids {

/// Broad failure classes. The command-line tool maps each class onto a
/// stable exit code, so new error types must pick one of these.
enum class ErrorClass {
    usage,      // bad arguments or configuration
    data,       // malformed input, schema or alignment problems
    numeric,    // training / numerical failures
    integrity,  // model file version or checksum problems
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
    ErrorClass error_class() const noexcept { return class_; }

private:
    ErrorClass class_;
};

class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& what) : Error(ErrorClass::usage, what) {}
};

/// Violated precondition of an operation (wrong dimensionality, bad label, ...).
class ContractError : public Error {
public:
    explicit ContractError(const std::string& what) : Error(ErrorClass::data, what) {}
};

class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what) : Error(ErrorClass::data, what) {}
};

struct ParseIssue {
    std::size_t line = 0;    // 1-based physical line, header is line 1
    std::size_t column = 0;  // 1-based field index, 0 when not field-specific
    std::string reason;
};

/// Raised once a whole input has been scanned; carries every malformed row.
class ParseError : public Error {
public:
    explicit ParseError(std::vector<ParseIssue> issues);
    const std::vector<ParseIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<ParseIssue> issues_;
};

class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& what) : Error(ErrorClass::data, what) {}
};

class AlignmentError : public Error {
public:
    explicit AlignmentError(const std::string& what) : Error(ErrorClass::data, what) {}
};

class ScriptError : public Error {
public:
    explicit ScriptError(const std::string& what) : Error(ErrorClass::data, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorClass::numeric, what) {}
};

class DegenerateDataError : public Error {
public:
    explicit DegenerateDataError(const std::string& what) : Error(ErrorClass::numeric, what) {}
};

class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& what) : Error(ErrorClass::numeric, what) {}
};

class FormatVersionError : public Error {
public:
    FormatVersionError(int expected, int found);
    int expected() const noexcept { return expected_; }
    int found() const noexcept { return found_; }

private:
    int expected_;
    int found_;
};

class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& what) : Error(ErrorClass::integrity, what) {}
};

class IncompleteMessageError : public Error {
public:
    explicit IncompleteMessageError(std::vector<std::size_t> missing);
    const std::vector<std::size_t>& missing() const noexcept { return missing_; }

private:
    std::vector<std::size_t> missing_;
};

}  // namespace mdids
