#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace schemalink {

enum class ErrorCode {
    FileNotFound,
    NotADatabase,
    MalformedSchema,
    ParseError,
    DuplicateTable,
    DanglingFkReference,
    UnknownTable,
    EmptyEndpoints,
    SelectorInvalidId,
    NoParse,
    EmptyAfterFiltering,
    OutOfRange,
    BackendError,
    CacheMiss,
    EmptyGold,
    EmptyInput,
    GoldExecutionFailed,
    NoSchemasFound,
    IoError,
    ConfigError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (and the CLI) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace schemalink
