#include "schemalink/names.hpp"
#include "schemalink/error.hpp"

#include <algorithm>
#include <cctype>

namespace schemalink {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::FileNotFound: return "FILE_NOT_FOUND";
    case ErrorCode::NotADatabase: return "NOT_A_DATABASE";
    case ErrorCode::MalformedSchema: return "MALFORMED_SCHEMA";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::DuplicateTable: return "DUPLICATE_TABLE";
    case ErrorCode::DanglingFkReference: return "DANGLING_FK_REFERENCE";
    case ErrorCode::UnknownTable: return "UNKNOWN_TABLE";
    case ErrorCode::EmptyEndpoints: return "EMPTY_ENDPOINTS";
    case ErrorCode::SelectorInvalidId: return "SELECTOR_INVALID_ID";
    case ErrorCode::NoParse: return "NO_PARSE";
    case ErrorCode::EmptyAfterFiltering: return "EMPTY_AFTER_FILTERING";
    case ErrorCode::OutOfRange: return "OUT_OF_RANGE";
    case ErrorCode::BackendError: return "BACKEND_ERROR";
    case ErrorCode::CacheMiss: return "CACHE_MISS";
    case ErrorCode::EmptyGold: return "EMPTY_GOLD";
    case ErrorCode::EmptyInput: return "EMPTY_INPUT";
    case ErrorCode::GoldExecutionFailed: return "GOLD_EXECUTION_FAILED";
    case ErrorCode::NoSchemasFound: return "NO_SCHEMAS_FOUND";
    case ErrorCode::IoError: return "IO_ERROR";
    case ErrorCode::ConfigError: return "CONFIG_ERROR";
    }
    return "UNKNOWN";
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

std::string trim(std::string_view s) {
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return std::string(s);
}

bool NameLess::operator()(std::string_view a, std::string_view b) const {
    const auto n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        const int ca = std::tolower(static_cast<unsigned char>(a[i]));
        const int cb = std::tolower(static_cast<unsigned char>(b[i]));
        if (ca != cb)
            return ca < cb;
    }
    if (a.size() != b.size())
        return a.size() < b.size();
    return a < b;
}

bool names_less(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), NameLess{});
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i)
            out += sep;
        out += items[i];
    }
    return out;
}

std::string join(const TableSet& items, std::string_view sep) {
    return join(std::vector<std::string>(items.begin(), items.end()), sep);
}

} // namespace schemalink
