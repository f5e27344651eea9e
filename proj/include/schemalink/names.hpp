#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace schemalink {

// SQLite identifiers compare case-insensitively (ASCII folding only).
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::string trim(std::string_view s);

// Case-insensitive ordering with a byte-wise tiebreak so that the order is total.
struct NameLess {
    using is_transparent = void;
    bool operator()(std::string_view a, std::string_view b) const;
};

using TableSet = std::set<std::string, NameLess>;

bool names_less(const std::vector<std::string>& a, const std::vector<std::string>& b);

std::string join(const std::vector<std::string>& items, std::string_view sep);
std::string join(const TableSet& items, std::string_view sep);

} // namespace schemalink
