#pragma once

#include <compare>
#include <optional>
#include <set>
#include <string>

namespace pocscan {

// A CVE identifier. The numeric part is kept as the digit string that was
// matched so that leading zeros survive a parse/render round trip
// (CVE-2019-0708 stays CVE-2019-0708, not CVE-2019-708).
struct CveId {
    int year = 0;               // 1999..2099
    std::string number;         // >= 4 digits, no sign

    std::string canonical() const;

    friend bool operator==(const CveId&, const CveId&) = default;
    friend auto operator<=>(const CveId& a, const CveId& b) {
        if (auto c = a.year <=> b.year; c != 0) return c;
        if (auto c = a.number.size() <=> b.number.size(); c != 0) return c;
        return a.number <=> b.number;
    }
};

// Parses a canonical "CVE-<year>-<number>" string (case-insensitive).
std::optional<CveId> parse_cve_id(const std::string& text);

// Finds every CVE identifier in free text. Accepts the canonical form and
// the loose separator variants seen in repository names and descriptions:
// "CVE 2021-44228", "CVE-2021 44228", "CVE 2021 44228", "CVE:2021-44228".
// Matching is case-insensitive; results are normalized and deduplicated.
std::set<CveId> extract_cve_ids(const std::string& text);

} // namespace pocscan
