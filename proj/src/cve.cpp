#include "pocscan/cve.hpp"

#include <cctype>

namespace pocscan {

std::string CveId::canonical() const {
    return "CVE-" + std::to_string(year) + "-" + number;
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_sep1(char c) { return c == '-' || c == ' ' || c == ':'; }
bool is_sep2(char c) { return c == '-' || c == ' '; }

bool matches_cve_word(const std::string& s, size_t i) {
    if (i + 3 > s.size()) return false;
    return (std::tolower((unsigned char)s[i]) == 'c') &&
           (std::tolower((unsigned char)s[i + 1]) == 'v') &&
           (std::tolower((unsigned char)s[i + 2]) == 'e');
}

} // namespace

std::optional<CveId> parse_cve_id(const std::string& text) {
    auto ids = extract_cve_ids(text);
    if (ids.size() != 1) return std::nullopt;
    // Reject trailing junk: the match must cover the whole trimmed string.
    const CveId& id = *ids.begin();
    std::string trimmed;
    for (char c : text)
        if (!std::isspace((unsigned char)c)) trimmed += c;
    std::string want = id.canonical();
    if (trimmed.size() != want.size()) return std::nullopt;
    return id;
}

std::set<CveId> extract_cve_ids(const std::string& text) {
    std::set<CveId> out;
    const size_t n = text.size();
    for (size_t i = 0; i + 3 < n; ++i) {
        if (!matches_cve_word(text, i)) continue;
        if (i > 0 && std::isalnum((unsigned char)text[i - 1])) continue;
        size_t p = i + 3;
        if (p >= n || !is_sep1(text[p])) continue;
        ++p;
        // year: exactly 4 digits
        if (p + 4 > n) continue;
        bool ok = true;
        for (size_t k = 0; k < 4; ++k)
            if (!is_digit(text[p + k])) { ok = false; break; }
        if (!ok) continue;
        if (p + 4 < n && is_digit(text[p + 4])) continue; // 5+ digit year
        int year = std::stoi(text.substr(p, 4));
        if (year < 1999 || year > 2099) continue;
        p += 4;
        if (p >= n || !is_sep2(text[p])) continue;
        ++p;
        size_t num_start = p;
        while (p < n && is_digit(text[p])) ++p;
        size_t digits = p - num_start;
        if (digits < 4) continue;
        out.insert(CveId{year, text.substr(num_start, digits)});
        i = p - 1;
    }
    return out;
}

} // namespace pocscan
