// Independent reference implementations used only by tests. These are
// deliberately written with different algorithms than the library so that
// agreement is meaningful.
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace oracle {

// ---- encoders (test-only helpers for round-trip properties) ----

inline std::string hex_encode(const std::vector<std::uint8_t>& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (auto b : bytes) {
        out += "\\x";
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

inline const std::string& b64_alphabet() {
    static const std::string a =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    return a;
}

inline std::string b64_encode(const std::vector<std::uint8_t>& bytes) {
    const std::string& tab = b64_alphabet();
    std::string out;
    std::size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(tab[(v >> 18) & 63]);
        out.push_back(tab[(v >> 12) & 63]);
        out.push_back(tab[(v >> 6) & 63]);
        out.push_back(tab[v & 63]);
    }
    std::size_t rem = bytes.size() - i;
    if (rem == 1) {
        std::uint32_t v = bytes[i] << 16;
        out.push_back(tab[(v >> 18) & 63]);
        out.push_back(tab[(v >> 12) & 63]);
        out += "==";
    } else if (rem == 2) {
        std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(tab[(v >> 18) & 63]);
        out.push_back(tab[(v >> 12) & 63]);
        out.push_back(tab[(v >> 6) & 63]);
        out += "=";
    }
    return out;
}

inline std::vector<std::uint8_t> b64_decode(const std::string& text) {
    std::vector<int> vals;
    int pad = 0;
    for (char c : text) {
        if (c == '=') {
            ++pad;
            continue;
        }
        auto pos = b64_alphabet().find(c);
        vals.push_back(static_cast<int>(pos));
    }
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i + 1 < vals.size(); i += 4) {
        std::uint32_t v = vals[i] << 18 | vals[i + 1] << 12;
        std::size_t have = std::min<std::size_t>(4, vals.size() - i);
        if (have > 2) v |= vals[i + 2] << 6;
        if (have > 3) v |= vals[i + 3];
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        if (have > 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
        if (have > 3) out.push_back(static_cast<std::uint8_t>(v & 0xff));
    }
    return out;
}

// ---- IP classification by plain octet comparison ----

inline bool ip_private(int a, int b, int, int) {
    if (a == 10) return true;
    if (a == 172 && b >= 16 && b <= 31) return true;
    if (a == 192 && b == 168) return true;
    return false;
}

inline bool ip_reserved(int a, int b, int c, int) {
    if (a == 0 || a == 127) return true;
    if (a == 169 && b == 254) return true;
    if (a == 192 && b == 0 && c == 2) return true;
    if (a == 198 && b == 51 && c == 100) return true;
    if (a == 203 && b == 0 && c == 113) return true;
    if (a >= 224) return true;
    return false;
}

// ---- exhaustive maximal non-overlapping tiling ----

// Maximum total covered length (per stream) achievable by non-overlapping
// common substrings each of length >= mml. For mml == 1 the optimum is the
// common token multiset size; otherwise branch-and-bound over every
// candidate sub-run.
inline std::size_t best_tiling_coverage(const std::vector<std::uint16_t>& a,
                                        const std::vector<std::uint16_t>& b,
                                        std::size_t mml) {
    if (mml == 1) {
        std::map<std::uint16_t, std::size_t> ca, cb;
        for (auto t : a) ++ca[t];
        for (auto t : b) ++cb[t];
        std::size_t total = 0;
        for (const auto& [tok, n] : ca) {
            auto it = cb.find(tok);
            if (it != cb.end()) total += std::min(n, it->second);
        }
        return total;
    }

    struct Cand {
        std::size_t i, j, len;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (a[i] != b[j]) continue;
            if (i > 0 && j > 0 && a[i - 1] == b[j - 1]) continue; // run start only
            std::size_t run = 0;
            while (i + run < a.size() && j + run < b.size() && a[i + run] == b[j + run]) ++run;
            // every sub-interval of the run is a candidate tile
            for (std::size_t s = 0; s < run; ++s)
                for (std::size_t len = mml; s + len <= run; ++len)
                    cands.push_back({i + s, j + s, len});
        }
    }
    std::sort(cands.begin(), cands.end(),
              [](const Cand& x, const Cand& y) { return x.len > y.len; });

    std::size_t best = 0;
    std::vector<char> used_a(a.size(), 0), used_b(b.size(), 0);

    auto fits = [&](const Cand& c) {
        for (std::size_t k = 0; k < c.len; ++k)
            if (used_a[c.i + k] || used_b[c.j + k]) return false;
        return true;
    };

    std::function<void(std::size_t, std::size_t)> go = [&](std::size_t idx,
                                                           std::size_t covered) {
        best = std::max(best, covered);
        if (idx >= cands.size()) return;
        // upper bound: everything remaining could fit
        std::size_t bound = covered;
        for (std::size_t k = idx; k < cands.size(); ++k) bound += cands[k].len;
        if (bound <= best) return;
        const Cand& c = cands[idx];
        if (fits(c)) {
            for (std::size_t k = 0; k < c.len; ++k) used_a[c.i + k] = used_b[c.j + k] = 1;
            go(idx + 1, covered + c.len);
            for (std::size_t k = 0; k < c.len; ++k) used_a[c.i + k] = used_b[c.j + k] = 0;
        }
        go(idx + 1, covered);
    };
    go(0, 0);
    return best;
}

// ---- Mann-Whitney by direct pairwise counting + full enumeration ----

// 2*U_A from pairwise comparison (2 per win, 1 per tie).
inline long long u2_pairwise(const std::vector<double>& a, const std::vector<double>& b) {
    long long u2 = 0;
    for (double x : a)
        for (double y : b) {
            if (x > y) u2 += 2;
            else if (x == y) u2 += 1;
        }
    return u2;
}

// Exact two-sided p over all C(n_a+n_b, n_a) label assignments of the
// pooled values: P(|2U - n_a*n_b| >= |2U_obs - n_a*n_b|).
inline double exact_p_enumeration(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    const long long n_a = static_cast<long long>(a.size());
    const long long n_b = static_cast<long long>(b.size());
    const long long center = n_a * n_b;
    const long long obs_dev = std::llabs(u2_pairwise(a, b) - center);

    std::vector<char> labels(pooled.size(), 1);
    std::fill(labels.begin(), labels.begin() + n_a, 0);
    std::sort(labels.begin(), labels.end());
    long long total = 0, extreme = 0;
    do {
        std::vector<double> ga, gb;
        for (std::size_t i = 0; i < pooled.size(); ++i)
            (labels[i] == 0 ? ga : gb).push_back(pooled[i]);
        long long dev = std::llabs(u2_pairwise(ga, gb) - center);
        ++total;
        if (dev >= obs_dev) ++extreme;
    } while (std::next_permutation(labels.begin(), labels.end()));
    return static_cast<double>(extreme) / static_cast<double>(total);
}

} // namespace oracle
