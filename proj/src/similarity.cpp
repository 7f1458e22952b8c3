#include "pocscan/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pocscan/errors.hpp"

namespace pocscan {

namespace {

enum class LangFamily { CFamily, Python, Shell };

struct LangSpec {
    LangFamily family;
    std::vector<std::string> keywords;
};

const LangSpec& spec_for(const std::string& language) {
    static const LangSpec c_family{
        LangFamily::CFamily,
        {"if",     "else",   "for",    "while",  "do",      "switch", "case",
         "break",  "continue", "return", "struct", "class",  "public", "private",
         "static", "void",   "int",    "char",   "long",    "float",  "double",
         "new",    "delete", "try",    "catch",  "throw",   "const",  "function",
         "var",    "let",    "import", "package", "func",   "interface", "namespace",
         "using",  "null",   "nullptr", "true",  "false",   "this",   "typedef",
         "enum",   "union",  "sizeof", "goto",   "default", "extern", "unsigned"}};
    static const LangSpec python{
        LangFamily::Python,
        {"if",    "elif",  "else",   "for",   "while", "def",    "class",  "return",
         "import", "from", "as",     "try",   "except", "finally", "raise", "with",
         "lambda", "pass", "break",  "continue", "global", "nonlocal", "yield",
         "and",   "or",    "not",    "in",    "is",    "None",   "True",   "False",
         "assert", "del",  "print",  "exec",  "begin", "end",    "module", "require"}};
    static const LangSpec shell{
        LangFamily::Shell,
        {"if",   "then", "else", "elif", "fi",   "for",  "while", "until", "do",
         "done", "case", "esac", "function", "in", "select", "local", "return",
         "exit", "echo", "export", "read", "shift"}};

    static const std::map<std::string, const LangSpec*> by_label = {
        {"C", &c_family},    {"C++", &c_family},  {"C#", &c_family},
        {"Java", &c_family}, {"JavaScript", &c_family}, {"Go", &c_family},
        {"Rust", &c_family}, {"PHP", &c_family},  {"Kotlin", &c_family},
        {"Scala", &c_family},
        {"Python", &python}, {"Ruby", &python},   {"Perl", &python},
        {"Shell", &shell},   {"PowerShell", &shell},
    };
    auto it = by_label.find(language);
    if (it == by_label.end())
        throw UnsupportedLanguageError("no tokenizer for language: " + language);
    return *it->second;
}

bool ident_start(char c) { return std::isalpha((unsigned char)c) || c == '_' || c == '$'; }
bool ident_char(char c) { return std::isalnum((unsigned char)c) || c == '_' || c == '$'; }

const std::vector<std::string>& multi_char_ops() {
    static const std::vector<std::string> ops = {
        "<<=", ">>=", "===", "!==", "**=", "<=>", "->", "=>", "<<", ">>", "<=", ">=",
        "==", "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
        "::", "++", "--", "**"};
    return ops;
}

} // namespace

bool language_supported(const std::string& language) {
    try {
        spec_for(language);
        return true;
    } catch (const UnsupportedLanguageError&) {
        return false;
    }
}

TokenStream tokenize_text(const std::string& src, const std::string& language,
                          const std::string& origin) {
    const LangSpec& spec = spec_for(language);
    TokenStream out;
    out.language = language;
    out.origin = origin;

    auto keyword_kind = [&](const std::string& word) -> int {
        auto it = std::find(spec.keywords.begin(), spec.keywords.end(), word);
        return it == spec.keywords.end() ? -1
                                         : 100 + static_cast<int>(it - spec.keywords.begin());
    };

    const std::size_t n = src.size();
    std::size_t i = 0;
    while (i < n) {
        char c = src[i];
        if (std::isspace((unsigned char)c)) { ++i; continue; }

        // comments
        if (spec.family != LangFamily::CFamily && c == '#') {
            while (i < n && src[i] != '\n') ++i;
            continue;
        }
        if (spec.family == LangFamily::CFamily && c == '/' && i + 1 < n) {
            if (src[i + 1] == '/') {
                while (i < n && src[i] != '\n') ++i;
                continue;
            }
            if (src[i + 1] == '*') {
                std::size_t end = src.find("*/", i + 2);
                i = end == std::string::npos ? n : end + 2;
                continue;
            }
        }

        // strings
        if (c == '"' || c == '\'' || c == '`') {
            std::size_t start = i;
            if (spec.family == LangFamily::Python && i + 2 < n && src[i + 1] == c &&
                src[i + 2] == c) {
                std::string triple(3, c);
                std::size_t end = src.find(triple, i + 3);
                i = end == std::string::npos ? n : end + 3;
            } else {
                ++i;
                while (i < n && src[i] != c && src[i] != '\n') {
                    if (src[i] == '\\' && i + 1 < n) ++i;
                    ++i;
                }
                if (i < n && src[i] == c) ++i;
            }
            out.tokens.push_back({kTokenLiteral, start});
            continue;
        }

        // numbers
        if (std::isdigit((unsigned char)c) ||
            (c == '.' && i + 1 < n && std::isdigit((unsigned char)src[i + 1]))) {
            std::size_t start = i;
            while (i < n && (std::isalnum((unsigned char)src[i]) || src[i] == '.' ||
                             src[i] == '_'))
                ++i;
            out.tokens.push_back({kTokenLiteral, start});
            continue;
        }

        // identifiers and keywords
        if (ident_start(c)) {
            std::size_t start = i;
            while (i < n && ident_char(src[i])) ++i;
            std::string word = src.substr(start, i - start);
            int kk = keyword_kind(word);
            out.tokens.push_back(
                {kk >= 0 ? static_cast<TokenKind>(kk) : kTokenIdent, start});
            continue;
        }

        // operators and punctuation
        bool matched = false;
        for (std::size_t k = 0; k < multi_char_ops().size(); ++k) {
            const std::string& op = multi_char_ops()[k];
            if (src.compare(i, op.size(), op) == 0) {
                out.tokens.push_back({static_cast<TokenKind>(2000 + k), i});
                i += op.size();
                matched = true;
                break;
            }
        }
        if (matched) continue;
        out.tokens.push_back({static_cast<TokenKind>(3000 + (unsigned char)c), i});
        ++i;
    }
    return out;
}

TokenStream tokenize(const std::filesystem::path& file, const std::string& language) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IngestError("cannot read file for tokenizing: " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return tokenize_text(ss.str(), language, file.string());
}

// ---- greedy string tiling ----

namespace {

// Greedy longest-first pass: fast, and a lower bound for the exact search.
std::vector<Tile> greedy_tiles(const std::vector<TokenKind>& a, const std::vector<TokenKind>& b,
                               std::size_t min_match_len) {
    std::vector<Tile> tiles;
    const std::size_t na = a.size(), nb = b.size();
    std::vector<char> marked_a(na, 0), marked_b(nb, 0);
    for (;;) {
        // dp[i][j] = length of the common run starting at (i, j) over
        // unmarked positions, computed back-to-front
        std::vector<std::uint32_t> dp((na + 1) * (nb + 1), 0);
        auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& {
            return dp[i * (nb + 1) + j];
        };
        std::size_t best = 0;
        for (std::size_t i = na; i-- > 0;) {
            for (std::size_t j = nb; j-- > 0;) {
                if (!marked_a[i] && !marked_b[j] && a[i] == b[j]) {
                    at(i, j) = at(i + 1, j + 1) + 1;
                    if (at(i, j) > best) best = at(i, j);
                }
            }
        }
        if (best < min_match_len) break;
        std::vector<Tile> matches;
        for (std::size_t i = 0; i < na; ++i)
            for (std::size_t j = 0; j < nb; ++j)
                if (at(i, j) == best) matches.push_back({i, j, best});

        for (const auto& m : matches) {
            bool overlaps = false;
            for (std::size_t k = 0; k < m.len && !overlaps; ++k)
                if (marked_a[m.pos_a + k] || marked_b[m.pos_b + k]) overlaps = true;
            if (overlaps) continue;
            for (std::size_t k = 0; k < m.len; ++k) {
                marked_a[m.pos_a + k] = 1;
                marked_b[m.pos_b + k] = 1;
            }
            tiles.push_back(m);
        }
    }
    return tiles;
}

// Greedy tiling is not always optimal: taking the single longest match can
// block two shorter matches worth more together, and which equal-length
// match wins can depend on argument order. Since the score must be
// symmetric and match a maximum-coverage tiling, a bounded branch-and-bound
// search refines the greedy result; past the budget the greedy answer
// stands (large near-duplicate streams, where greedy already takes the one
// dominant run).
constexpr std::size_t kMaxTileCandidates = 4096;
constexpr std::size_t kMaxSearchNodes = 2000000;

struct TileSearch {
    const std::vector<Tile>& cands; // sorted by length, descending
    std::vector<std::size_t> suffix_sum;
    std::vector<char> used_a, used_b;
    std::vector<std::size_t> chosen;
    std::vector<Tile> best_tiles;
    std::size_t best_covered = 0;
    std::size_t nodes = 0;
    bool completed = true;

    explicit TileSearch(const std::vector<Tile>& candidates, std::size_t na, std::size_t nb)
        : cands(candidates), used_a(na, 0), used_b(nb, 0) {
        suffix_sum.assign(cands.size() + 1, 0);
        for (std::size_t i = cands.size(); i-- > 0;)
            suffix_sum[i] = suffix_sum[i + 1] + cands[i].len;
    }

    bool fits(const Tile& m) const {
        for (std::size_t k = 0; k < m.len; ++k)
            if (used_a[m.pos_a + k] || used_b[m.pos_b + k]) return false;
        return true;
    }
    void mark(const Tile& m, char v) {
        for (std::size_t k = 0; k < m.len; ++k) used_a[m.pos_a + k] = used_b[m.pos_b + k] = v;
    }
    void dfs(std::size_t idx, std::size_t covered) {
        if (++nodes > kMaxSearchNodes) {
            completed = false;
            return;
        }
        if (covered > best_covered) {
            best_covered = covered;
            best_tiles.clear();
            for (std::size_t i : chosen) best_tiles.push_back(cands[i]);
        }
        if (idx == cands.size() || covered + suffix_sum[idx] <= best_covered) return;
        if (fits(cands[idx])) {
            mark(cands[idx], 1);
            chosen.push_back(idx);
            dfs(idx + 1, covered + cands[idx].len);
            chosen.pop_back();
            mark(cands[idx], 0);
            if (!completed) return;
        }
        dfs(idx + 1, covered);
    }
};

// Every common-substring occurrence lies on one diagonal, inside that
// diagonal's maximal common run; enumerating sub-intervals of maximal runs
// therefore enumerates every candidate tile. Returns false when the
// candidate set exceeds the search budget.
bool enumerate_candidates(const std::vector<TokenKind>& a, const std::vector<TokenKind>& b,
                          std::size_t min_match_len, std::vector<Tile>& out) {
    const std::size_t na = a.size(), nb = b.size();
    std::vector<std::uint32_t> dp((na + 1) * (nb + 1), 0);
    auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& {
        return dp[i * (nb + 1) + j];
    };
    for (std::size_t i = na; i-- > 0;)
        for (std::size_t j = nb; j-- > 0;)
            if (a[i] == b[j]) at(i, j) = at(i + 1, j + 1) + 1;
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) {
            if (a[i] != b[j]) continue;
            if (i > 0 && j > 0 && a[i - 1] == b[j - 1]) continue; // not a run start
            std::size_t run = at(i, j);
            for (std::size_t len = run; len >= min_match_len && len > 0; --len)
                for (std::size_t off = 0; off + len <= run; ++off) {
                    out.push_back({i + off, j + off, len});
                    if (out.size() > kMaxTileCandidates) return false;
                }
        }
    std::stable_sort(out.begin(), out.end(), [](const Tile& x, const Tile& y) {
        return x.len > y.len;
    });
    return true;
}

} // namespace

std::vector<Tile> gst_tiles(const std::vector<TokenKind>& a, const std::vector<TokenKind>& b,
                            std::size_t min_match_len) {
    if (min_match_len == 0) min_match_len = 1;
    if (a.size() < min_match_len || b.size() < min_match_len) return {};

    // canonical argument order keeps the score symmetric even when the
    // exact search is cut short and the greedy fallback decides
    bool swapped = b < a;
    const std::vector<TokenKind>& x = swapped ? b : a;
    const std::vector<TokenKind>& y = swapped ? a : b;

    std::vector<Tile> tiles = greedy_tiles(x, y, min_match_len);
    std::vector<Tile> cands;
    if (enumerate_candidates(x, y, min_match_len, cands)) {
        TileSearch search(cands, x.size(), y.size());
        for (const auto& t : tiles) search.best_covered += t.len;
        search.best_tiles = tiles;
        search.dfs(0, 0);
        tiles = search.best_tiles;
    }

    if (swapped)
        for (auto& t : tiles) std::swap(t.pos_a, t.pos_b);
    std::sort(tiles.begin(), tiles.end(), [](const Tile& p, const Tile& q) {
        return p.pos_a < q.pos_a;
    });
    return tiles;
}

double gst_similarity(const std::vector<TokenKind>& a, const std::vector<TokenKind>& b,
                      std::size_t min_match_len) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t covered = 0;
    for (const auto& t : gst_tiles(a, b, min_match_len)) covered += t.len;
    return 200.0 * static_cast<double>(covered) / static_cast<double>(a.size() + b.size());
}

double gst_similarity(const TokenStream& a, const TokenStream& b, std::size_t min_match_len) {
    return gst_similarity(a.kinds(), b.kinds(), min_match_len);
}

// ---- pairwise driver ----

namespace {

std::vector<std::vector<TokenKind>> repo_token_streams(const RepoRecord& rec) {
    std::vector<std::vector<TokenKind>> out;
    if (!rec.local_path || !language_supported(rec.primary_language)) return out;
    FileInventory inv;
    try {
        inv = scan_repo_files(*rec.local_path);
    } catch (const IngestError&) {
        return out;
    }
    for (const auto& tf : inv.text_files) {
        if (tf.language != rec.primary_language) continue;
        try {
            auto stream = tokenize(std::filesystem::path(*rec.local_path) / tf.path,
                                   rec.primary_language);
            if (!stream.tokens.empty()) out.push_back(stream.kinds());
        } catch (const std::exception&) {
        }
    }
    return out;
}

double pair_score(const std::vector<std::vector<TokenKind>>& sa,
                  const std::vector<std::vector<TokenKind>>& sb, const PairwiseOptions& opts) {
    if (sa.empty() || sb.empty()) return 0.0;
    double best = 0.0, sum = 0.0;
    std::size_t count = 0;
    for (const auto& a : sa) {
        for (const auto& b : sb) {
            double s = gst_similarity(a, b, opts.min_match_len);
            best = std::max(best, s);
            sum += s;
            ++count;
        }
    }
    return opts.aggregate_average ? sum / static_cast<double>(count) : best;
}

bool repo_malicious(const std::map<std::string, RepoVerdict>& verdicts, const std::string& id) {
    auto it = verdicts.find(id);
    return it != verdicts.end() && it->second.malicious;
}

bool cves_intersect(const std::set<CveId>& a, const std::set<CveId>& b) {
    for (const auto& id : a)
        if (b.count(id)) return true;
    return false;
}

} // namespace

std::vector<SimilarityPair> pairwise(const std::vector<RepoRecord>& records,
                                     const std::map<std::string, RepoVerdict>& verdicts,
                                     PairMode mode, const PairwiseOptions& opts) {
    std::vector<SimilarityPair> out;
    std::map<std::string, std::vector<std::vector<TokenKind>>> streams;
    auto streams_for = [&](const RepoRecord& rec) -> const std::vector<std::vector<TokenKind>>& {
        auto it = streams.find(rec.repo_id);
        if (it == streams.end()) it = streams.emplace(rec.repo_id, repo_token_streams(rec)).first;
        return it->second;
    };

    if (mode == PairMode::OriginalsOnly) {
        std::vector<const RepoRecord*> originals;
        for (const auto& rec : records)
            if (!rec.is_fork && language_supported(rec.primary_language))
                originals.push_back(&rec);
        std::sort(originals.begin(), originals.end(),
                  [](const RepoRecord* x, const RepoRecord* y) { return x->repo_id < y->repo_id; });
        for (std::size_t i = 0; i < originals.size(); ++i) {
            for (std::size_t j = i + 1; j < originals.size(); ++j) {
                const RepoRecord& a = *originals[i];
                const RepoRecord& b = *originals[j];
                if (a.primary_language != b.primary_language) continue;
                if (!cves_intersect(a.cve_ids, b.cve_ids)) continue;
                SimilarityPair pair;
                pair.repo_a = a.repo_id;
                pair.repo_b = b.repo_id;
                pair.language = a.primary_language;
                pair.score = pair_score(streams_for(a), streams_for(b), opts);
                pair.category = std::string(repo_malicious(verdicts, a.repo_id) ? "1" : "0") +
                                (repo_malicious(verdicts, b.repo_id) ? "1" : "0");
                pair.relation = PairRelation::OriginalOriginal;
                out.push_back(std::move(pair));
            }
        }
    } else {
        std::map<std::string, const RepoRecord*> by_id;
        for (const auto& rec : records) by_id[rec.repo_id] = &rec;
        for (const auto& rec : records) {
            if (!rec.is_fork || !rec.parent_id) continue;
            auto pit = by_id.find(*rec.parent_id);
            if (pit == by_id.end()) continue;
            const RepoRecord& parent = *pit->second;
            if (parent.primary_language != rec.primary_language ||
                !language_supported(parent.primary_language))
                continue;
            SimilarityPair pair;
            pair.repo_a = parent.repo_id;
            pair.repo_b = rec.repo_id;
            pair.language = parent.primary_language;
            pair.score = pair_score(streams_for(parent), streams_for(rec), opts);
            if (pair.score <= 0.0) continue; // only positive scores in this mode
            pair.category = std::string(repo_malicious(verdicts, parent.repo_id) ? "1" : "0") +
                            (repo_malicious(verdicts, rec.repo_id) ? "1" : "0");
            pair.relation = PairRelation::ParentFork;
            out.push_back(std::move(pair));
        }
    }
    std::sort(out.begin(), out.end(), [](const SimilarityPair& x, const SimilarityPair& y) {
        return std::tie(x.repo_a, x.repo_b) < std::tie(y.repo_a, y.repo_b);
    });
    return out;
}

// ---- Mann-Whitney U ----

namespace {

// midranks doubled so everything stays in integers
std::vector<long long> doubled_midranks(const std::vector<double>& pooled_sorted,
                                        const std::vector<double>& values) {
    std::vector<long long> out;
    out.reserve(values.size());
    for (double v : values) {
        auto lo = std::lower_bound(pooled_sorted.begin(), pooled_sorted.end(), v);
        auto hi = std::upper_bound(pooled_sorted.begin(), pooled_sorted.end(), v);
        long long first = (lo - pooled_sorted.begin()) + 1;
        long long last = (hi - pooled_sorted.begin());
        out.push_back(first + last); // 2 * midrank
    }
    return out;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

} // namespace

MwuResult mann_whitney_u(const std::vector<double>& sample_a,
                         const std::vector<double>& sample_b, std::size_t exact_cap) {
    MwuResult res;
    const std::size_t na = sample_a.size(), nb = sample_b.size();
    if (na == 0 || nb == 0) throw UsageError("mann_whitney_u requires non-empty samples");
    const std::size_t n = na + nb;

    std::vector<double> pooled(sample_a);
    pooled.insert(pooled.end(), sample_b.begin(), sample_b.end());
    std::sort(pooled.begin(), pooled.end());

    if (pooled.front() == pooled.back()) {
        res.degenerate = true;
        res.u_a = res.u_b = static_cast<double>(na * nb) / 2.0;
        res.p = 1.0;
        res.method = na * nb <= exact_cap ? MwuMethod::Exact : MwuMethod::NormalApprox;
        return res;
    }

    std::vector<long long> ranks2_a = doubled_midranks(pooled, sample_a);
    long long sum2_a = 0;
    for (long long r : ranks2_a) sum2_a += r;
    // 2*U_A = 2*R_A - nA(nA+1)
    long long u2_a = sum2_a - static_cast<long long>(na) * (na + 1);
    long long u2_b = 2ll * na * nb - u2_a;
    res.u_a = static_cast<double>(u2_a) / 2.0;
    res.u_b = static_cast<double>(u2_b) / 2.0;

    const long long mean2 = static_cast<long long>(na) * nb; // 2 * mean of U
    const long long dev_obs = std::llabs(u2_a - mean2);

    if (na * nb <= exact_cap) {
        res.method = MwuMethod::Exact;
        // distribution of the doubled rank sum over all subsets of size na
        std::vector<long long> all2 = doubled_midranks(pooled, pooled);
        long long max_sum = 0;
        for (long long r : all2) max_sum += r;
        std::vector<std::vector<double>> count(
            na + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
        count[0][0] = 1.0;
        for (long long r : all2) {
            for (std::size_t k = std::min<std::size_t>(na, n); k-- > 0;) {
                for (long long s = max_sum - r; s >= 0; --s) {
                    if (count[k][static_cast<std::size_t>(s)] > 0.0)
                        count[k + 1][static_cast<std::size_t>(s + r)] +=
                            count[k][static_cast<std::size_t>(s)];
                }
            }
        }
        double total = 0.0, extreme = 0.0;
        for (long long s = 0; s <= max_sum; ++s) {
            double ways = count[na][static_cast<std::size_t>(s)];
            if (ways == 0.0) continue;
            total += ways;
            long long u2 = s - static_cast<long long>(na) * (na + 1);
            if (std::llabs(u2 - mean2) >= dev_obs) extreme += ways;
        }
        res.p = extreme / total;
    } else {
        res.method = MwuMethod::NormalApprox;
        // tie correction over pooled value multiplicities
        double tie_term = 0.0;
        for (std::size_t i = 0; i < pooled.size();) {
            std::size_t j = i;
            while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
            double t = static_cast<double>(j - i);
            tie_term += t * t * t - t;
            i = j;
        }
        double dn = static_cast<double>(n);
        double var = (static_cast<double>(na) * nb / 12.0) *
                     ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
        double sigma = std::sqrt(var);
        double dev = static_cast<double>(dev_obs) / 2.0; // |U - mean|
        double z = std::max(0.0, dev - 0.5) / sigma;     // continuity correction
        res.p = std::min(1.0, 2.0 * normal_sf(z));
    }
    return res;
}

} // namespace pocscan
