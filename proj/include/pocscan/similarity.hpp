#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pocscan/corpus.hpp"
#include "pocscan/verdict.hpp"

namespace pocscan {

// Normalized token kinds: identifiers and literals collapse to single
// kinds so that renaming does not affect similarity.
using TokenKind = std::uint16_t;

inline constexpr TokenKind kTokenIdent = 0;
inline constexpr TokenKind kTokenLiteral = 1;

struct Token {
    TokenKind kind = kTokenIdent;
    std::size_t offset = 0; // byte position in the source
};

struct TokenStream {
    std::string language;
    std::vector<Token> tokens;
    std::string origin; // "repo_id:path"

    std::vector<TokenKind> kinds() const {
        std::vector<TokenKind> out;
        out.reserve(tokens.size());
        for (const auto& t : tokens) out.push_back(t.kind);
        return out;
    }
};

// True if a tokenizer exists for the GitHub-style language label.
bool language_supported(const std::string& language);

// Tokenizes source text: comments and whitespace dropped, identifiers ->
// IDENT, string/number literals -> LIT, keywords and punctuation mapped to
// per-language kinds. Throws UnsupportedLanguageError for unknown labels.
TokenStream tokenize_text(const std::string& source, const std::string& language,
                          const std::string& origin = "");
TokenStream tokenize(const std::filesystem::path& file, const std::string& language);

struct Tile {
    std::size_t pos_a = 0;
    std::size_t pos_b = 0;
    std::size_t len = 0;
};

// Non-overlapping common-substring tiling, length floor min_match_len.
// A greedy longest-first pass seeds a bounded exact search for the
// maximum-coverage tiling; past the search budget the greedy result
// stands. Coverage is symmetric in (a, b).
std::vector<Tile> gst_tiles(const std::vector<TokenKind>& a, const std::vector<TokenKind>& b,
                            std::size_t min_match_len);

// JPlag-style score: 200 * covered / (|a| + |b|), in [0, 100].
double gst_similarity(const TokenStream& a, const TokenStream& b,
                      std::size_t min_match_len = 9);
double gst_similarity(const std::vector<TokenKind>& a, const std::vector<TokenKind>& b,
                      std::size_t min_match_len = 9);

enum class PairRelation { OriginalOriginal, ParentFork };
enum class PairMode { OriginalsOnly, ParentFork };

struct SimilarityPair {
    std::string repo_a;
    std::string repo_b;
    std::string language;
    double score = 0.0;        // percentage in [0, 100]
    std::string category;      // "11", "10", "01", "00" (1 = malicious)
    PairRelation relation = PairRelation::OriginalOriginal;
};

struct PairwiseOptions {
    std::size_t min_match_len = 9;
    bool aggregate_average = false; // default: max over cross-file scores
};

// Originals-only mode compares every same-language, CVE-intersecting pair
// of non-fork repos (zero scores included); parent-fork mode compares each
// fork to its parent and keeps positive scores only. Repositories need a
// local_path; results are sorted by (repo_a, repo_b).
std::vector<SimilarityPair> pairwise(const std::vector<RepoRecord>& records,
                                     const std::map<std::string, RepoVerdict>& verdicts,
                                     PairMode mode, const PairwiseOptions& opts = {});

enum class MwuMethod { Exact, NormalApprox };

struct MwuResult {
    double u_a = 0.0;
    double u_b = 0.0;
    double p = 1.0;
    MwuMethod method = MwuMethod::Exact;
    bool degenerate = false; // every pooled value identical
};

// Mann-Whitney U with midranks. Exact two-sided p by full enumeration of
// label assignments when n_a * n_b <= exact_cap, else a normal
// approximation with tie and continuity corrections. Two-sidedness is
// P(|U - n_a*n_b/2| >= |u_obs - n_a*n_b/2|).
MwuResult mann_whitney_u(const std::vector<double>& sample_a,
                         const std::vector<double>& sample_b, std::size_t exact_cap = 400);

} // namespace pocscan
