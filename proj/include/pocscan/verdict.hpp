#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pocscan/corpus.hpp"
#include "pocscan/extract.hpp"
#include "pocscan/intel.hpp"

namespace pocscan {

enum class BinaryLabel { Malicious, CveRelated, Hacktool, Clean };
enum class PayloadClass { Benign, Suspicious, Malicious };

const char* to_string(BinaryLabel l);
const char* to_string(PayloadClass c);

struct BinaryDecision {
    BinaryLabel label = BinaryLabel::Clean;
    std::string note; // "unknown" when the scan service had no report
};

// Tools whose detections do not make a PoC Trojanized.
std::vector<std::string> default_hacktool_lexicon();

// Decoded-payload substrings that indicate download-and-execute or shell
// spawn behavior.
std::vector<std::string> default_execution_lexicon();

// Binary triage: a flagged binary is only Malicious when its detection is
// neither an exploit for a CVE the repository targets nor a known hacktool.
BinaryDecision classify_binary(const IntelVerdict& report, const std::set<CveId>& repo_cves,
                               const std::vector<std::string>& hacktool_lexicon =
                                   default_hacktool_lexicon());

// Suspicious when the decoded payload references a public IP or a URL;
// malicious when, in addition, an embedded IP has a malicious verdict or
// the decoded text matches the execution lexicon.
PayloadClass classify_payload(const EncodedPayload& payload,
                              const std::vector<IntelVerdict>& embedded_ip_verdicts,
                              const std::vector<std::string>& execution_lexicon =
                                  default_execution_lexicon());

enum class Heuristic { Ip, Binary, Hex, Base64 };

const char* to_string(Heuristic h);

struct Finding {
    Heuristic heuristic = Heuristic::Ip;
    std::string evidence; // file/indicator reference
    std::string detail;   // matched labels, verdict source, ...
};

struct RepoVerdict {
    std::string repo_id;
    bool malicious = false; // true iff findings non-empty
    std::vector<Finding> findings;
    std::string decided_at;
};

struct IpFinding {
    IpCandidate candidate;
    std::vector<IntelVerdict> verdicts;
};

struct BinaryFinding {
    BinaryArtifact artifact;
    BinaryDecision decision;
};

struct PayloadFinding {
    EncodedPayload payload;
    PayloadClass classification = PayloadClass::Benign;
};

// Union over heuristics: one RepoVerdict per repository, with every
// contributing finding in the evidence list.
RepoVerdict aggregate_repo(const RepoRecord& repo, const std::vector<IpFinding>& ip_findings,
                           const std::vector<BinaryFinding>& binary_findings,
                           const std::vector<PayloadFinding>& payload_findings,
                           const std::string& decided_at);

struct YearStats {
    std::int64_t repo_count = 0;
    std::int64_t malicious_count = 0;
    std::int64_t ip_malicious = 0;
    std::int64_t binary_malicious = 0;
    std::int64_t hex_malicious = 0;
    std::int64_t base64_malicious = 0;
    std::int64_t unique_cves = 0;
    std::optional<std::string> pct_of_nvd; // "2.30", absent when total unknown
};

struct SummaryStats {
    std::map<int, YearStats> per_year;
    std::map<std::string, std::int64_t> per_language;
    std::map<std::string, std::int64_t> per_issue; // CWE category -> unique CVEs
    std::map<std::string, std::int64_t> binary_labels; // label -> unique binaries
    std::int64_t total_repos = 0;
    std::int64_t total_malicious = 0;
};

// Locale-independent half-up percentage with two decimals ("2.30").
std::string format_percent(std::int64_t numerator, std::int64_t denominator);

SummaryStats summarize(const std::vector<RepoRecord>& records,
                       const std::map<std::string, RepoVerdict>& verdicts,
                       const std::map<std::string, BinaryDecision>& binary_by_hash,
                       const std::map<int, std::int64_t>& nvd_totals,
                       const std::map<std::string, std::string>& cwe_map);

struct OwnershipStats {
    std::map<std::int64_t, std::int64_t> repos_per_user;           // count -> users
    std::map<std::int64_t, std::int64_t> malicious_repos_per_user; // count -> users
    // plot-ready distributions: stars/forks per verdict class
    std::vector<std::int64_t> malicious_stars, malicious_forks;
    std::vector<std::int64_t> benign_stars, benign_forks;
};

OwnershipStats ownership_stats(const std::vector<RepoRecord>& records,
                               const std::map<std::string, RepoVerdict>& verdicts);

struct CrossrefResult {
    std::set<std::string> matching_repo_ids;
    std::set<std::string> matching_users;
    std::size_t malformed_rows = 0;
};

// Joins on (name, owner) for repositories and on owner alone for users.
CrossrefResult crossref_dataset(const std::vector<RepoRecord>& records,
                                const std::vector<std::pair<std::string, std::string>>&
                                    external_owner_name);

// Input-file loaders for the external joins.
std::map<int, std::int64_t> load_nvd_totals(const std::filesystem::path& file);
std::map<std::string, std::string> load_cwe_map(const std::filesystem::path& file);
std::vector<std::pair<std::string, std::string>> load_external_dataset(
    const std::filesystem::path& file, std::size_t& malformed);

} // namespace pocscan
