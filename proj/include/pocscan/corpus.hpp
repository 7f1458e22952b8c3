#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pocscan/cve.hpp"

namespace pocscan {

// Metadata for one PoC repository as returned by the hosting API or read
// from a local checkout. Timestamps are ISO-8601 UTC strings so that
// lexicographic comparison orders them chronologically.
struct RepoRecord {
    std::string repo_id;
    std::string owner;
    std::string name;
    std::string description;
    std::string primary_language = "Undetected";
    std::int64_t stars = 0;
    std::int64_t forks = 0;
    std::string created_at;
    std::string updated_at;
    std::string pushed_at;
    bool is_fork = false;
    std::optional<std::string> parent_id;
    std::set<CveId> cve_ids;
    std::optional<std::string> local_path;

    friend bool operator==(const RepoRecord&, const RepoRecord&) = default;
};

struct TextFileEntry {
    std::string path;       // relative to the repo root
    std::uint64_t size = 0;
    std::string language;   // extension-based guess, may be empty
};

struct BinaryFileEntry {
    std::string path;
    std::uint64_t size = 0;
    std::string magic;      // "MZ" or "other"
};

struct SkippedFileEntry {
    std::string path;
    std::string reason;
};

// Disjoint classification of every regular file under a repo root.
struct FileInventory {
    std::vector<TextFileEntry> text_files;
    std::vector<BinaryFileEntry> binary_files;
    std::vector<SkippedFileEntry> skipped;
};

struct ScanLimits {
    std::uint64_t max_file_size = 10ull * 1024 * 1024;
    std::size_t max_file_count = 10000;
    std::vector<std::string> exe_extensions = {".exe", ".dll"};
};

// Walks `root` and classifies each regular file. A file is binary when it
// starts with the MZ magic or carries a configured executable extension;
// everything else is text. Oversized or unreadable files land in `skipped`.
// Lists come back sorted by path. Throws IngestError if root is unreadable.
FileInventory scan_repo_files(const std::filesystem::path& root,
                              const ScanLimits& limits = {});

enum class ExclusionKind { NoCve, IocReview };

struct ExcludedRecord {
    RepoRecord record;
    ExclusionKind kind;
    std::string reason;
};

struct CleanResult {
    std::vector<RepoRecord> kept;
    std::vector<ExcludedRecord> excluded;
};

// True if the text contains "indicator of compromise" (case-insensitive)
// or the word-bounded token "IoC".
bool contains_ioc_marker(const std::string& text);

// Partitions the corpus. Records with zero CVE IDs are excluded outright.
// Records whose files carry IoC markers AND that reference more than
// `ioc_cve_threshold` distinct CVEs are routed to the review queue rather
// than silently dropped. `ioc_flagged` holds repo_ids whose file contents
// matched contains_ioc_marker.
CleanResult clean_corpus(const std::vector<RepoRecord>& records,
                         const std::set<std::string>& ioc_flagged,
                         std::size_t ioc_cve_threshold = 20);

enum class TakedownActor { None, Owner, Platform };

struct SnapshotEntry {
    bool available = true;
    std::string updated_at;
    std::string pushed_at;
    TakedownActor takedown_actor = TakedownActor::None;
};

struct CorpusSnapshot {
    std::string taken_at;
    std::map<std::string, SnapshotEntry> records;
};

enum class RepoStatus {
    Unchanged,
    Pushed,
    Updated,
    TakenDownByOwner,
    TakenDownByPlatform,
};

const char* to_string(RepoStatus s);

// Assigns exactly one status to every repo_id across both snapshots.
// Pushed (pushed_at advanced) takes precedence over Updated (metadata
// change without a push). Unavailability maps to the recorded takedown
// actor; a repo that vanished entirely counts as taken down by its owner.
std::map<std::string, RepoStatus> diff_snapshots(const CorpusSnapshot& old_snap,
                                                 const CorpusSnapshot& new_snap);

// Manifest persistence: one JSON record per line, UTF-8, sorted by repo_id.
std::string manifest_to_jsonl(std::vector<RepoRecord> records);
std::vector<RepoRecord> manifest_from_jsonl(const std::string& text);
void write_manifest(const std::filesystem::path& path,
                    const std::vector<RepoRecord>& records);
std::vector<RepoRecord> read_manifest(const std::filesystem::path& path);

// Extension-based language guess ("poc.py" -> "Python"); empty if unknown.
std::string guess_language(const std::filesystem::path& file);

CorpusSnapshot snapshot_from_records(const std::vector<RepoRecord>& records,
                                     const std::string& taken_at);
void write_snapshot(const std::filesystem::path& path, const CorpusSnapshot& snap);
CorpusSnapshot read_snapshot(const std::filesystem::path& path);

} // namespace pocscan
