#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pocscan/report.hpp"

namespace pocscan {

inline constexpr const char* kToolVersion = "0.1.0";

// Effective configuration for a scan. Every knob lands in the report's
// config echo so results are auditable.
struct Config {
    // paths
    std::string corpus_root;
    std::string blocklist_dir;
    std::string intel_fixture_dir;
    std::string hacktool_lexicon_file;
    std::string execution_lexicon_file;
    std::string nvd_totals_file;
    std::string cwe_map_file;
    // thresholds
    int engine_threshold = 1;
    int reputation_threshold = 1;
    std::size_t base64_min_length = 20;
    int payload_max_depth = 3;
    std::size_t min_match_len = 9;
    std::size_t exact_test_cap = 400;
    std::size_t ioc_cve_threshold = 20;
    // modes
    bool originals_only = false;
    bool upload_enabled = false;
    bool fixture_only = false;
};

Config load_config_file(const std::filesystem::path& path);
std::string config_to_json(const Config& cfg);

// Per-repo extraction results persisted between stages.
struct RepoIndicators {
    std::string repo_id;
    std::vector<IpCandidate> ips;
    std::vector<EncodedPayload> payloads;
    std::vector<BinaryArtifact> binaries;
    std::vector<ReviewEntry> review;
};

struct ScanOutcome {
    bool malicious_found = false;
    ScanReport report;
    int exit_code() const { return malicious_found ? 2 : 0; }
};

// Pipeline stages. Each stage reads its inputs from, and writes its
// outputs to, files under `out_dir`, so a scan can be resumed or re-run
// stage by stage with identical results.
void stage_ingest(const Config& cfg, const std::filesystem::path& out_dir);
void stage_extract(const Config& cfg, const std::filesystem::path& out_dir);
void stage_intel(const Config& cfg, const std::filesystem::path& out_dir);
void stage_verdict(const Config& cfg, const std::filesystem::path& out_dir);
ScanOutcome stage_report(const Config& cfg, const std::filesystem::path& out_dir);

// ingest -> extract -> intel -> verdict -> report.
ScanOutcome run_scan(const Config& cfg, const std::filesystem::path& out_dir);

// Intermediate (de)serialization, shared with the CLI.
void write_indicators(const std::filesystem::path& path,
                      const std::vector<RepoIndicators>& indicators);
std::vector<RepoIndicators> read_indicators(const std::filesystem::path& path);

} // namespace pocscan
