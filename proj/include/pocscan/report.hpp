#pragma once

#include <map>
#include <string>
#include <vector>

#include "pocscan/corpus.hpp"
#include "pocscan/extract.hpp"
#include "pocscan/similarity.hpp"
#include "pocscan/verdict.hpp"

namespace pocscan {

enum class ReportFormat { Structured, Csv, Markdown };

ReportFormat report_format_from_string(const std::string& name); // throws UsageError

// Everything needed to re-render a scan without re-running it.
struct ScanReport {
    std::string manifest_ref;
    std::string tool_version;
    std::string config_echo_json; // full effective config, for auditability
    std::vector<RepoVerdict> verdicts;
    SummaryStats stats;
    std::map<std::string, std::string> intel_health; // source -> ok/unavailable
    std::vector<ReviewEntry> review_queue;
    std::vector<ExcludedRecord> excluded;
};

// Deterministic rendering: stable key order, locale-independent numbers,
// byte-identical output for identical inputs.
std::string render(const ScanReport& report, ReportFormat format);

// One CSV file per summary table, written under `dir`.
void write_csv_tables(const ScanReport& report, const std::filesystem::path& dir);

// Long-format plot data: distributions.csv (class, metric, value),
// similarity.csv (one row per pair), quartiles.csv (five-number summary
// per class and metric). Returns filename -> contents.
std::map<std::string, std::string> emit_distributions(
    const std::vector<RepoRecord>& records,
    const std::map<std::string, RepoVerdict>& verdicts,
    const std::vector<SimilarityPair>& pairs);

// Serialization for persisted scan intermediates.
std::string verdicts_to_jsonl(const std::vector<RepoVerdict>& verdicts);
std::vector<RepoVerdict> verdicts_from_jsonl(const std::string& text);

} // namespace pocscan
