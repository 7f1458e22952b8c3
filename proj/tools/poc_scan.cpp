// poc-scan: static analysis of CVE proof-of-concept repositories.
//
// Exit codes: 0 = completed, nothing malicious; 2 = malicious findings;
// 1 = usage or runtime error.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "pocscan/errors.hpp"
#include "pocscan/harvest.hpp"
#include "pocscan/pipeline.hpp"
#include "pocscan/report.hpp"
#include "pocscan/similarity.hpp"

namespace fs = std::filesystem;
using namespace pocscan;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spill(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

struct CommonOpts {
    std::string config_file;
    Config cfg;
};

void add_config_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_file, "JSON config file");
    cmd->add_option("--corpus", o.cfg.corpus_root, "corpus root directory");
    cmd->add_option("--blocklists", o.cfg.blocklist_dir, "directory of netset/ipset files");
    cmd->add_option("--intel-fixtures", o.cfg.intel_fixture_dir,
                    "recorded intel verdicts directory");
    cmd->add_option("--hacktool-lexicon", o.cfg.hacktool_lexicon_file);
    cmd->add_option("--execution-lexicon", o.cfg.execution_lexicon_file);
    cmd->add_option("--nvd-totals", o.cfg.nvd_totals_file, "CSV: year,total");
    cmd->add_option("--cwe-map", o.cfg.cwe_map_file, "CSV: cve,category");
    cmd->add_option("--engine-threshold", o.cfg.engine_threshold);
    cmd->add_option("--reputation-threshold", o.cfg.reputation_threshold);
    cmd->add_option("--base64-min-length", o.cfg.base64_min_length);
    cmd->add_option("--payload-max-depth", o.cfg.payload_max_depth);
    cmd->add_option("--min-match-len", o.cfg.min_match_len);
    cmd->add_option("--ioc-cve-threshold", o.cfg.ioc_cve_threshold);
    cmd->add_flag("--originals-only", o.cfg.originals_only);
    cmd->add_flag("--enable-upload", o.cfg.upload_enabled,
                  "allow uploading binaries to scan services (never in fixture mode)");
    cmd->add_flag("--fixture-only", o.cfg.fixture_only,
                  "hermetic mode: recorded fixtures only, no network");
}

// CLI flags override config-file values, which override defaults.
Config resolve_config(CLI::App* cmd, const CommonOpts& o) {
    if (o.config_file.empty()) return o.cfg;
    Config cfg = load_config_file(o.config_file);
    Config defaults;
    const CommonOpts& c = o;
    auto seen = [&](const std::string& name) { return cmd->count(name) > 0; };
    if (seen("--corpus")) cfg.corpus_root = c.cfg.corpus_root;
    if (seen("--blocklists")) cfg.blocklist_dir = c.cfg.blocklist_dir;
    if (seen("--intel-fixtures")) cfg.intel_fixture_dir = c.cfg.intel_fixture_dir;
    if (seen("--hacktool-lexicon")) cfg.hacktool_lexicon_file = c.cfg.hacktool_lexicon_file;
    if (seen("--execution-lexicon"))
        cfg.execution_lexicon_file = c.cfg.execution_lexicon_file;
    if (seen("--nvd-totals")) cfg.nvd_totals_file = c.cfg.nvd_totals_file;
    if (seen("--cwe-map")) cfg.cwe_map_file = c.cfg.cwe_map_file;
    if (seen("--engine-threshold")) cfg.engine_threshold = c.cfg.engine_threshold;
    if (seen("--reputation-threshold"))
        cfg.reputation_threshold = c.cfg.reputation_threshold;
    if (seen("--base64-min-length")) cfg.base64_min_length = c.cfg.base64_min_length;
    if (seen("--payload-max-depth")) cfg.payload_max_depth = c.cfg.payload_max_depth;
    if (seen("--min-match-len")) cfg.min_match_len = c.cfg.min_match_len;
    if (seen("--ioc-cve-threshold")) cfg.ioc_cve_threshold = c.cfg.ioc_cve_threshold;
    if (seen("--originals-only")) cfg.originals_only = c.cfg.originals_only;
    if (seen("--enable-upload")) cfg.upload_enabled = c.cfg.upload_enabled;
    if (seen("--fixture-only")) cfg.fixture_only = c.cfg.fixture_only;
    (void)defaults;
    return cfg;
}

std::vector<CveId> read_keywords(const fs::path& file) {
    std::istringstream in(slurp(file));
    std::vector<CveId> out;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto id = parse_cve_id(line);
        if (!id) throw UsageError("not a CVE id: " + line);
        out.push_back(*id);
    }
    return out;
}

std::string pairs_to_csv(const std::vector<SimilarityPair>& pairs) {
    std::string out = "repo_a,repo_b,language,score,category,relation\n";
    for (const auto& p : pairs) {
        char score[32];
        std::snprintf(score, sizeof(score), "%.2f", p.score);
        out += p.repo_a + "," + p.repo_b + "," + p.language + "," + score + "," + p.category +
               "," +
               (p.relation == PairRelation::ParentFork ? "parent-fork" : "original-original") +
               "\n";
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"static analysis of CVE proof-of-concept repositories"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    // harvest
    auto* harvest_cmd = app.add_subcommand("harvest", "keyword-search a hosting API");
    std::string keywords_file, harvest_fixtures, harvest_out = "manifest.jsonl";
    harvest_cmd->add_option("--keywords", keywords_file, "file of CVE ids, one per line")
        ->required();
    harvest_cmd->add_option("--fixtures", harvest_fixtures,
                            "recorded search responses (hermetic)");
    harvest_cmd->add_option("--out", harvest_out, "output manifest path");

    // ingest / scan / intel / report share config flags
    auto* ingest_cmd = app.add_subcommand("ingest", "build a manifest from local checkouts");
    CommonOpts ingest_opts;
    std::string ingest_out = "out";
    add_config_flags(ingest_cmd, ingest_opts);
    ingest_cmd->add_option("--out-dir", ingest_out, "scan output directory");

    auto* scan_cmd = app.add_subcommand("scan", "full pipeline: ingest through report");
    CommonOpts scan_opts;
    std::string scan_out = "out";
    std::string scan_stage;
    add_config_flags(scan_cmd, scan_opts);
    scan_cmd->add_option("--out-dir", scan_out, "scan output directory");
    scan_cmd->add_option("--stage", scan_stage,
                         "run one stage over persisted intermediates "
                         "(ingest|extract|intel|verdict|report)");

    auto* intel_cmd = app.add_subcommand("intel", "threat-intelligence utilities");
    auto* sync_cmd = intel_cmd->add_subcommand("sync", "look up subjects and record verdicts");
    CommonOpts sync_opts;
    std::string subjects_file, sync_out = "intel_verdicts.jsonl";
    add_config_flags(sync_cmd, sync_opts);
    sync_cmd->add_option("--subjects", subjects_file,
                         "file of subjects: 'ip <addr>' or 'hash <sha256>' per line")
        ->required();
    sync_cmd->add_option("--out", sync_out);

    auto* report_cmd = app.add_subcommand("report", "re-render a finished scan");
    CommonOpts report_opts;
    std::string report_dir = "out", report_fmt = "structured";
    add_config_flags(report_cmd, report_opts);
    report_cmd->add_option("--scan-dir", report_dir, "scan output directory");
    report_cmd->add_option("--format", report_fmt, "structured|markdown|csv");

    // similarity
    auto* sim_cmd = app.add_subcommand("similarity", "pairwise code similarity");
    std::string sim_manifest, sim_verdicts, sim_mode = "originals", sim_out;
    std::size_t sim_mml = 9;
    bool sim_average = false;
    sim_cmd->add_option("--manifest", sim_manifest)->required();
    sim_cmd->add_option("--verdicts", sim_verdicts, "verdicts.jsonl from a scan");
    sim_cmd->add_option("--mode", sim_mode, "originals|forks");
    sim_cmd->add_option("--min-match-len", sim_mml);
    sim_cmd->add_flag("--average", sim_average, "average cross-file scores instead of max");
    sim_cmd->add_option("--out", sim_out, "CSV output path (default stdout)");

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "corpus analytics from a finished scan");
    CommonOpts stats_opts;
    std::string stats_dir = "out", stats_out;
    add_config_flags(stats_cmd, stats_opts);
    stats_cmd->add_option("--scan-dir", stats_dir);
    stats_cmd->add_option("--out-dir", stats_out, "where distributions/quartiles CSVs go");
    std::string stats_pairs;
    stats_cmd->add_option("--pairs", stats_pairs, "similarity CSV to include");

    // diff
    auto* diff_cmd = app.add_subcommand("diff", "compare two corpus snapshots");
    std::string diff_old, diff_new;
    diff_cmd->add_option("old", diff_old, "older snapshot JSON")->required();
    diff_cmd->add_option("new", diff_new, "newer snapshot JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*harvest_cmd) {
            std::vector<CveId> keywords = read_keywords(keywords_file);
            std::unique_ptr<HostingClient> client;
            if (!harvest_fixtures.empty()) {
                client = std::make_unique<FixtureHostingClient>(harvest_fixtures);
            } else {
                if (!std::getenv("GITHUB_TOKEN"))
                    std::cerr << "warning: GITHUB_TOKEN not set, unauthenticated search\n";
                client = std::make_unique<LiveHostingClient>();
            }
            auto records = harvest(keywords, *client);
            write_manifest(harvest_out, records);
            std::cerr << "harvested " << records.size() << " repositories\n";
            return 0;
        }

        if (*ingest_cmd) {
            stage_ingest(resolve_config(ingest_cmd, ingest_opts), ingest_out);
            return 0;
        }

        if (*scan_cmd) {
            Config cfg = resolve_config(scan_cmd, scan_opts);
            if (!scan_stage.empty()) {
                if (scan_stage == "ingest") stage_ingest(cfg, scan_out);
                else if (scan_stage == "extract") stage_extract(cfg, scan_out);
                else if (scan_stage == "intel") stage_intel(cfg, scan_out);
                else if (scan_stage == "verdict") stage_verdict(cfg, scan_out);
                else if (scan_stage == "report")
                    return stage_report(cfg, scan_out).exit_code();
                else throw UsageError("unknown stage: " + scan_stage);
                return 0;
            }
            return run_scan(cfg, scan_out).exit_code();
        }

        if (*sync_cmd) {
            Config cfg = resolve_config(sync_cmd, sync_opts);
            IpSet blocklist;
            if (!cfg.blocklist_dir.empty()) blocklist = load_blocklists(cfg.blocklist_dir).set;
            IntelConfig ic;
            ic.engine_threshold = cfg.engine_threshold;
            ic.reputation_threshold = cfg.reputation_threshold;
            bool live = !cfg.fixture_only && std::getenv("VT_API_KEY") &&
                        std::getenv("ABUSEIPDB_API_KEY");
            ic.fixture_mode = !live;
            std::unique_ptr<IntelClient> scan, reputation;
            if (live) {
                scan = std::make_unique<VirusTotalClient>();
                reputation = std::make_unique<AbuseIpDbClient>();
            } else {
                if (!cfg.fixture_only)
                    std::cerr << "warning: API keys missing, using fixtures\n";
                scan = std::make_unique<FixtureIntelClient>(cfg.intel_fixture_dir,
                                                            IntelSource::ScanService);
                reputation = std::make_unique<FixtureIntelClient>(cfg.intel_fixture_dir,
                                                                  IntelSource::ReputationDb);
            }
            IntelService service(std::move(blocklist), std::move(scan), std::move(reputation),
                                 ic);
            std::istringstream in(slurp(subjects_file));
            std::string line, out;
            while (std::getline(in, line)) {
                std::istringstream ls(line);
                std::string kind, subject;
                if (!(ls >> kind >> subject)) continue;
                if (kind == "ip") {
                    for (const auto& v : service.check_ip(subject))
                        out += intel_verdict_to_json_text(v) + "\n";
                } else if (kind == "hash") {
                    out += intel_verdict_to_json_text(service.check_hash(subject)) + "\n";
                } else {
                    throw UsageError("bad subject line: " + line);
                }
            }
            spill(sync_out, out);
            return 0;
        }

        if (*report_cmd) {
            Config cfg = resolve_config(report_cmd, report_opts);
            ScanOutcome outcome = stage_report(cfg, report_dir);
            std::cout << render(outcome.report, report_format_from_string(report_fmt));
            return outcome.exit_code();
        }

        if (*sim_cmd) {
            auto records = read_manifest(sim_manifest);
            std::map<std::string, RepoVerdict> verdicts;
            if (!sim_verdicts.empty())
                for (const auto& v : verdicts_from_jsonl(slurp(sim_verdicts)))
                    verdicts[v.repo_id] = v;
            PairMode mode;
            if (sim_mode == "originals") mode = PairMode::OriginalsOnly;
            else if (sim_mode == "forks") mode = PairMode::ParentFork;
            else throw UsageError("unknown mode: " + sim_mode);
            PairwiseOptions opts;
            opts.min_match_len = sim_mml;
            opts.aggregate_average = sim_average;
            auto pairs = pairwise(records, verdicts, mode, opts);
            std::string csv = pairs_to_csv(pairs);
            if (sim_out.empty()) std::cout << csv;
            else spill(sim_out, csv);
            return 0;
        }

        if (*stats_cmd) {
            Config cfg = resolve_config(stats_cmd, stats_opts);
            auto records = read_manifest(fs::path(stats_dir) / "manifest.jsonl");
            std::map<std::string, RepoVerdict> verdicts;
            for (const auto& v :
                 verdicts_from_jsonl(slurp(fs::path(stats_dir) / "verdicts.jsonl")))
                verdicts[v.repo_id] = v;
            std::vector<SimilarityPair> pairs;
            if (!stats_pairs.empty()) {
                std::istringstream in(slurp(stats_pairs));
                std::string line;
                std::getline(in, line); // header
                while (std::getline(in, line)) {
                    if (line.empty()) continue;
                    SimilarityPair p;
                    std::istringstream ls(line);
                    std::string score, relation;
                    std::getline(ls, p.repo_a, ',');
                    std::getline(ls, p.repo_b, ',');
                    std::getline(ls, p.language, ',');
                    std::getline(ls, score, ',');
                    std::getline(ls, p.category, ',');
                    std::getline(ls, relation, ',');
                    p.score = std::stod(score);
                    p.relation = relation == "parent-fork" ? PairRelation::ParentFork
                                                           : PairRelation::OriginalOriginal;
                    pairs.push_back(std::move(p));
                }
            }
            auto files = emit_distributions(records, verdicts, pairs);
            if (stats_out.empty()) {
                for (const auto& [name, body] : files)
                    std::cout << "# " << name << "\n" << body;
            } else {
                for (const auto& [name, body] : files) spill(fs::path(stats_out) / name, body);
            }
            (void)cfg;
            return 0;
        }

        if (*diff_cmd) {
            auto statuses = diff_snapshots(read_snapshot(diff_old), read_snapshot(diff_new));
            for (const auto& [repo_id, status] : statuses)
                std::cout << repo_id << "," << to_string(status) << "\n";
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
