#include "pocscan/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pocscan/errors.hpp"
#include "pocscan/intel.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace pocscan {

namespace {

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string slurp_or_empty(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "";
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

std::vector<std::string> load_lexicon(const std::string& file,
                                      std::vector<std::string> fallback) {
    if (file.empty()) return fallback;
    std::istringstream in(read_text_file(file));
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::transform(line.begin(), line.end(), line.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        out.push_back(line);
    }
    return out;
}

std::string now_utc_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Run fn(i) for i in [0, n) on a bounded pool. Exceptions are rethrown.
void run_parallel(std::size_t n, const std::function<void(std::size_t)>& fn) {
    std::size_t workers = std::min<std::size_t>(
        n, std::max(1u, std::min(8u, std::thread::hardware_concurrency())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
                next.store(n);
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---- intermediate file names ----

fs::path manifest_path(const fs::path& d) { return d / "manifest.jsonl"; }
fs::path excluded_path(const fs::path& d) { return d / "excluded.jsonl"; }
fs::path indicators_path(const fs::path& d) { return d / "indicators.json"; }
fs::path review_path(const fs::path& d) { return d / "review_queue.jsonl"; }
fs::path intel_path(const fs::path& d) { return d / "intel_verdicts.jsonl"; }
fs::path verdicts_path(const fs::path& d) { return d / "verdicts.jsonl"; }
fs::path binary_decisions_path(const fs::path& d) { return d / "binary_decisions.json"; }

// ---- json helpers for intermediates ----

json candidate_to_json(const IpCandidate& c) {
    return json{{"literal", c.literal},
                {"file", c.file},
                {"offset", c.offset},
                {"context", to_string(c.context)},
                {"class", to_string(c.classification)}};
}

IpContext context_from_string(const std::string& s) {
    if (s == "comment") return IpContext::Comment;
    if (s == "doc") return IpContext::Doc;
    if (s == "decoded-payload") return IpContext::DecodedPayload;
    return IpContext::Code;
}

IpClass class_from_string(const std::string& s) {
    if (s == "private") return IpClass::Private;
    if (s == "reserved") return IpClass::Reserved;
    return IpClass::Public;
}

IpCandidate candidate_from_json(const json& j) {
    IpCandidate c;
    c.literal = j.at("literal").get<std::string>();
    c.file = j.at("file").get<std::string>();
    c.offset = j.at("offset").get<std::size_t>();
    c.context = context_from_string(j.at("context").get<std::string>());
    c.classification = class_from_string(j.at("class").get<std::string>());
    return c;
}

std::string bytes_to_hex(const std::vector<std::uint8_t>& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

std::vector<std::uint8_t> hex_to_bytes(const std::string& hex) {
    auto nibble = [](char c) -> std::uint8_t {
        if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
        return static_cast<std::uint8_t>(c - 'a' + 10);
    };
    std::vector<std::uint8_t> out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i + 1 < hex.size(); i += 2)
        out.push_back(static_cast<std::uint8_t>((nibble(hex[i]) << 4) | nibble(hex[i + 1])));
    return out;
}

json payload_to_json(const EncodedPayload& p) {
    json ips = json::array();
    for (const auto& ip : p.embedded_ips) ips.push_back(candidate_to_json(ip));
    return json{{"encoding", to_string(p.encoding)},
                {"source_file", p.source_file},
                {"raw", p.raw},
                {"decoded_hex", bytes_to_hex(p.decoded)},
                {"printable", p.printable},
                {"depth", p.depth},
                {"truncated_nibble", p.truncated_nibble},
                {"embedded_ips", ips},
                {"embedded_urls", p.embedded_urls}};
}

EncodedPayload payload_from_json(const json& j) {
    EncodedPayload p;
    p.encoding = j.at("encoding").get<std::string>() == "hex" ? PayloadEncoding::Hex
                                                              : PayloadEncoding::Base64;
    p.source_file = j.at("source_file").get<std::string>();
    p.raw = j.at("raw").get<std::string>();
    p.decoded = hex_to_bytes(j.at("decoded_hex").get<std::string>());
    p.printable = j.at("printable").get<bool>();
    p.depth = j.at("depth").get<int>();
    p.truncated_nibble = j.at("truncated_nibble").get<bool>();
    for (const auto& e : j.at("embedded_ips")) p.embedded_ips.push_back(candidate_from_json(e));
    p.embedded_urls = j.at("embedded_urls").get<std::vector<std::string>>();
    return p;
}

json review_to_json(const ReviewEntry& r) {
    return json{{"file", r.file}, {"offset", r.offset}, {"literal", r.literal},
                {"reason", r.reason}};
}

ReviewEntry review_from_json(const json& j) {
    ReviewEntry r;
    r.file = j.at("file").get<std::string>();
    r.offset = j.at("offset").get<std::size_t>();
    r.literal = j.at("literal").get<std::string>();
    r.reason = j.at("reason").get<std::string>();
    return r;
}

IntelSource source_from_string(const std::string& s) {
    if (s == "blocklist") return IntelSource::Blocklist;
    if (s == "scan-service") return IntelSource::ScanService;
    if (s == "reputation-db") return IntelSource::ReputationDb;
    return IntelSource::Fixture;
}

std::map<std::string, std::vector<IntelVerdict>> read_intel_file(const fs::path& path) {
    std::map<std::string, std::vector<IntelVerdict>> out;
    std::istringstream in(slurp_or_empty(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        const json& vj = j.at("verdict");
        IntelVerdict v = intel_verdict_from_json_text(
            vj.dump(), vj.at("subject").get<std::string>(),
            source_from_string(vj.at("source").get<std::string>()));
        out[v.subject].push_back(v);
    }
    return out;
}

std::unique_ptr<IntelClient> make_client(const Config& cfg, IntelSource source,
                                         bool& fixture_used) {
    bool vt_key = std::getenv("VT_API_KEY") != nullptr;
    bool abuse_key = std::getenv("ABUSEIPDB_API_KEY") != nullptr;
    if (!cfg.fixture_only) {
        if (source == IntelSource::ScanService && vt_key)
            return std::make_unique<VirusTotalClient>();
        if (source == IntelSource::ReputationDb && abuse_key)
            return std::make_unique<AbuseIpDbClient>();
        std::cerr << "warning: no API key for " << to_string(source)
                  << ", falling back to fixture lookups\n";
    }
    fixture_used = true;
    return std::make_unique<FixtureIntelClient>(cfg.intel_fixture_dir, source);
}

IntelService build_intel_service(const Config& cfg) {
    IpSet blocklist;
    if (!cfg.blocklist_dir.empty()) blocklist = load_blocklists(cfg.blocklist_dir).set;
    bool fixture_used = cfg.fixture_only;
    auto scan = make_client(cfg, IntelSource::ScanService, fixture_used);
    auto reputation = make_client(cfg, IntelSource::ReputationDb, fixture_used);
    IntelConfig ic;
    ic.engine_threshold = cfg.engine_threshold;
    ic.reputation_threshold = cfg.reputation_threshold;
    ic.fixture_mode = fixture_used;
    ic.upload_enabled = cfg.upload_enabled && !fixture_used;
    return IntelService(std::move(blocklist), std::move(scan), std::move(reputation), ic);
}

} // namespace

// ---- config ----

std::string config_to_json(const Config& cfg) {
    ordered_json j{{"corpus_root", cfg.corpus_root},
                   {"blocklist_dir", cfg.blocklist_dir},
                   {"intel_fixture_dir", cfg.intel_fixture_dir},
                   {"hacktool_lexicon_file", cfg.hacktool_lexicon_file},
                   {"execution_lexicon_file", cfg.execution_lexicon_file},
                   {"nvd_totals_file", cfg.nvd_totals_file},
                   {"cwe_map_file", cfg.cwe_map_file},
                   {"engine_threshold", cfg.engine_threshold},
                   {"reputation_threshold", cfg.reputation_threshold},
                   {"base64_min_length", cfg.base64_min_length},
                   {"payload_max_depth", cfg.payload_max_depth},
                   {"min_match_len", cfg.min_match_len},
                   {"exact_test_cap", cfg.exact_test_cap},
                   {"ioc_cve_threshold", cfg.ioc_cve_threshold},
                   {"originals_only", cfg.originals_only},
                   {"upload_enabled", cfg.upload_enabled},
                   {"fixture_only", cfg.fixture_only}};
    return j.dump(2);
}

Config load_config_file(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("bad config " + path.string() + ": " + e.what());
    }
    Config cfg;
    cfg.corpus_root = j.value("corpus_root", cfg.corpus_root);
    cfg.blocklist_dir = j.value("blocklist_dir", cfg.blocklist_dir);
    cfg.intel_fixture_dir = j.value("intel_fixture_dir", cfg.intel_fixture_dir);
    cfg.hacktool_lexicon_file = j.value("hacktool_lexicon_file", cfg.hacktool_lexicon_file);
    cfg.execution_lexicon_file = j.value("execution_lexicon_file", cfg.execution_lexicon_file);
    cfg.nvd_totals_file = j.value("nvd_totals_file", cfg.nvd_totals_file);
    cfg.cwe_map_file = j.value("cwe_map_file", cfg.cwe_map_file);
    cfg.engine_threshold = j.value("engine_threshold", cfg.engine_threshold);
    cfg.reputation_threshold = j.value("reputation_threshold", cfg.reputation_threshold);
    cfg.base64_min_length = j.value("base64_min_length", cfg.base64_min_length);
    cfg.payload_max_depth = j.value("payload_max_depth", cfg.payload_max_depth);
    cfg.min_match_len = j.value("min_match_len", cfg.min_match_len);
    cfg.exact_test_cap = j.value("exact_test_cap", cfg.exact_test_cap);
    cfg.ioc_cve_threshold = j.value("ioc_cve_threshold", cfg.ioc_cve_threshold);
    cfg.originals_only = j.value("originals_only", cfg.originals_only);
    cfg.upload_enabled = j.value("upload_enabled", cfg.upload_enabled);
    cfg.fixture_only = j.value("fixture_only", cfg.fixture_only);
    return cfg;
}

// ---- indicators persistence ----

void write_indicators(const fs::path& path, const std::vector<RepoIndicators>& indicators) {
    json out = json::array();
    for (const auto& r : indicators) {
        json ips = json::array(), payloads = json::array(), binaries = json::array(),
             review = json::array();
        for (const auto& c : r.ips) ips.push_back(candidate_to_json(c));
        for (const auto& p : r.payloads) payloads.push_back(payload_to_json(p));
        for (const auto& b : r.binaries)
            binaries.push_back(json{{"path", b.path},
                                    {"size", b.size},
                                    {"sha256", b.sha256},
                                    {"magic", b.magic}});
        for (const auto& e : r.review) review.push_back(review_to_json(e));
        out.push_back(json{{"repo_id", r.repo_id},
                           {"ips", ips},
                           {"payloads", payloads},
                           {"binaries", binaries},
                           {"review", review}});
    }
    write_text_file(path, out.dump(2) + "\n");
}

std::vector<RepoIndicators> read_indicators(const fs::path& path) {
    json in = json::parse(read_text_file(path));
    std::vector<RepoIndicators> out;
    for (const auto& j : in) {
        RepoIndicators r;
        r.repo_id = j.at("repo_id").get<std::string>();
        for (const auto& e : j.at("ips")) r.ips.push_back(candidate_from_json(e));
        for (const auto& e : j.at("payloads")) r.payloads.push_back(payload_from_json(e));
        for (const auto& e : j.at("binaries")) {
            BinaryArtifact b;
            b.path = e.at("path").get<std::string>();
            b.size = e.at("size").get<std::uint64_t>();
            b.sha256 = e.at("sha256").get<std::string>();
            b.magic = e.at("magic").get<std::string>();
            r.binaries.push_back(std::move(b));
        }
        for (const auto& e : j.at("review")) r.review.push_back(review_from_json(e));
        out.push_back(std::move(r));
    }
    return out;
}

// ---- stage: ingest ----

namespace {

// repo.json is the per-directory metadata convention for local corpora; it
// is dropped from the inventory so its contents never count as PoC code.
constexpr const char* kRepoMetaFile = "repo.json";

void apply_repo_metadata(RepoRecord& rec, const fs::path& meta_file) {
    std::string text = slurp_or_empty(meta_file);
    if (text.empty()) return;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IngestError("bad metadata " + meta_file.string() + ": " + e.what());
    }
    rec.repo_id = j.value("repo_id", rec.repo_id);
    rec.owner = j.value("owner", rec.owner);
    rec.name = j.value("name", rec.name);
    rec.description = j.value("description", rec.description);
    rec.primary_language = j.value("primary_language", rec.primary_language);
    rec.stars = j.value("stars", rec.stars);
    rec.forks = j.value("forks", rec.forks);
    rec.created_at = j.value("created_at", rec.created_at);
    rec.updated_at = j.value("updated_at", rec.updated_at);
    rec.pushed_at = j.value("pushed_at", rec.pushed_at);
    rec.is_fork = j.value("is_fork", rec.is_fork);
    if (j.contains("parent_id") && j["parent_id"].is_string())
        rec.parent_id = j["parent_id"].get<std::string>();
    for (const auto& c : j.value("cve_ids", json::array()))
        if (auto id = parse_cve_id(c.get<std::string>())) rec.cve_ids.insert(*id);
}

FileInventory inventory_without_meta(const fs::path& root) {
    FileInventory inv = scan_repo_files(root);
    std::erase_if(inv.text_files,
                  [](const TextFileEntry& e) { return e.path == kRepoMetaFile; });
    return inv;
}

} // namespace

void stage_ingest(const Config& cfg, const fs::path& out_dir) {
    if (cfg.corpus_root.empty()) throw ConfigError("corpus_root not set");
    fs::path root(cfg.corpus_root);
    if (!fs::is_directory(root)) throw IngestError("corpus root missing: " + root.string());
    fs::create_directories(out_dir);

    std::vector<fs::path> repo_dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) repo_dirs.push_back(entry.path());
    std::sort(repo_dirs.begin(), repo_dirs.end());

    std::vector<RepoRecord> records(repo_dirs.size());
    std::vector<char> ioc(repo_dirs.size(), 0);
    run_parallel(repo_dirs.size(), [&](std::size_t i) {
        const fs::path& dir = repo_dirs[i];
        RepoRecord rec;
        rec.repo_id = dir.filename().string();
        rec.name = rec.repo_id;
        rec.local_path = dir.string();
        apply_repo_metadata(rec, dir / kRepoMetaFile);

        for (const auto& id : extract_cve_ids(rec.name)) rec.cve_ids.insert(id);
        for (const auto& id : extract_cve_ids(rec.description)) rec.cve_ids.insert(id);

        FileInventory inv = inventory_without_meta(dir);
        bool ioc_seen = contains_ioc_marker(rec.description);
        std::map<std::string, std::int64_t> language_bytes;
        for (const auto& tf : inv.text_files) {
            std::string content = slurp_or_empty(dir / tf.path);
            for (const auto& id : extract_cve_ids(content)) rec.cve_ids.insert(id);
            for (const auto& id : extract_cve_ids(tf.path)) rec.cve_ids.insert(id);
            if (!ioc_seen && contains_ioc_marker(content)) ioc_seen = true;
            if (!tf.language.empty())
                language_bytes[tf.language] += static_cast<std::int64_t>(tf.size);
        }
        if (rec.primary_language == "Undetected" && !language_bytes.empty()) {
            auto best = std::max_element(
                language_bytes.begin(), language_bytes.end(),
                [](const auto& a, const auto& b) { return a.second < b.second; });
            rec.primary_language = best->first;
        }
        records[i] = std::move(rec);
        ioc[i] = ioc_seen ? 1 : 0;
    });

    std::set<std::string> ioc_flagged;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (ioc[i]) ioc_flagged.insert(records[i].repo_id);

    CleanResult cleaned = clean_corpus(records, ioc_flagged, cfg.ioc_cve_threshold);
    write_manifest(manifest_path(out_dir), cleaned.kept);

    std::string excluded_lines;
    for (const auto& ex : cleaned.excluded) {
        json rec_json = json::parse(manifest_to_jsonl({ex.record}));
        excluded_lines += json{{"kind", ex.kind == ExclusionKind::NoCve ? "no-cve"
                                                                        : "ioc-review"},
                               {"reason", ex.reason},
                               {"record", rec_json}}
                              .dump() +
                          "\n";
    }
    write_text_file(excluded_path(out_dir), excluded_lines);
}

// ---- stage: extract ----

void stage_extract(const Config& cfg, const fs::path& out_dir) {
    std::vector<RepoRecord> records = read_manifest(manifest_path(out_dir));
    std::vector<RepoIndicators> indicators(records.size());

    Base64Options b64;
    b64.min_length = cfg.base64_min_length;
    b64.max_depth = cfg.payload_max_depth;

    run_parallel(records.size(), [&](std::size_t i) {
        const RepoRecord& rec = records[i];
        RepoIndicators out;
        out.repo_id = rec.repo_id;
        if (!rec.local_path) {
            indicators[i] = std::move(out);
            return;
        }
        fs::path root(*rec.local_path);
        FileInventory inv = inventory_without_meta(root);
        for (const auto& tf : inv.text_files) {
            std::string content = slurp_or_empty(root / tf.path);
            std::string ref = rec.repo_id + "/" + tf.path;
            auto candidates = extract_ips(content, ref);
            auto kept = filter_public(candidates, out.review);
            out.ips.insert(out.ips.end(), kept.begin(), kept.end());
            auto hex = extract_hex_payloads(content, ref);
            out.payloads.insert(out.payloads.end(), hex.begin(), hex.end());
            auto b = extract_base64_payloads(content, ref, b64);
            out.payloads.insert(out.payloads.end(), b.begin(), b.end());
        }
        HashResult hashed = hash_binaries(root, inv);
        out.binaries = std::move(hashed.artifacts);
        indicators[i] = std::move(out);
    });

    write_indicators(indicators_path(out_dir), indicators);

    std::string review_lines;
    for (const auto& r : indicators)
        for (const auto& e : r.review) review_lines += review_to_json(e).dump() + "\n";
    write_text_file(review_path(out_dir), review_lines);
}

// ---- stage: intel ----

void stage_intel(const Config& cfg, const fs::path& out_dir) {
    std::vector<RepoIndicators> indicators = read_indicators(indicators_path(out_dir));

    // Subjects, in deterministic order; duplicates collapse.
    std::set<std::string> ips, hashes;
    for (const auto& r : indicators) {
        for (const auto& c : r.ips)
            if (c.classification == IpClass::Public) ips.insert(c.literal);
        for (const auto& p : r.payloads)
            for (const auto& c : p.embedded_ips)
                if (c.classification == IpClass::Public) ips.insert(c.literal);
        for (const auto& b : r.binaries) hashes.insert(b.sha256);
    }

    // Verdicts from a previous run act as a cache: only new subjects are
    // looked up, so interrupted scans resume cheaply.
    auto existing = read_intel_file(intel_path(out_dir));
    std::vector<json> lines;
    auto emit = [&](const IntelVerdict& v, const char* kind) {
        lines.push_back(json{{"kind", kind},
                             {"verdict", json::parse(intel_verdict_to_json_text(v))}});
    };
    for (const auto& [subject, verdicts] : existing) {
        bool is_hash = hashes.count(subject) > 0 && ips.count(subject) == 0;
        for (const auto& v : verdicts) emit(v, is_hash ? "hash" : "ip");
    }

    IntelService service = build_intel_service(cfg);
    for (const auto& ip : ips) {
        if (existing.count(ip)) continue;
        for (const auto& v : service.check_ip(ip)) emit(v, "ip");
    }
    for (const auto& h : hashes) {
        if (existing.count(h)) continue;
        emit(service.check_hash(h), "hash");
    }

    std::string text;
    for (const auto& l : lines) text += l.dump() + "\n";
    write_text_file(intel_path(out_dir), text);
}

// ---- stage: verdict ----

void stage_verdict(const Config& cfg, const fs::path& out_dir) {
    std::vector<RepoRecord> records = read_manifest(manifest_path(out_dir));
    std::vector<RepoIndicators> indicators = read_indicators(indicators_path(out_dir));
    auto intel = read_intel_file(intel_path(out_dir));

    std::map<std::string, const RepoIndicators*> by_repo;
    for (const auto& r : indicators) by_repo[r.repo_id] = &r;

    auto hacktools = load_lexicon(cfg.hacktool_lexicon_file, default_hacktool_lexicon());
    auto exec_terms = load_lexicon(cfg.execution_lexicon_file, default_execution_lexicon());
    std::string decided_at = cfg.fixture_only ? "1970-01-01T00:00:00Z" : now_utc_iso8601();

    std::vector<RepoVerdict> verdicts;
    std::map<std::string, BinaryDecision> binary_by_hash;
    for (const auto& rec : records) {
        std::vector<IpFinding> ip_findings;
        std::vector<BinaryFinding> binary_findings;
        std::vector<PayloadFinding> payload_findings;
        auto it = by_repo.find(rec.repo_id);
        if (it != by_repo.end()) {
            const RepoIndicators& ind = *it->second;
            for (const auto& c : ind.ips) {
                IpFinding f;
                f.candidate = c;
                if (auto v = intel.find(c.literal); v != intel.end()) f.verdicts = v->second;
                ip_findings.push_back(std::move(f));
            }
            for (const auto& b : ind.binaries) {
                IntelVerdict report;
                report.subject = b.sha256;
                report.source = IntelSource::ScanService;
                report.status = IntelStatus::Unknown;
                if (auto v = intel.find(b.sha256); v != intel.end()) {
                    for (const auto& cand : v->second)
                        if (cand.source == IntelSource::ScanService) report = cand;
                }
                BinaryFinding f;
                f.artifact = b;
                f.decision = classify_binary(report, rec.cve_ids, hacktools);
                binary_by_hash[b.sha256] = f.decision;
                binary_findings.push_back(std::move(f));
            }
            for (const auto& p : ind.payloads) {
                std::vector<IntelVerdict> embedded;
                for (const auto& c : p.embedded_ips) {
                    if (auto v = intel.find(c.literal); v != intel.end())
                        embedded.insert(embedded.end(), v->second.begin(), v->second.end());
                }
                PayloadFinding f;
                f.payload = p;
                f.classification = classify_payload(p, embedded, exec_terms);
                payload_findings.push_back(std::move(f));
            }
        }
        verdicts.push_back(
            aggregate_repo(rec, ip_findings, binary_findings, payload_findings, decided_at));
    }

    write_text_file(verdicts_path(out_dir), verdicts_to_jsonl(verdicts));

    ordered_json decisions = ordered_json::object();
    for (const auto& [hash, d] : binary_by_hash)
        decisions[hash] = ordered_json{{"label", to_string(d.label)}, {"note", d.note}};
    write_text_file(binary_decisions_path(out_dir), decisions.dump(2) + "\n");
}

// ---- stage: report ----

ScanOutcome stage_report(const Config& cfg, const fs::path& out_dir) {
    std::vector<RepoRecord> records = read_manifest(manifest_path(out_dir));
    std::vector<RepoVerdict> verdicts =
        verdicts_from_jsonl(slurp_or_empty(verdicts_path(out_dir)));

    std::map<std::string, RepoVerdict> verdict_map;
    for (const auto& v : verdicts) verdict_map[v.repo_id] = v;

    std::map<std::string, BinaryDecision> binary_by_hash;
    {
        std::string text = slurp_or_empty(binary_decisions_path(out_dir));
        if (!text.empty()) {
            json j = json::parse(text);
            for (const auto& [hash, d] : j.items()) {
                BinaryDecision dec;
                std::string label = d.value("label", "Clean");
                dec.label = label == "Malicious"     ? BinaryLabel::Malicious
                            : label == "CveRelated"  ? BinaryLabel::CveRelated
                            : label == "Hacktool"    ? BinaryLabel::Hacktool
                                                     : BinaryLabel::Clean;
                dec.note = d.value("note", "");
                binary_by_hash[hash] = dec;
            }
        }
    }

    std::map<int, std::int64_t> nvd_totals;
    if (!cfg.nvd_totals_file.empty()) nvd_totals = load_nvd_totals(cfg.nvd_totals_file);
    std::map<std::string, std::string> cwe_map;
    if (!cfg.cwe_map_file.empty()) cwe_map = load_cwe_map(cfg.cwe_map_file);

    ScanReport report;
    // relative to the scan directory, so reports from identical scans are
    // byte-identical regardless of where the output lives
    report.manifest_ref = manifest_path(out_dir).filename().string();
    report.tool_version = kToolVersion;
    report.config_echo_json = config_to_json(cfg);
    report.verdicts = verdicts;
    report.stats = summarize(records, verdict_map, binary_by_hash, nvd_totals, cwe_map);

    for (const auto& [subject, vs] : read_intel_file(intel_path(out_dir))) {
        (void)subject;
        for (const auto& v : vs) {
            std::string key = to_string(v.source);
            auto& health = report.intel_health[key];
            if (health.empty()) health = "ok";
            if (v.status == IntelStatus::Unavailable) health = "unavailable";
        }
    }

    {
        std::istringstream in(slurp_or_empty(review_path(out_dir)));
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) report.review_queue.push_back(review_from_json(json::parse(line)));
    }
    {
        std::istringstream in(slurp_or_empty(excluded_path(out_dir)));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            ExcludedRecord ex{manifest_from_jsonl(j.at("record").dump()).at(0),
                              j.at("kind").get<std::string>() == "no-cve"
                                  ? ExclusionKind::NoCve
                                  : ExclusionKind::IocReview,
                              j.at("reason").get<std::string>()};
            report.excluded.push_back(std::move(ex));
        }
    }

    write_text_file(out_dir / "report.json", render(report, ReportFormat::Structured));
    write_text_file(out_dir / "report.md", render(report, ReportFormat::Markdown));
    write_csv_tables(report, out_dir / "tables");

    ScanOutcome outcome;
    outcome.report = std::move(report);
    for (const auto& v : verdicts)
        if (v.malicious) outcome.malicious_found = true;
    return outcome;
}

ScanOutcome run_scan(const Config& cfg, const fs::path& out_dir) {
    stage_ingest(cfg, out_dir);
    stage_extract(cfg, out_dir);
    stage_intel(cfg, out_dir);
    stage_verdict(cfg, out_dir);
    return stage_report(cfg, out_dir);
}

} // namespace pocscan
