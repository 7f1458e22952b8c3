#include <doctest.h>

#include <filesystem>
#include <random>

#include "pocscan/verdict.hpp"
#include "support/fixtures.hpp"

using namespace pocscan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("pocscan-verdict-" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

CveId cve(int year, const std::string& number) {
    CveId c;
    c.year = year;
    c.number = number;
    return c;
}

IntelVerdict scan_report(bool malicious, std::vector<std::string> labels) {
    IntelVerdict v;
    v.subject = std::string(64, 'a');
    v.source = IntelSource::ScanService;
    v.status = IntelStatus::Ok;
    v.malicious = malicious;
    v.detection_count = malicious ? 10 : 0;
    v.labels = std::move(labels);
    return v;
}

EncodedPayload payload_with(const std::string& text, bool with_ip, bool with_url) {
    EncodedPayload p;
    p.encoding = PayloadEncoding::Base64;
    p.source_file = "poc.py";
    p.decoded.assign(text.begin(), text.end());
    p.printable = true;
    if (with_ip) {
        IpCandidate c;
        c.literal = "54.184.20.69";
        c.context = IpContext::DecodedPayload;
        c.classification = IpClass::Public;
        p.embedded_ips.push_back(c);
    }
    if (with_url) p.embedded_urls.push_back("http://54.184.20.69/x");
    return p;
}

RepoRecord repo(const std::string& id, const std::string& owner = "alice") {
    RepoRecord r;
    r.repo_id = id;
    r.owner = owner;
    r.name = id;
    r.cve_ids.insert(cve(2019, "0709"));
    return r;
}

} // namespace

// ---- classify_binary: the full decision table ----

TEST_CASE("binary triage decision table: all 8 combinations") {
    std::set<CveId> cves{cve(2019, "0709")};
    // label sets inducing (cve-related?, hacktool?) truth values
    struct Row {
        bool flagged, cve_related, hacktool;
        BinaryLabel expected;
    };
    const Row rows[] = {
        {false, false, false, BinaryLabel::Clean},
        {false, false, true, BinaryLabel::Clean},
        {false, true, false, BinaryLabel::Clean},
        {false, true, true, BinaryLabel::Clean},
        {true, false, false, BinaryLabel::Malicious},
        {true, false, true, BinaryLabel::Hacktool},
        {true, true, false, BinaryLabel::CveRelated},
        {true, true, true, BinaryLabel::CveRelated}, // cve branch first
    };
    for (const auto& row : rows) {
        std::vector<std::string> labels;
        if (row.cve_related) labels.push_back("exploit.cve-2019-0709");
        if (row.hacktool) labels.push_back("netcat");
        if (labels.empty()) labels.push_back("generic.malware");
        BinaryDecision d = classify_binary(scan_report(row.flagged, labels), cves);
        CHECK_MESSAGE(d.label == row.expected,
                      "flagged=" << row.flagged << " cve=" << row.cve_related
                                 << " hack=" << row.hacktool);
    }
}

TEST_CASE("cobaltstrike on a CVE repo is Malicious") {
    std::set<CveId> cves{cve(2019, "0709")};
    BinaryDecision d = classify_binary(scan_report(true, {"cobaltstrike"}), cves);
    CHECK(d.label == BinaryLabel::Malicious);
}

TEST_CASE("unknown report is Clean with an annotation") {
    IntelVerdict unknown;
    unknown.subject = std::string(64, 'b');
    unknown.source = IntelSource::ScanService;
    unknown.status = IntelStatus::Unknown;
    BinaryDecision d = classify_binary(unknown, {});
    CHECK(d.label == BinaryLabel::Clean);
    CHECK(d.note == "unknown");
}

TEST_CASE("hacktool lexicon ships the documented tools") {
    auto lex = default_hacktool_lexicon();
    for (const char* tool : {"netcat", "rubeus", "powersploit", "ysoserial"})
        CHECK(std::find(lex.begin(), lex.end(), tool) != lex.end());
}

// ---- classify_payload ----

TEST_CASE("payload with public IP is at least suspicious") {
    auto p = payload_with("http://54.184.20.69/poc2.php", true, true);
    CHECK(classify_payload(p, {}) == PayloadClass::Suspicious);
}

TEST_CASE("plain text payload is benign") {
    auto p = payload_with("hello world", false, false);
    CHECK(classify_payload(p, {}) == PayloadClass::Benign);
}

TEST_CASE("malicious IP verdict upgrades payload to malicious") {
    auto p = payload_with("http://54.184.20.69/x", true, true);
    IntelVerdict v;
    v.subject = "54.184.20.69";
    v.source = IntelSource::Blocklist;
    v.malicious = true;
    CHECK(classify_payload(p, {v}) == PayloadClass::Malicious);
}

TEST_CASE("execution lexicon upgrades payload to malicious") {
    auto p = payload_with("import os; os.system('id') # http://54.184.20.69/x", true, true);
    CHECK(classify_payload(p, {}) == PayloadClass::Malicious);
}

TEST_CASE("private-only embedded IP stays benign") {
    EncodedPayload p = payload_with("10.0.0.1", false, false);
    IpCandidate c;
    c.literal = "10.0.0.1";
    c.classification = IpClass::Private;
    c.context = IpContext::DecodedPayload;
    p.embedded_ips.push_back(c);
    CHECK(classify_payload(p, {}) == PayloadClass::Benign);
}

// ---- aggregate_repo ----

namespace {

IpFinding malicious_ip_finding() {
    IpFinding f;
    f.candidate.literal = "45.77.30.10";
    f.candidate.file = "x.py";
    f.candidate.context = IpContext::Code;
    f.candidate.classification = IpClass::Public;
    IntelVerdict v;
    v.subject = f.candidate.literal;
    v.source = IntelSource::ScanService;
    v.malicious = true;
    f.verdicts.push_back(v);
    return f;
}

BinaryFinding malicious_binary_finding() {
    BinaryFinding f;
    f.artifact.path = "tool.exe";
    f.artifact.sha256 = std::string(64, 'a');
    f.decision.label = BinaryLabel::Malicious;
    return f;
}

PayloadFinding malicious_payload_finding() {
    PayloadFinding f;
    f.payload = payload_with("http://54.184.20.69/x", true, true);
    f.classification = PayloadClass::Malicious;
    return f;
}

} // namespace

TEST_CASE("one Malicious binary makes the repo malicious") {
    RepoVerdict v = aggregate_repo(repo("r"), {}, {malicious_binary_finding()}, {}, "t");
    CHECK(v.malicious);
    REQUIRE(v.findings.size() == 1);
    CHECK(v.findings[0].heuristic == Heuristic::Binary);
}

TEST_CASE("no findings means benign") {
    RepoVerdict v = aggregate_repo(repo("r"), {}, {}, {}, "t");
    CHECK(!v.malicious);
    CHECK(v.findings.empty());
}

TEST_CASE("two heuristics yield one verdict with two findings") {
    RepoVerdict v = aggregate_repo(repo("r"), {}, {malicious_binary_finding()},
                                   {malicious_payload_finding()}, "t");
    CHECK(v.malicious);
    CHECK(v.findings.size() == 2);
}

TEST_CASE("clean or non-contributing findings do not flag the repo") {
    BinaryFinding hacktool;
    hacktool.artifact.path = "nc.exe";
    hacktool.decision.label = BinaryLabel::Hacktool;
    PayloadFinding suspicious;
    suspicious.payload = payload_with("http://54.184.20.69/x", true, true);
    suspicious.classification = PayloadClass::Suspicious;
    IpFinding clean_ip = malicious_ip_finding();
    clean_ip.verdicts[0].malicious = false;
    RepoVerdict v = aggregate_repo(repo("r"), {clean_ip}, {hacktool}, {suspicious}, "t");
    CHECK(!v.malicious);
}

TEST_CASE("comment-context IPs never contribute") {
    IpFinding f = malicious_ip_finding();
    f.candidate.context = IpContext::Comment;
    RepoVerdict v = aggregate_repo(repo("r"), {f}, {}, {}, "t");
    CHECK(!v.malicious);
}

TEST_CASE("property: adding a finding never un-flags a repo") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<IpFinding> ips;
        std::vector<BinaryFinding> bins;
        std::vector<PayloadFinding> pays;
        if (rng() % 2) ips.push_back(malicious_ip_finding());
        if (rng() % 2) bins.push_back(malicious_binary_finding());
        if (rng() % 2) pays.push_back(malicious_payload_finding());
        RepoVerdict before = aggregate_repo(repo("r"), ips, bins, pays, "t");
        pays.push_back(malicious_payload_finding());
        RepoVerdict after = aggregate_repo(repo("r"), ips, bins, pays, "t");
        if (before.malicious) CHECK(after.malicious);
        CHECK(after.findings.size() >= before.findings.size());
        CHECK(after.malicious == !after.findings.empty());
    }
}

// ---- format_percent / summarize ----

TEST_CASE("percentage rounding matches the published table value") {
    CHECK(format_percent(338, 14696) == "2.30");
}

TEST_CASE("format_percent half-up behavior") {
    CHECK(format_percent(1, 8) == "12.50");
    CHECK(format_percent(1, 3) == "33.33");
    CHECK(format_percent(2, 3) == "66.67");
    CHECK(format_percent(25, 10000) == "0.25");
    CHECK(format_percent(1, 40000) == "0.00");   // 0.0025 rounds to 0.00? -> 0.0025*100=0.25 hundredths => 0.00
    CHECK(format_percent(0, 5) == "0.00");
    CHECK(format_percent(5, 5) == "100.00");
}

TEST_CASE("summarize over a small hand-counted corpus") {
    std::vector<RepoRecord> records;
    for (int i = 0; i < 10; ++i) {
        RepoRecord r = repo("r" + std::to_string(i));
        r.primary_language = i < 6 ? "Python" : (i < 9 ? "C" : "");
        r.cve_ids.clear();
        r.cve_ids.insert(cve(2019, i < 5 ? "1000" : "2000"));
        if (i == 0) r.cve_ids.insert(cve(2021, "44228"));
        records.push_back(r);
    }
    std::map<std::string, RepoVerdict> verdicts;
    for (int i = 0; i < 3; ++i) {
        RepoVerdict v;
        v.repo_id = "r" + std::to_string(i);
        v.malicious = true;
        v.findings.push_back({i == 0 ? Heuristic::Ip : Heuristic::Base64, "e", "d"});
        verdicts[v.repo_id] = v;
    }
    std::map<int, std::int64_t> nvd{{2019, 14696}};
    SummaryStats s = summarize(records, verdicts, {}, nvd, {});
    CHECK(s.total_repos == 10);
    CHECK(s.total_malicious == 3);
    CHECK(s.per_language.at("Python") == 6);
    CHECK(s.per_language.at("C") == 3);
    CHECK(s.per_language.at("Undetected") == 1);
    const YearStats& y2019 = s.per_year.at(2019);
    CHECK(y2019.repo_count == 10);
    CHECK(y2019.malicious_count == 3);
    CHECK(y2019.ip_malicious == 1);
    CHECK(y2019.base64_malicious == 2);
    CHECK(y2019.unique_cves == 2);
    REQUIRE(y2019.pct_of_nvd.has_value());
    CHECK(*y2019.pct_of_nvd == "0.01");
    const YearStats& y2021 = s.per_year.at(2021);
    CHECK(y2021.repo_count == 1);
    CHECK(!y2021.pct_of_nvd.has_value()); // no nvd total supplied for 2021
}

TEST_CASE("summarize on empty corpus is all zero") {
    SummaryStats s = summarize({}, {}, {}, {}, {});
    CHECK(s.total_repos == 0);
    CHECK(s.total_malicious == 0);
    CHECK(s.per_year.empty());
    CHECK(s.per_language.empty());
}

TEST_CASE("summarize is permutation-invariant") {
    std::vector<RepoRecord> records;
    for (int i = 0; i < 8; ++i) {
        RepoRecord r = repo("p" + std::to_string(i));
        r.primary_language = i % 2 ? "Python" : "Go";
        records.push_back(r);
    }
    std::map<std::string, RepoVerdict> verdicts;
    RepoVerdict v;
    v.repo_id = "p3";
    v.malicious = true;
    v.findings.push_back({Heuristic::Hex, "e", "d"});
    verdicts["p3"] = v;

    SummaryStats a = summarize(records, verdicts, {}, {}, {});
    std::mt19937 rng(1);
    std::shuffle(records.begin(), records.end(), rng);
    SummaryStats b = summarize(records, verdicts, {}, {}, {});
    CHECK(a.total_malicious == b.total_malicious);
    CHECK(a.per_language == b.per_language);
    CHECK(a.per_year.at(2019).repo_count == b.per_year.at(2019).repo_count);
    CHECK(a.per_year.at(2019).hex_malicious == b.per_year.at(2019).hex_malicious);
}

TEST_CASE("binary label rollup counts unique hashes") {
    std::map<std::string, BinaryDecision> by_hash;
    by_hash[std::string(64, 'a')] = {BinaryLabel::Malicious, ""};
    by_hash[std::string(64, 'b')] = {BinaryLabel::Hacktool, ""};
    by_hash[std::string(64, 'c')] = {BinaryLabel::Hacktool, ""};
    SummaryStats s = summarize({}, {}, by_hash, {}, {});
    CHECK(s.binary_labels.at("Malicious") == 1);
    CHECK(s.binary_labels.at("Hacktool") == 2);
}

// ---- ownership / crossref ----

TEST_CASE("ownership histogram examples") {
    std::vector<RepoRecord> records;
    std::map<std::string, RepoVerdict> verdicts;
    // users a and b own one repo each; c owns two
    records.push_back(repo("r1", "a"));
    records.push_back(repo("r2", "b"));
    records.push_back(repo("r3", "c"));
    records.push_back(repo("r4", "c"));
    OwnershipStats s = ownership_stats(records, verdicts);
    CHECK(s.repos_per_user.at(1) == 2);
    CHECK(s.repos_per_user.at(2) == 1);
    CHECK(s.malicious_repos_per_user.empty());
    CHECK(ownership_stats({}, {}).repos_per_user.empty());
}

TEST_CASE("ownership: one prolific malicious owner") {
    std::vector<RepoRecord> records;
    std::map<std::string, RepoVerdict> verdicts;
    for (int i = 0; i < 50; ++i) {
        RepoRecord r = repo("m" + std::to_string(i), "prolific");
        r.stars = i;
        records.push_back(r);
        RepoVerdict v;
        v.repo_id = r.repo_id;
        v.malicious = true;
        v.findings.push_back({Heuristic::Ip, "e", "d"});
        verdicts[r.repo_id] = v;
    }
    OwnershipStats s = ownership_stats(records, verdicts);
    CHECK(s.malicious_repos_per_user.at(50) == 1);
    CHECK(s.malicious_stars.size() == 50);
    CHECK(s.benign_stars.empty());
}

TEST_CASE("crossref joins on (owner, name) and owner alone") {
    std::vector<RepoRecord> records{repo("r1", "alice"), repo("r2", "bob")};
    records[0].name = "poc-a";
    records[1].name = "poc-b";

    CrossrefResult exact = crossref_dataset(records, {{"alice", "poc-a"}});
    CHECK(exact.matching_repo_ids == std::set<std::string>{"r1"});
    CHECK(exact.matching_users == std::set<std::string>{"alice"});

    CrossrefResult user_only = crossref_dataset(records, {{"bob", "different-name"}});
    CHECK(user_only.matching_repo_ids.empty());
    CHECK(user_only.matching_users == std::set<std::string>{"bob"});

    CrossrefResult none = crossref_dataset(records, {{"zed", "nothing"}});
    CHECK(none.matching_repo_ids.empty());
    CHECK(none.matching_users.empty());
}

TEST_CASE("input-file loaders") {
    TempDir tmp;
    fixtures::put(tmp.path / "nvd.csv", "# year,total\n2019,14696\n2021,20171\nbad\n");
    auto nvd = load_nvd_totals(tmp.path / "nvd.csv");
    CHECK(nvd.at(2019) == 14696);
    CHECK(nvd.at(2021) == 20171);

    fixtures::put(tmp.path / "cwe.csv", "CVE-2019-0709,Memory Corruption\nnot-a-cve,X\n");
    auto cwe = load_cwe_map(tmp.path / "cwe.csv");
    CHECK(cwe.at("CVE-2019-0709") == "Memory Corruption");
    CHECK(cwe.size() == 1);

    fixtures::put(tmp.path / "ext.csv", "alice,poc-a\nmalformed-row\nbob,poc-b\n");
    std::size_t malformed = 0;
    auto ext = load_external_dataset(tmp.path / "ext.csv", malformed);
    CHECK(ext.size() == 2);
    CHECK(malformed == 1);
}
