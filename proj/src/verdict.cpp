#include "pocscan/verdict.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "pocscan/errors.hpp"
#include "pocscan/ipaddr.hpp"

namespace pocscan {

const char* to_string(BinaryLabel l) {
    switch (l) {
        case BinaryLabel::Malicious: return "Malicious";
        case BinaryLabel::CveRelated: return "CveRelated";
        case BinaryLabel::Hacktool: return "Hacktool";
        case BinaryLabel::Clean: return "Clean";
    }
    return "Clean";
}

const char* to_string(PayloadClass c) {
    switch (c) {
        case PayloadClass::Benign: return "benign";
        case PayloadClass::Suspicious: return "suspicious";
        case PayloadClass::Malicious: return "malicious";
    }
    return "benign";
}

const char* to_string(Heuristic h) {
    switch (h) {
        case Heuristic::Ip: return "ip";
        case Heuristic::Binary: return "binary";
        case Heuristic::Hex: return "hex";
        case Heuristic::Base64: return "base64";
    }
    return "ip";
}

std::vector<std::string> default_hacktool_lexicon() {
    return {"netcat", "rubeus", "powersploit", "ysoserial", "mimikatz", "psexec"};
}

std::vector<std::string> default_execution_lexicon() {
    return {"wget ",     "curl ",        "powershell",     "downloadstring",
            "cmd.exe",   "/bin/sh",      "/bin/bash",      "subprocess",
            "os.system", "shell_exec",   "createobject(",  "wscript.shell",
            "exec(",     "invoke-expression"};
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool label_matches_cves(const std::vector<std::string>& labels, const std::set<CveId>& cves) {
    for (const auto& label : labels) {
        for (const auto& cve : cves) {
            if (label.find(lower(cve.canonical())) != std::string::npos) return true;
            // also accept the bare "<year>-<number>" form inside a label
            std::string bare = std::to_string(cve.year) + "-" + cve.number;
            if (label.find(bare) != std::string::npos) return true;
        }
    }
    return false;
}

bool label_matches_lexicon(const std::vector<std::string>& labels,
                           const std::vector<std::string>& lexicon) {
    for (const auto& label : labels)
        for (const auto& word : lexicon)
            if (label.find(lower(word)) != std::string::npos) return true;
    return false;
}

} // namespace

BinaryDecision classify_binary(const IntelVerdict& report, const std::set<CveId>& repo_cves,
                               const std::vector<std::string>& hacktool_lexicon) {
    BinaryDecision out;
    if (report.status == IntelStatus::Unknown) {
        out.label = BinaryLabel::Clean;
        out.note = "unknown";
        return out;
    }
    if (report.status == IntelStatus::Unavailable) {
        out.label = BinaryLabel::Clean;
        out.note = "source-unavailable";
        return out;
    }
    if (!report.malicious) {
        out.label = BinaryLabel::Clean;
        return out;
    }
    if (label_matches_cves(report.labels, repo_cves)) {
        out.label = BinaryLabel::CveRelated;
        return out;
    }
    if (label_matches_lexicon(report.labels, hacktool_lexicon)) {
        out.label = BinaryLabel::Hacktool;
        return out;
    }
    out.label = BinaryLabel::Malicious;
    return out;
}

PayloadClass classify_payload(const EncodedPayload& payload,
                              const std::vector<IntelVerdict>& embedded_ip_verdicts,
                              const std::vector<std::string>& execution_lexicon) {
    bool has_public_ip = std::any_of(payload.embedded_ips.begin(), payload.embedded_ips.end(),
                                     [](const IpCandidate& c) {
                                         return c.classification == IpClass::Public;
                                     });
    if (!has_public_ip && payload.embedded_urls.empty()) return PayloadClass::Benign;

    bool ip_malicious = std::any_of(embedded_ip_verdicts.begin(), embedded_ip_verdicts.end(),
                                    [](const IntelVerdict& v) { return v.malicious; });
    if (ip_malicious) return PayloadClass::Malicious;

    std::string text = lower(lossy_to_text(payload.decoded));
    for (const auto& marker : execution_lexicon)
        if (text.find(lower(marker)) != std::string::npos) return PayloadClass::Malicious;

    return PayloadClass::Suspicious;
}

RepoVerdict aggregate_repo(const RepoRecord& repo, const std::vector<IpFinding>& ip_findings,
                           const std::vector<BinaryFinding>& binary_findings,
                           const std::vector<PayloadFinding>& payload_findings,
                           const std::string& decided_at) {
    RepoVerdict out;
    out.repo_id = repo.repo_id;
    out.decided_at = decided_at;

    for (const auto& f : ip_findings) {
        if (f.candidate.classification != IpClass::Public) continue;
        if (f.candidate.context != IpContext::Code &&
            f.candidate.context != IpContext::DecodedPayload)
            continue;
        std::string sources;
        for (const auto& v : f.verdicts)
            if (v.malicious) sources += std::string(sources.empty() ? "" : ",") + to_string(v.source);
        if (sources.empty()) continue;
        out.findings.push_back({Heuristic::Ip,
                                f.candidate.file + ":" + std::to_string(f.candidate.offset) +
                                    " " + f.candidate.literal,
                                "malicious per " + sources});
    }
    for (const auto& f : binary_findings) {
        if (f.decision.label != BinaryLabel::Malicious) continue;
        out.findings.push_back({Heuristic::Binary, f.artifact.path + " sha256=" + f.artifact.sha256,
                                "flagged, not CVE-related, not a hacktool"});
    }
    for (const auto& f : payload_findings) {
        if (f.classification != PayloadClass::Malicious) continue;
        out.findings.push_back(
            {f.payload.encoding == PayloadEncoding::Hex ? Heuristic::Hex : Heuristic::Base64,
             f.payload.source_file + " depth=" + std::to_string(f.payload.depth),
             "malicious payload"});
    }
    out.malicious = !out.findings.empty();
    return out;
}

std::string format_percent(std::int64_t numerator, std::int64_t denominator) {
    if (denominator <= 0) return "";
    // round half-up at two decimals using integer arithmetic
    std::int64_t scaled = numerator * 20000 / denominator; // value * 2e4
    std::int64_t hundredths = (scaled + 1) / 2;            // round half away from zero
    std::string whole = std::to_string(hundredths / 100);
    std::int64_t frac = hundredths % 100;
    std::string out = whole + "." + (frac < 10 ? "0" : "") + std::to_string(frac);
    return out;
}

SummaryStats summarize(const std::vector<RepoRecord>& records,
                       const std::map<std::string, RepoVerdict>& verdicts,
                       const std::map<std::string, BinaryDecision>& binary_by_hash,
                       const std::map<int, std::int64_t>& nvd_totals,
                       const std::map<std::string, std::string>& cwe_map) {
    SummaryStats stats;
    std::map<int, std::set<CveId>> cves_per_year;
    std::set<std::string> issue_counted; // cve canonical, once each

    for (const auto& rec : records) {
        ++stats.total_repos;
        stats.per_language[rec.primary_language.empty() ? "Undetected" : rec.primary_language]++;

        const RepoVerdict* verdict = nullptr;
        if (auto it = verdicts.find(rec.repo_id); it != verdicts.end()) verdict = &it->second;
        bool malicious = verdict && verdict->malicious;
        if (malicious) ++stats.total_malicious;

        std::set<Heuristic> fired;
        if (verdict)
            for (const auto& f : verdict->findings) fired.insert(f.heuristic);

        std::set<int> years;
        for (const auto& cve : rec.cve_ids) {
            years.insert(cve.year);
            cves_per_year[cve.year].insert(cve);
            if (issue_counted.insert(cve.canonical()).second) {
                auto it = cwe_map.find(cve.canonical());
                stats.per_issue[it == cwe_map.end() ? "Untagged" : it->second]++;
            }
        }
        for (int y : years) {
            YearStats& ys = stats.per_year[y];
            ++ys.repo_count;
            if (malicious) ++ys.malicious_count;
            if (fired.count(Heuristic::Ip)) ++ys.ip_malicious;
            if (fired.count(Heuristic::Binary)) ++ys.binary_malicious;
            if (fired.count(Heuristic::Hex)) ++ys.hex_malicious;
            if (fired.count(Heuristic::Base64)) ++ys.base64_malicious;
        }
    }
    for (auto& [year, ys] : stats.per_year) {
        ys.unique_cves = static_cast<std::int64_t>(cves_per_year[year].size());
        if (auto it = nvd_totals.find(year); it != nvd_totals.end() && it->second > 0)
            ys.pct_of_nvd = format_percent(ys.unique_cves, it->second);
    }
    for (const auto& [hash, decision] : binary_by_hash)
        stats.binary_labels[to_string(decision.label)]++;
    return stats;
}

OwnershipStats ownership_stats(const std::vector<RepoRecord>& records,
                               const std::map<std::string, RepoVerdict>& verdicts) {
    OwnershipStats out;
    std::map<std::string, std::int64_t> per_owner, per_owner_malicious;
    for (const auto& rec : records) {
        per_owner[rec.owner]++;
        bool malicious = false;
        if (auto it = verdicts.find(rec.repo_id); it != verdicts.end())
            malicious = it->second.malicious;
        if (malicious) {
            per_owner_malicious[rec.owner]++;
            out.malicious_stars.push_back(rec.stars);
            out.malicious_forks.push_back(rec.forks);
        } else {
            out.benign_stars.push_back(rec.stars);
            out.benign_forks.push_back(rec.forks);
        }
    }
    for (const auto& [owner, count] : per_owner) out.repos_per_user[count]++;
    for (const auto& [owner, count] : per_owner_malicious) out.malicious_repos_per_user[count]++;
    return out;
}

CrossrefResult crossref_dataset(
    const std::vector<RepoRecord>& records,
    const std::vector<std::pair<std::string, std::string>>& external_owner_name) {
    CrossrefResult out;
    std::set<std::pair<std::string, std::string>> tuples;
    std::set<std::string> owners;
    for (const auto& [owner, name] : external_owner_name) {
        tuples.insert({owner, name});
        owners.insert(owner);
    }
    for (const auto& rec : records) {
        if (tuples.count({rec.owner, rec.name})) out.matching_repo_ids.insert(rec.repo_id);
        if (owners.count(rec.owner)) out.matching_users.insert(rec.owner);
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        cell.erase(0, cell.find_first_not_of(" \t\r"));
        cell.erase(cell.find_last_not_of(" \t\r") + 1);
        cells.push_back(cell);
    }
    return cells;
}

} // namespace

std::map<int, std::int64_t> load_nvd_totals(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read nvd totals: " + file.string());
    std::map<int, std::int64_t> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cells = split_csv_line(line);
        if (cells.size() != 2) continue;
        try {
            out[std::stoi(cells[0])] = std::stoll(cells[1]);
        } catch (...) {
        }
    }
    return out;
}

std::map<std::string, std::string> load_cwe_map(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read cwe map: " + file.string());
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cells = split_csv_line(line);
        if (cells.size() != 2) continue;
        if (auto id = parse_cve_id(cells[0])) out[id->canonical()] = cells[1];
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> load_external_dataset(
    const std::filesystem::path& file, std::size_t& malformed) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read external dataset: " + file.string());
    std::vector<std::pair<std::string, std::string>> out;
    malformed = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cells = split_csv_line(line);
        if (cells.size() != 2 || cells[0].empty() || cells[1].empty()) {
            ++malformed;
            continue;
        }
        out.emplace_back(cells[0], cells[1]);
    }
    return out;
}

} // namespace pocscan
