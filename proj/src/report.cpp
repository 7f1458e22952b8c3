#include "pocscan/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pocscan/errors.hpp"

using ordered_json = nlohmann::ordered_json;
using nlohmann::json;

namespace pocscan {

ReportFormat report_format_from_string(const std::string& name) {
    if (name == "structured" || name == "json") return ReportFormat::Structured;
    if (name == "csv") return ReportFormat::Csv;
    if (name == "markdown" || name == "md") return ReportFormat::Markdown;
    throw UsageError("unknown report format: " + name);
}

namespace {

std::string format_score(double value) {
    // two decimals, locale independent
    long long scaled = static_cast<long long>(std::llround(value * 100.0));
    std::string whole = std::to_string(scaled / 100);
    long long frac = std::llabs(scaled % 100);
    return whole + "." + (frac < 10 ? "0" : "") + std::to_string(frac);
}

ordered_json verdict_to_json(const RepoVerdict& v) {
    ordered_json findings = ordered_json::array();
    for (const auto& f : v.findings)
        findings.push_back({{"heuristic", to_string(f.heuristic)},
                            {"evidence", f.evidence},
                            {"detail", f.detail}});
    return ordered_json{{"repo_id", v.repo_id},
                        {"malicious", v.malicious},
                        {"findings", findings},
                        {"decided_at", v.decided_at}};
}

RepoVerdict verdict_from_json(const json& j) {
    RepoVerdict v;
    v.repo_id = j.at("repo_id").get<std::string>();
    v.malicious = j.value("malicious", false);
    v.decided_at = j.value("decided_at", "");
    for (const auto& f : j.value("findings", json::array())) {
        Finding finding;
        std::string h = f.value("heuristic", "ip");
        finding.heuristic = h == "binary" ? Heuristic::Binary
                            : h == "hex"  ? Heuristic::Hex
                            : h == "base64" ? Heuristic::Base64
                                            : Heuristic::Ip;
        finding.evidence = f.value("evidence", "");
        finding.detail = f.value("detail", "");
        v.findings.push_back(std::move(finding));
    }
    return v;
}

ordered_json stats_to_json(const SummaryStats& stats) {
    ordered_json per_year = ordered_json::object();
    for (const auto& [year, ys] : stats.per_year) {
        ordered_json y{{"repo_count", ys.repo_count},
                       {"malicious_count", ys.malicious_count},
                       {"ip_malicious", ys.ip_malicious},
                       {"binary_malicious", ys.binary_malicious},
                       {"hex_malicious", ys.hex_malicious},
                       {"base64_malicious", ys.base64_malicious},
                       {"unique_cves", ys.unique_cves}};
        if (ys.pct_of_nvd) y["pct_of_nvd"] = *ys.pct_of_nvd;
        per_year[std::to_string(year)] = y;
    }
    return ordered_json{{"total_repos", stats.total_repos},
                        {"total_malicious", stats.total_malicious},
                        {"per_year", per_year},
                        {"per_language", stats.per_language},
                        {"per_issue", stats.per_issue},
                        {"binary_labels", stats.binary_labels}};
}

struct Table {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::vector<Table> build_tables(const ScanReport& r) {
    std::vector<Table> tables;

    Table summary{"Summary of maliciousness detection",
                  {"Year", "# Repos", "# Malicious"},
                  {}};
    Table heuristics{"Malicious repositories per heuristic",
                     {"Year", "IP", "Binary", "Hex", "Base64", "Union"},
                     {}};
    Table cves{"Unique CVEs targeted",
               {"Year", "# Unique CVEs targeted", "% CVEs assigned", "# Repos"},
               {}};
    for (const auto& [year, ys] : r.stats.per_year) {
        std::string y = std::to_string(year);
        summary.rows.push_back({y, std::to_string(ys.repo_count),
                                std::to_string(ys.malicious_count)});
        heuristics.rows.push_back({y, std::to_string(ys.ip_malicious),
                                   std::to_string(ys.binary_malicious),
                                   std::to_string(ys.hex_malicious),
                                   std::to_string(ys.base64_malicious),
                                   std::to_string(ys.malicious_count)});
        cves.rows.push_back({y, std::to_string(ys.unique_cves),
                             ys.pct_of_nvd ? *ys.pct_of_nvd + "%" : "",
                             std::to_string(ys.repo_count)});
    }
    summary.rows.push_back({"Total", std::to_string(r.stats.total_repos),
                            std::to_string(r.stats.total_malicious)});

    Table languages{"Programming languages", {"Programming language", "Count"}, {}};
    for (const auto& [lang, count] : r.stats.per_language)
        languages.rows.push_back({lang, std::to_string(count)});

    Table issues{"Security issues", {"Security issue", "# of CVEs"}, {}};
    for (const auto& [issue, count] : r.stats.per_issue)
        issues.rows.push_back({issue, std::to_string(count)});

    Table binaries{"Binary labels", {"Label", "# Unique binaries"}, {}};
    std::int64_t total_bins = 0;
    for (const auto& [label, count] : r.stats.binary_labels) {
        binaries.rows.push_back({label, std::to_string(count)});
        total_bins += count;
    }
    binaries.rows.push_back({"Total", std::to_string(total_bins)});

    Table malicious{"Malicious repositories", {"Repo", "Heuristics", "Findings"}, {}};
    for (const auto& v : r.verdicts) {
        if (!v.malicious) continue;
        std::set<std::string> hs;
        for (const auto& f : v.findings) hs.insert(to_string(f.heuristic));
        std::string joined;
        for (const auto& h : hs) joined += (joined.empty() ? "" : "+") + h;
        malicious.rows.push_back(
            {v.repo_id, joined, std::to_string(v.findings.size())});
    }

    tables.push_back(std::move(cves));
    tables.push_back(std::move(languages));
    tables.push_back(std::move(issues));
    tables.push_back(std::move(binaries));
    tables.push_back(std::move(heuristics));
    tables.push_back(std::move(summary));
    tables.push_back(std::move(malicious));
    return tables;
}

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string table_to_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.header.size(); ++i)
        out += (i ? "," : "") + csv_escape(t.header[i]);
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_escape(row[i]);
        out += '\n';
    }
    return out;
}

std::string table_to_markdown(const Table& t) {
    std::string out = "## " + t.name + "\n\n|";
    for (const auto& h : t.header) out += " " + h + " |";
    out += "\n|";
    for (std::size_t i = 0; i < t.header.size(); ++i) out += " --- |";
    out += '\n';
    for (const auto& row : t.rows) {
        out += '|';
        for (const auto& cell : row) out += " " + cell + " |";
        out += '\n';
    }
    out += '\n';
    return out;
}

std::string slug(const std::string& name) {
    std::string out;
    for (char c : name)
        out += std::isalnum((unsigned char)c) ? static_cast<char>(std::tolower((unsigned char)c))
                                              : '_';
    return out;
}

} // namespace

std::string render(const ScanReport& report, ReportFormat format) {
    if (format == ReportFormat::Structured) {
        ordered_json verdicts = ordered_json::array();
        for (const auto& v : report.verdicts) verdicts.push_back(verdict_to_json(v));
        ordered_json review = ordered_json::array();
        for (const auto& e : report.review_queue)
            review.push_back({{"file", e.file},
                              {"offset", e.offset},
                              {"literal", e.literal},
                              {"reason", e.reason}});
        ordered_json excluded = ordered_json::array();
        for (const auto& e : report.excluded)
            excluded.push_back({{"repo_id", e.record.repo_id}, {"reason", e.reason}});
        ordered_json j{{"tool_version", report.tool_version},
                       {"manifest", report.manifest_ref},
                       {"config", report.config_echo_json.empty()
                                      ? ordered_json::object()
                                      : ordered_json::parse(report.config_echo_json)},
                       {"intel_health", report.intel_health},
                       {"stats", stats_to_json(report.stats)},
                       {"verdicts", verdicts},
                       {"review_queue", review},
                       {"excluded", excluded}};
        return j.dump(2) + "\n";
    }
    if (format == ReportFormat::Markdown) {
        std::string out = "# Scan report\n\nmanifest: " + report.manifest_ref +
                          "\ntool: " + report.tool_version + "\n\n";
        for (const auto& t : build_tables(report)) out += table_to_markdown(t);
        out += "## Review queue\n\n";
        out += std::to_string(report.review_queue.size()) + " dropped candidates, " +
               std::to_string(report.excluded.size()) + " excluded repositories\n";
        return out;
    }
    if (format == ReportFormat::Csv) {
        std::string out;
        for (const auto& t : build_tables(report)) {
            out += "# " + t.name + "\n";
            out += table_to_csv(t);
            out += '\n';
        }
        return out;
    }
    throw UsageError("unknown report format");
}

void write_csv_tables(const ScanReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& t : build_tables(report)) {
        std::ofstream out(dir / (slug(t.name) + ".csv"), std::ios::binary);
        if (!out) throw ConfigError("cannot write table under " + dir.string());
        out << table_to_csv(t);
    }
}

namespace {

std::string five_number_summary(std::vector<std::int64_t> values) {
    if (values.empty()) return ",,,,";
    std::sort(values.begin(), values.end());
    auto quantile = [&](double q) {
        double pos = q * static_cast<double>(values.size() - 1);
        std::size_t lo = static_cast<std::size_t>(pos);
        double frac = pos - static_cast<double>(lo);
        double v = static_cast<double>(values[lo]);
        if (lo + 1 < values.size()) v += frac * (static_cast<double>(values[lo + 1]) - v);
        return v;
    };
    std::string out;
    for (double q : {0.0, 0.25, 0.5, 0.75, 1.0})
        out += (out.empty() ? "" : ",") + format_score(quantile(q));
    return out;
}

} // namespace

std::map<std::string, std::string> emit_distributions(
    const std::vector<RepoRecord>& records,
    const std::map<std::string, RepoVerdict>& verdicts,
    const std::vector<SimilarityPair>& pairs) {
    std::map<std::string, std::string> out;

    std::string dist = "class,metric,value\n";
    std::vector<std::int64_t> mal_stars, mal_forks, ben_stars, ben_forks;
    for (const auto& rec : records) {
        auto it = verdicts.find(rec.repo_id);
        bool malicious = it != verdicts.end() && it->second.malicious;
        const char* cls = malicious ? "malicious" : "benign";
        dist += std::string(cls) + ",stars," + std::to_string(rec.stars) + "\n";
        dist += std::string(cls) + ",forks," + std::to_string(rec.forks) + "\n";
        (malicious ? mal_stars : ben_stars).push_back(rec.stars);
        (malicious ? mal_forks : ben_forks).push_back(rec.forks);
    }
    out["distributions.csv"] = dist;

    std::string quart = "class,metric,min,q1,median,q3,max\n";
    quart += "malicious,stars," + five_number_summary(mal_stars) + "\n";
    quart += "malicious,forks," + five_number_summary(mal_forks) + "\n";
    quart += "benign,stars," + five_number_summary(ben_stars) + "\n";
    quart += "benign,forks," + five_number_summary(ben_forks) + "\n";
    out["quartiles.csv"] = quart;

    std::string sim = "repo_a,repo_b,language,score,category,relation\n";
    for (const auto& p : pairs) {
        sim += p.repo_a + "," + p.repo_b + "," + p.language + "," + format_score(p.score) +
               "," + p.category + "," +
               (p.relation == PairRelation::OriginalOriginal ? "original-original"
                                                             : "parent-fork") +
               "\n";
    }
    out["similarity.csv"] = sim;
    return out;
}

std::string verdicts_to_jsonl(const std::vector<RepoVerdict>& verdicts) {
    std::vector<RepoVerdict> sorted = verdicts;
    std::sort(sorted.begin(), sorted.end(),
              [](const RepoVerdict& a, const RepoVerdict& b) { return a.repo_id < b.repo_id; });
    std::string out;
    for (const auto& v : sorted) out += verdict_to_json(v).dump() + "\n";
    return out;
}

std::vector<RepoVerdict> verdicts_from_jsonl(const std::string& text) {
    std::vector<RepoVerdict> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(verdict_from_json(json::parse(line)));
    }
    return out;
}

} // namespace pocscan
