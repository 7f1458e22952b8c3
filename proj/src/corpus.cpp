#include "pocscan/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pocscan/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pocscan {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool starts_with_mz(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return false;
    char buf[2] = {0, 0};
    in.read(buf, 2);
    return in.gcount() == 2 && buf[0] == 'M' && buf[1] == 'Z';
}

} // namespace

std::string guess_language(const fs::path& file) {
    static const std::map<std::string, std::string> by_ext = {
        {".py", "Python"},   {".c", "C"},          {".h", "C"},
        {".cpp", "C++"},     {".cc", "C++"},       {".cxx", "C++"},
        {".hpp", "C++"},     {".java", "Java"},    {".js", "JavaScript"},
        {".ts", "JavaScript"}, {".sh", "Shell"},   {".bash", "Shell"},
        {".go", "Go"},       {".rb", "Ruby"},      {".html", "HTML"},
        {".htm", "HTML"},    {".cs", "C#"},        {".rs", "Rust"},
        {".php", "PHP"},     {".pl", "Perl"},      {".ps1", "PowerShell"},
    };
    auto it = by_ext.find(lower(file.extension().string()));
    return it == by_ext.end() ? std::string() : it->second;
}

FileInventory scan_repo_files(const fs::path& root, const ScanLimits& limits) {
    std::error_code ec;
    if (!fs::exists(root, ec) || !fs::is_directory(root, ec))
        throw IngestError("repository root not readable: " + root.string());

    FileInventory inv;
    std::size_t seen = 0;
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
    if (ec) throw IngestError("cannot traverse " + root.string() + ": " + ec.message());

    for (const auto& entry : it) {
        if (!entry.is_regular_file(ec) || ec) continue;
        std::string rel = fs::relative(entry.path(), root, ec).generic_string();
        if (ec) rel = entry.path().generic_string();

        if (++seen > limits.max_file_count) {
            inv.skipped.push_back({rel, "file-count-limit"});
            continue;
        }
        std::uint64_t size = entry.file_size(ec);
        if (ec) {
            inv.skipped.push_back({rel, "unreadable"});
            continue;
        }
        if (size > limits.max_file_size) {
            inv.skipped.push_back({rel, "size-limit"});
            continue;
        }
        std::string ext = lower(entry.path().extension().string());
        bool exe_ext = std::find(limits.exe_extensions.begin(), limits.exe_extensions.end(),
                                 ext) != limits.exe_extensions.end();
        bool mz = size >= 2 && starts_with_mz(entry.path());
        if (mz || exe_ext) {
            inv.binary_files.push_back({rel, size, mz ? "MZ" : "other"});
        } else {
            inv.text_files.push_back({rel, size, guess_language(entry.path())});
        }
    }

    auto by_path = [](const auto& a, const auto& b) { return a.path < b.path; };
    std::sort(inv.text_files.begin(), inv.text_files.end(), by_path);
    std::sort(inv.binary_files.begin(), inv.binary_files.end(), by_path);
    std::sort(inv.skipped.begin(), inv.skipped.end(), by_path);
    return inv;
}

bool contains_ioc_marker(const std::string& text) {
    std::string low = lower(text);
    if (low.find("indicator of compromise") != std::string::npos ||
        low.find("indicators of compromise") != std::string::npos)
        return true;
    // word-bounded "ioc"
    for (size_t pos = low.find("ioc"); pos != std::string::npos; pos = low.find("ioc", pos + 1)) {
        bool left_ok = pos == 0 || !std::isalnum((unsigned char)low[pos - 1]);
        bool right_ok = pos + 3 >= low.size() || !std::isalnum((unsigned char)low[pos + 3]);
        if (left_ok && right_ok) return true;
    }
    return false;
}

CleanResult clean_corpus(const std::vector<RepoRecord>& records,
                         const std::set<std::string>& ioc_flagged,
                         std::size_t ioc_cve_threshold) {
    CleanResult out;
    for (const auto& rec : records) {
        if (rec.cve_ids.empty()) {
            out.excluded.push_back({rec, ExclusionKind::NoCve, "no-cve"});
        } else if (ioc_flagged.count(rec.repo_id) && rec.cve_ids.size() > ioc_cve_threshold) {
            out.excluded.push_back({rec, ExclusionKind::IocReview,
                                    "ioc-marker with " + std::to_string(rec.cve_ids.size()) +
                                        " distinct CVEs"});
        } else {
            out.kept.push_back(rec);
        }
    }
    return out;
}

const char* to_string(RepoStatus s) {
    switch (s) {
        case RepoStatus::Unchanged: return "Unchanged";
        case RepoStatus::Pushed: return "Pushed";
        case RepoStatus::Updated: return "Updated";
        case RepoStatus::TakenDownByOwner: return "TakenDownByOwner";
        case RepoStatus::TakenDownByPlatform: return "TakenDownByPlatform";
    }
    return "Unchanged";
}

std::map<std::string, RepoStatus> diff_snapshots(const CorpusSnapshot& old_snap,
                                                 const CorpusSnapshot& new_snap) {
    std::map<std::string, RepoStatus> out;
    for (const auto& [id, old_entry] : old_snap.records) {
        auto it = new_snap.records.find(id);
        if (it == new_snap.records.end()) {
            out[id] = RepoStatus::TakenDownByOwner;
            continue;
        }
        const SnapshotEntry& nw = it->second;
        if (!nw.available) {
            // a takedown is a change only if the repo was still up before
            out[id] = old_entry.available
                          ? (nw.takedown_actor == TakedownActor::Platform
                                 ? RepoStatus::TakenDownByPlatform
                                 : RepoStatus::TakenDownByOwner)
                          : RepoStatus::Unchanged;
        } else if (nw.pushed_at > old_entry.pushed_at) {
            out[id] = RepoStatus::Pushed;
        } else if (nw.updated_at != old_entry.updated_at) {
            out[id] = RepoStatus::Updated;
        } else {
            out[id] = RepoStatus::Unchanged;
        }
    }
    // Repos present only in the new snapshot count as updated metadata.
    for (const auto& [id, entry] : new_snap.records)
        if (!old_snap.records.count(id)) out[id] = RepoStatus::Updated;
    return out;
}

// ---- serialization ----

namespace {

json record_to_json(const RepoRecord& r) {
    json cves = json::array();
    for (const auto& id : r.cve_ids) cves.push_back(id.canonical());
    json j{{"repo_id", r.repo_id},
           {"owner", r.owner},
           {"name", r.name},
           {"description", r.description},
           {"primary_language", r.primary_language},
           {"stars", r.stars},
           {"forks", r.forks},
           {"created_at", r.created_at},
           {"updated_at", r.updated_at},
           {"pushed_at", r.pushed_at},
           {"is_fork", r.is_fork},
           {"cve_ids", cves}};
    if (r.parent_id) j["parent_id"] = *r.parent_id;
    if (r.local_path) j["local_path"] = *r.local_path;
    return j;
}

RepoRecord record_from_json(const json& j) {
    RepoRecord r;
    r.repo_id = j.at("repo_id").get<std::string>();
    r.owner = j.value("owner", "");
    r.name = j.value("name", "");
    r.description = j.value("description", "");
    r.primary_language = j.value("primary_language", "Undetected");
    r.stars = j.value("stars", std::int64_t{0});
    r.forks = j.value("forks", std::int64_t{0});
    r.created_at = j.value("created_at", "");
    r.updated_at = j.value("updated_at", "");
    r.pushed_at = j.value("pushed_at", "");
    r.is_fork = j.value("is_fork", false);
    if (j.contains("parent_id") && !j["parent_id"].is_null())
        r.parent_id = j["parent_id"].get<std::string>();
    if (j.contains("local_path") && !j["local_path"].is_null())
        r.local_path = j["local_path"].get<std::string>();
    for (const auto& c : j.value("cve_ids", json::array()))
        if (auto id = parse_cve_id(c.get<std::string>())) r.cve_ids.insert(*id);
    return r;
}

} // namespace

std::string manifest_to_jsonl(std::vector<RepoRecord> records) {
    std::sort(records.begin(), records.end(),
              [](const RepoRecord& a, const RepoRecord& b) { return a.repo_id < b.repo_id; });
    std::string out;
    for (const auto& r : records) {
        out += record_to_json(r).dump();
        out += '\n';
    }
    return out;
}

std::vector<RepoRecord> manifest_from_jsonl(const std::string& text) {
    std::vector<RepoRecord> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(record_from_json(json::parse(line)));
    }
    return out;
}

void write_manifest(const fs::path& path, const std::vector<RepoRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write manifest: " + path.string());
    out << manifest_to_jsonl(records);
}

std::vector<RepoRecord> read_manifest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read manifest: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return manifest_from_jsonl(ss.str());
}

CorpusSnapshot snapshot_from_records(const std::vector<RepoRecord>& records,
                                     const std::string& taken_at) {
    CorpusSnapshot snap;
    snap.taken_at = taken_at;
    for (const auto& r : records)
        snap.records[r.repo_id] = SnapshotEntry{true, r.updated_at, r.pushed_at,
                                                TakedownActor::None};
    return snap;
}

namespace {

const char* actor_name(TakedownActor a) {
    switch (a) {
        case TakedownActor::None: return "none";
        case TakedownActor::Owner: return "owner";
        case TakedownActor::Platform: return "platform";
    }
    return "none";
}

TakedownActor actor_from(const std::string& s) {
    if (s == "owner") return TakedownActor::Owner;
    if (s == "platform") return TakedownActor::Platform;
    return TakedownActor::None;
}

} // namespace

void write_snapshot(const fs::path& path, const CorpusSnapshot& snap) {
    json j{{"taken_at", snap.taken_at}, {"records", json::object()}};
    for (const auto& [id, e] : snap.records)
        j["records"][id] = {{"available", e.available},
                            {"updated_at", e.updated_at},
                            {"pushed_at", e.pushed_at},
                            {"takedown_actor", actor_name(e.takedown_actor)}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write snapshot: " + path.string());
    out << j.dump(2) << '\n';
}

CorpusSnapshot read_snapshot(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read snapshot: " + path.string());
    json j = json::parse(in);
    CorpusSnapshot snap;
    snap.taken_at = j.value("taken_at", "");
    for (const auto& [id, e] : j.at("records").items())
        snap.records[id] = SnapshotEntry{e.value("available", true),
                                         e.value("updated_at", ""),
                                         e.value("pushed_at", ""),
                                         actor_from(e.value("takedown_actor", "none"))};
    return snap;
}

} // namespace pocscan
