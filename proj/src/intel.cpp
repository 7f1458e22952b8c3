#include "pocscan/intel.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "pocscan/errors.hpp"
#include "pocscan/ipaddr.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pocscan {

const char* to_string(IntelSource s) {
    switch (s) {
        case IntelSource::Blocklist: return "blocklist";
        case IntelSource::ScanService: return "scan-service";
        case IntelSource::ReputationDb: return "reputation-db";
        case IntelSource::Fixture: return "fixture";
    }
    return "fixture";
}

const char* to_string(IntelStatus s) {
    switch (s) {
        case IntelStatus::Ok: return "ok";
        case IntelStatus::Unknown: return "unknown";
        case IntelStatus::Unavailable: return "unavailable";
    }
    return "ok";
}

// ---- IpSet ----

void IpSet::add(std::uint32_t network, int prefix_len) {
    std::uint32_t mask =
        prefix_len <= 0 ? 0 : (prefix_len >= 32 ? 0xffffffffu : ~(0xffffffffu >> prefix_len));
    entries_.insert({network & mask, prefix_len});
}

bool IpSet::add_line(const std::string& raw) {
    std::string line = raw.substr(0, raw.find('#'));
    line.erase(0, line.find_first_not_of(" \t\r\n"));
    line.erase(line.find_last_not_of(" \t\r\n") + 1);
    if (line.empty()) return true;

    int prefix = 32;
    std::string addr_part = line;
    if (auto slash = line.find('/'); slash != std::string::npos) {
        addr_part = line.substr(0, slash);
        std::string p = line.substr(slash + 1);
        if (p.empty() || p.size() > 2 ||
            !std::all_of(p.begin(), p.end(), [](char c) { return std::isdigit((unsigned char)c); }))
            return false;
        prefix = std::stoi(p);
        if (prefix < 0 || prefix > 32) return false;
    }
    auto addr = parse_ipv4(addr_part);
    if (!addr) return false;
    add(*addr, prefix);
    return true;
}

bool IpSet::contains(std::uint32_t addr) const {
    for (const auto& [network, prefix] : entries_)
        if (in_cidr(addr, network, prefix)) return true;
    return false;
}

bool IpSet::contains(const std::string& dotted) const {
    auto addr = parse_ipv4(dotted);
    return addr && contains(*addr);
}

BlocklistLoadResult load_blocklists(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec) || ec)
        throw ConfigError("blocklist directory not readable: " + dir.string());
    BlocklistLoadResult res;
    res.set.source_name = dir.filename().string();
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        std::ifstream in(file);
        std::string line;
        while (std::getline(in, line))
            if (!res.set.add_line(line)) ++res.skipped_lines;
    }
    return res;
}

// ---- verdict serialization ----

IntelVerdict intel_verdict_from_json_text(const std::string& text, const std::string& subject,
                                          IntelSource source) {
    json j = json::parse(text);
    IntelVerdict v;
    v.subject = subject;
    v.source = source;
    v.malicious = j.value("malicious", false);
    v.detection_count = j.value("detection_count", 0);
    v.report_count = j.value("report_count", 0);
    for (const auto& l : j.value("labels", json::array())) {
        std::string s = l.get<std::string>();
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        v.labels.push_back(s);
    }
    if (j.contains("first_seen") && j["first_seen"].is_string())
        v.first_seen = j["first_seen"].get<std::string>();
    if (j.contains("last_seen") && j["last_seen"].is_string())
        v.last_seen = j["last_seen"].get<std::string>();
    std::string status = j.value("status", "ok");
    v.status = status == "unknown"
                   ? IntelStatus::Unknown
                   : (status == "unavailable" ? IntelStatus::Unavailable : IntelStatus::Ok);
    return v;
}

std::string intel_verdict_to_json_text(const IntelVerdict& v) {
    json j{{"subject", v.subject},
           {"source", to_string(v.source)},
           {"status", to_string(v.status)},
           {"malicious", v.malicious},
           {"labels", v.labels},
           {"detection_count", v.detection_count},
           {"report_count", v.report_count}};
    if (v.first_seen) j["first_seen"] = *v.first_seen;
    if (v.last_seen) j["last_seen"] = *v.last_seen;
    return j.dump();
}

// ---- clients ----

FixtureIntelClient::FixtureIntelClient(fs::path dir, IntelSource source)
    : dir_(std::move(dir)), source_(source) {}

IntelVerdict FixtureIntelClient::load(const std::string& subject, bool hash) {
    fs::path file = dir_ / to_string(source_) / (subject + ".json");
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        IntelVerdict v;
        v.subject = subject;
        v.source = source_;
        // an unrecorded hash is genuinely unknown; an unrecorded IP is clean
        v.status = hash ? IntelStatus::Unknown : IntelStatus::Ok;
        return v;
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return intel_verdict_from_json_text(text, subject, source_);
}

IntelVerdict FixtureIntelClient::lookup_ip(const std::string& ip) { return load(ip, false); }
IntelVerdict FixtureIntelClient::lookup_hash(const std::string& h) { return load(h, true); }

namespace {

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? v : "";
}

} // namespace

VirusTotalClient::VirusTotalClient() : api_key_(env_or_empty("VT_API_KEY")) {}

IntelVerdict VirusTotalClient::lookup_ip(const std::string& ip) {
    if (api_key_.empty()) throw ConfigError("VT_API_KEY not set");
    httplib::SSLClient cli("www.virustotal.com");
    cli.set_connection_timeout(10);
    auto res = cli.Get("/api/v3/ip_addresses/" + ip, {{"x-apikey", api_key_}});
    if (!res) throw TransportError("virustotal ip lookup failed");
    if (res->status == 429) throw RateLimitError("virustotal rate limit", 60);
    IntelVerdict v;
    v.subject = ip;
    v.source = IntelSource::ScanService;
    if (res->status == 404) {
        v.status = IntelStatus::Unknown;
        return v;
    }
    if (res->status != 200) throw TransportError("virustotal status " + std::to_string(res->status));
    json j = json::parse(res->body);
    const auto& stats = j["data"]["attributes"]["last_analysis_stats"];
    v.detection_count = stats.value("malicious", 0);
    return v;
}

IntelVerdict VirusTotalClient::lookup_hash(const std::string& sha256) {
    if (api_key_.empty()) throw ConfigError("VT_API_KEY not set");
    httplib::SSLClient cli("www.virustotal.com");
    cli.set_connection_timeout(10);
    auto res = cli.Get("/api/v3/files/" + sha256, {{"x-apikey", api_key_}});
    if (!res) throw TransportError("virustotal hash lookup failed");
    if (res->status == 429) throw RateLimitError("virustotal rate limit", 60);
    IntelVerdict v;
    v.subject = sha256;
    v.source = IntelSource::ScanService;
    if (res->status == 404) {
        v.status = IntelStatus::Unknown;
        return v;
    }
    if (res->status != 200) throw TransportError("virustotal status " + std::to_string(res->status));
    json j = json::parse(res->body);
    const auto& attrs = j["data"]["attributes"];
    v.detection_count = attrs["last_analysis_stats"].value("malicious", 0);
    if (attrs.contains("popular_threat_classification")) {
        for (const auto& name :
             attrs["popular_threat_classification"].value("popular_threat_name", json::array())) {
            std::string s = name.value("value", "");
            std::transform(s.begin(), s.end(), s.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            if (!s.empty()) v.labels.push_back(s);
        }
    }
    return v;
}

AbuseIpDbClient::AbuseIpDbClient() : api_key_(env_or_empty("ABUSEIPDB_API_KEY")) {}

IntelVerdict AbuseIpDbClient::lookup_ip(const std::string& ip) {
    if (api_key_.empty()) throw ConfigError("ABUSEIPDB_API_KEY not set");
    httplib::SSLClient cli("api.abuseipdb.com");
    cli.set_connection_timeout(10);
    auto res = cli.Get("/api/v2/check?ipAddress=" + ip + "&maxAgeInDays=365",
                       {{"Key", api_key_}, {"Accept", "application/json"}});
    if (!res) throw TransportError("abuseipdb lookup failed");
    if (res->status == 429) throw RateLimitError("abuseipdb rate limit", 60);
    if (res->status != 200) throw TransportError("abuseipdb status " + std::to_string(res->status));
    json j = json::parse(res->body);
    IntelVerdict v;
    v.subject = ip;
    v.source = IntelSource::ReputationDb;
    v.report_count = j["data"].value("totalReports", 0);
    if (j["data"].contains("lastReportedAt") && j["data"]["lastReportedAt"].is_string())
        v.last_seen = j["data"]["lastReportedAt"].get<std::string>();
    return v;
}

IntelVerdict AbuseIpDbClient::lookup_hash(const std::string& sha256) {
    IntelVerdict v;
    v.subject = sha256;
    v.source = IntelSource::ReputationDb;
    v.status = IntelStatus::Unknown; // no hash database behind this source
    return v;
}

// ---- rate limiter ----

RateLimiter::RateLimiter(std::size_t max_requests, std::chrono::milliseconds window)
    : max_requests_(max_requests), window_(window) {}

void RateLimiter::acquire() {
    for (;;) {
        std::chrono::steady_clock::time_point wait_until;
        {
            std::lock_guard lock(mu_);
            auto now = std::chrono::steady_clock::now();
            recent_.erase(std::remove_if(recent_.begin(), recent_.end(),
                                         [&](auto t) { return now - t >= window_; }),
                          recent_.end());
            if (recent_.size() < max_requests_) {
                recent_.push_back(now);
                return;
            }
            wait_until = *std::min_element(recent_.begin(), recent_.end()) + window_;
        }
        std::this_thread::sleep_until(wait_until);
    }
}

// ---- IntelService ----

IntelService::IntelService(IpSet blocklist, std::unique_ptr<IntelClient> scan_client,
                           std::unique_ptr<IntelClient> reputation_client, IntelConfig config)
    : blocklist_(std::move(blocklist)),
      scan_(std::move(scan_client)),
      reputation_(std::move(reputation_client)),
      config_(config),
      scan_limiter_(config.rate_limit_requests, config.rate_limit_window),
      reputation_limiter_(config.rate_limit_requests, config.rate_limit_window) {}

std::optional<IntelVerdict> IntelService::cache_get(const std::string& subject,
                                                    IntelSource source) {
    std::shared_lock lock(cache_mu_);
    auto it = cache_.find({subject, static_cast<int>(source)});
    if (it == cache_.end()) return std::nullopt;
    if (!config_.fixture_mode &&
        std::chrono::steady_clock::now() - it->second.stored_at > config_.cache_ttl)
        return std::nullopt;
    return it->second.verdict;
}

void IntelService::cache_put(const IntelVerdict& v) {
    std::unique_lock lock(cache_mu_);
    cache_[{v.subject, static_cast<int>(v.source)}] =
        CacheEntry{v, std::chrono::steady_clock::now()};
}

IntelVerdict IntelService::guarded(IntelSource source, const std::string& subject, bool hash) {
    if (auto hit = cache_get(subject, source)) return *hit;
    IntelClient* client = source == IntelSource::ScanService ? scan_.get() : reputation_.get();
    RateLimiter& limiter =
        source == IntelSource::ScanService ? scan_limiter_ : reputation_limiter_;
    IntelVerdict v;
    try {
        limiter.acquire();
        v = hash ? client->lookup_hash(subject) : client->lookup_ip(subject);
        v.source = source;
        // apply the threshold policy uniformly, whatever the client reported
        if (v.status == IntelStatus::Ok) {
            if (source == IntelSource::ScanService)
                v.malicious = v.detection_count >= config_.engine_threshold;
            else
                v.malicious = v.report_count >= config_.reputation_threshold;
        }
    } catch (const std::exception&) {
        v = IntelVerdict{};
        v.subject = subject;
        v.source = source;
        v.status = IntelStatus::Unavailable;
    }
    cache_put(v);
    return v;
}

std::vector<IntelVerdict> IntelService::check_ip(const std::string& ip) {
    std::vector<IntelVerdict> out;

    IntelVerdict bl;
    bl.subject = ip;
    bl.source = IntelSource::Blocklist;
    bl.malicious = blocklist_.contains(ip);
    if (bl.malicious) bl.detection_count = 1;
    out.push_back(bl);

    out.push_back(guarded(IntelSource::ScanService, ip, false));
    out.push_back(guarded(IntelSource::ReputationDb, ip, false));
    return out;
}

IntelVerdict IntelService::check_hash(const std::string& sha256) {
    return guarded(IntelSource::ScanService, sha256, true);
}

} // namespace pocscan
