#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

namespace pocscan {

// A set of single addresses and CIDR ranges loaded from netset/ipset files.
class IpSet {
  public:
    void add(std::uint32_t network, int prefix_len);
    bool add_line(const std::string& line); // false if malformed
    bool contains(std::uint32_t addr) const;
    bool contains(const std::string& dotted) const;
    std::size_t entry_count() const { return entries_.size(); }

    std::string source_name;
    std::string loaded_at;

  private:
    std::set<std::pair<std::uint32_t, int>> entries_; // (normalized base, prefix)
};

struct BlocklistLoadResult {
    IpSet set;
    std::size_t skipped_lines = 0;
};

// Union of every file in the directory. One IP or CIDR per line, '#'
// starts a comment; malformed lines are counted, not fatal. Throws
// ConfigError if the directory is unreadable.
BlocklistLoadResult load_blocklists(const std::filesystem::path& dir);

enum class IntelSource { Blocklist, ScanService, ReputationDb, Fixture };
enum class IntelStatus { Ok, Unknown, Unavailable };

const char* to_string(IntelSource s);
const char* to_string(IntelStatus s);

struct IntelVerdict {
    std::string subject; // ip literal or sha256
    IntelSource source = IntelSource::Fixture;
    IntelStatus status = IntelStatus::Ok;
    bool malicious = false;
    std::vector<std::string> labels; // lowercase-normalized
    int detection_count = 0;
    int report_count = 0; // reputation-db only
    std::optional<std::string> first_seen;
    std::optional<std::string> last_seen;

    friend bool operator==(const IntelVerdict&, const IntelVerdict&) = default;
};

// One reputation/scanning backend: an IP lookup, a hash lookup, or both.
class IntelClient {
  public:
    virtual ~IntelClient() = default;
    virtual IntelVerdict lookup_ip(const std::string& ip) = 0;
    virtual IntelVerdict lookup_hash(const std::string& sha256) = 0;
};

// Serves recorded verdicts from <dir>/<source>/<subject>.json and never
// touches the network. An absent record is a clean/unknown verdict.
class FixtureIntelClient : public IntelClient {
  public:
    FixtureIntelClient(std::filesystem::path dir, IntelSource source);
    IntelVerdict lookup_ip(const std::string& ip) override;
    IntelVerdict lookup_hash(const std::string& sha256) override;

  private:
    IntelVerdict load(const std::string& subject, bool hash);
    std::filesystem::path dir_;
    IntelSource source_;
};

// VirusTotal v3 lookups; API key from VT_API_KEY.
class VirusTotalClient : public IntelClient {
  public:
    VirusTotalClient();
    IntelVerdict lookup_ip(const std::string& ip) override;
    IntelVerdict lookup_hash(const std::string& sha256) override;

  private:
    std::string api_key_;
};

// AbuseIPDB check endpoint; API key from ABUSEIPDB_API_KEY.
class AbuseIpDbClient : public IntelClient {
  public:
    AbuseIpDbClient();
    IntelVerdict lookup_ip(const std::string& ip) override;
    IntelVerdict lookup_hash(const std::string& sha256) override;

  private:
    std::string api_key_;
};

// Sliding-window request limiter shared by callers of one source.
class RateLimiter {
  public:
    RateLimiter(std::size_t max_requests, std::chrono::milliseconds window);
    // Blocks until a slot is free, then records the request.
    void acquire();

  private:
    std::size_t max_requests_;
    std::chrono::milliseconds window_;
    std::mutex mu_;
    std::vector<std::chrono::steady_clock::time_point> recent_;
};

struct IntelConfig {
    int engine_threshold = 1;       // scan-service detections for malicious=true
    int reputation_threshold = 1;   // reputation reports for malicious=true
    std::chrono::seconds cache_ttl = std::chrono::hours(24) * 30;
    bool fixture_mode = true;       // recorded verdicts never expire
    bool upload_enabled = false;    // off by default; never used in fixture mode
    std::size_t rate_limit_requests = 4;
    std::chrono::milliseconds rate_limit_window{1000};
};

// Front door for enrichment: local blocklist first, then the scanning
// service, then the reputation database, with a per-(subject, source)
// cache and per-source rate limiting.
class IntelService {
  public:
    IntelService(IpSet blocklist, std::unique_ptr<IntelClient> scan_client,
                 std::unique_ptr<IntelClient> reputation_client, IntelConfig config = {});

    std::vector<IntelVerdict> check_ip(const std::string& ip);
    IntelVerdict check_hash(const std::string& sha256);

    const IntelConfig& config() const { return config_; }

  private:
    std::optional<IntelVerdict> cache_get(const std::string& subject, IntelSource source);
    void cache_put(const IntelVerdict& v);
    IntelVerdict guarded(IntelSource source, const std::string& subject, bool hash);

    IpSet blocklist_;
    std::unique_ptr<IntelClient> scan_;
    std::unique_ptr<IntelClient> reputation_;
    IntelConfig config_;
    RateLimiter scan_limiter_;
    RateLimiter reputation_limiter_;

    struct CacheEntry {
        IntelVerdict verdict;
        std::chrono::steady_clock::time_point stored_at;
    };
    mutable std::shared_mutex cache_mu_;
    std::map<std::pair<std::string, int>, CacheEntry> cache_;
};

// Fixture verdict (de)serialization, also used by `intel sync`.
IntelVerdict intel_verdict_from_json_text(const std::string& text, const std::string& subject,
                                          IntelSource source);
std::string intel_verdict_to_json_text(const IntelVerdict& v);

} // namespace pocscan
