#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "pocscan/corpus.hpp"

namespace pocscan {

// Keyword-search client against a repository hosting API. Implementations:
// a recorded-fixture client for hermetic runs and a live HTTPS client.
class HostingClient {
  public:
    virtual ~HostingClient() = default;
    virtual std::vector<RepoRecord> search(const std::string& query) = 0;
};

// Serves recorded responses from a directory. Each query maps to a file
// named after the sanitized query string ("CVE-2021-44228" ->
// "CVE-2021-44228.json"); a missing file means zero results.
class FixtureHostingClient : public HostingClient {
  public:
    explicit FixtureHostingClient(std::filesystem::path fixture_dir);
    std::vector<RepoRecord> search(const std::string& query) override;

    static std::string sanitize_query(const std::string& query);

  private:
    std::filesystem::path dir_;
};

// Live GitHub-style search client. Reads the token from the GITHUB_TOKEN
// environment variable; throws TransportError / RateLimitError on failure.
class LiveHostingClient : public HostingClient {
  public:
    explicit LiveHostingClient(std::string api_host = "api.github.com");
    std::vector<RepoRecord> search(const std::string& query) override;

  private:
    std::string host_;
    std::string token_;
};

// The separator variants used to widen keyword search coverage.
std::vector<std::string> query_variants(const CveId& id);

// Searches every keyword under all separator variants, querying each one
// twice to smooth over flaky API responses, and returns records
// deduplicated by repo_id (forks included), sorted by repo_id.
std::vector<RepoRecord> harvest(const std::vector<CveId>& keywords,
                                HostingClient& client);

} // namespace pocscan
