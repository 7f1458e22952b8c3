#include "pocscan/harvest.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "pocscan/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pocscan {

namespace {

RepoRecord record_from_api_json(const json& item) {
    RepoRecord r;
    if (item.contains("id") && item["id"].is_number())
        r.repo_id = std::to_string(item["id"].get<std::int64_t>());
    else
        r.repo_id = item.value("repo_id", item.value("full_name", ""));
    if (item.contains("owner") && item["owner"].is_object())
        r.owner = item["owner"].value("login", "");
    else
        r.owner = item.value("owner", "");
    r.name = item.value("name", "");
    r.description = item["description"].is_string() ? item["description"].get<std::string>() : "";
    r.primary_language =
        item.contains("language") && item["language"].is_string()
            ? item["language"].get<std::string>()
            : item.value("primary_language", "Undetected");
    r.stars = item.value("stargazers_count", item.value("stars", std::int64_t{0}));
    r.forks = item.value("forks_count", item.value("forks", std::int64_t{0}));
    r.created_at = item.value("created_at", "");
    r.updated_at = item.value("updated_at", "");
    r.pushed_at = item.value("pushed_at", "");
    r.is_fork = item.value("fork", item.value("is_fork", false));
    if (item.contains("parent_id") && item["parent_id"].is_string())
        r.parent_id = item["parent_id"].get<std::string>();
    else if (item.contains("parent") && item["parent"].is_object() &&
             item["parent"].contains("id"))
        r.parent_id = std::to_string(item["parent"]["id"].get<std::int64_t>());
    for (const auto& id : extract_cve_ids(r.name + " " + r.description))
        r.cve_ids.insert(id);
    return r;
}

} // namespace

FixtureHostingClient::FixtureHostingClient(fs::path fixture_dir)
    : dir_(std::move(fixture_dir)) {}

std::string FixtureHostingClient::sanitize_query(const std::string& query) {
    std::string out;
    for (char c : query)
        out += std::isalnum((unsigned char)c) || c == '-' || c == '.' ? c : '_';
    return out;
}

std::vector<RepoRecord> FixtureHostingClient::search(const std::string& query) {
    fs::path file = dir_ / (sanitize_query(query) + ".json");
    std::ifstream in(file, std::ios::binary);
    if (!in) return {};
    json j = json::parse(in);
    const json& items = j.is_array() ? j : j.at("items");
    std::vector<RepoRecord> out;
    for (const auto& item : items) out.push_back(record_from_api_json(item));
    return out;
}

LiveHostingClient::LiveHostingClient(std::string api_host) : host_(std::move(api_host)) {
    const char* tok = std::getenv("GITHUB_TOKEN");
    token_ = tok ? tok : "";
}

std::vector<RepoRecord> LiveHostingClient::search(const std::string& query) {
    httplib::SSLClient cli(host_);
    cli.set_connection_timeout(10);
    httplib::Headers headers{{"Accept", "application/vnd.github+json"},
                             {"User-Agent", "poc-scan"}};
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    std::string path = "/search/repositories?q=" + httplib::detail::encode_url(query);
    auto res = cli.Get(path, headers);
    if (!res) throw TransportError("search request failed for query: " + query);
    if (res->status == 403 || res->status == 429) {
        int retry = 60;
        if (res->has_header("Retry-After"))
            retry = std::atoi(res->get_header_value("Retry-After").c_str());
        throw RateLimitError("rate limited while searching: " + query, retry);
    }
    if (res->status != 200)
        throw TransportError("search returned status " + std::to_string(res->status));
    json j = json::parse(res->body);
    std::vector<RepoRecord> out;
    for (const auto& item : j.at("items")) out.push_back(record_from_api_json(item));
    return out;
}

std::vector<std::string> query_variants(const CveId& id) {
    std::string y = std::to_string(id.year);
    const std::string& n = id.number;
    return {
        "CVE-" + y + "-" + n,
        "CVE " + y + "-" + n,
        "CVE-" + y + " " + n,
        "CVE " + y + " " + n,
        "CVE:" + y + "-" + n,
    };
}

std::vector<RepoRecord> harvest(const std::vector<CveId>& keywords, HostingClient& client) {
    std::map<std::string, RepoRecord> by_id;
    // Two passes over every variant: the hosting API occasionally drops
    // results, so a second query fills the gaps.
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& id : keywords) {
            for (const auto& q : query_variants(id)) {
                for (auto& rec : client.search(q)) {
                    auto [it, inserted] = by_id.emplace(rec.repo_id, rec);
                    if (!inserted) {
                        // Merge CVE ids discovered under different keywords.
                        it->second.cve_ids.insert(rec.cve_ids.begin(), rec.cve_ids.end());
                    }
                }
            }
        }
    }
    std::vector<RepoRecord> out;
    out.reserve(by_id.size());
    for (auto& [id, rec] : by_id) out.push_back(std::move(rec));
    return out;
}

} // namespace pocscan
