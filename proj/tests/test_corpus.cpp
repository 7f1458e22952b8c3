#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "pocscan/corpus.hpp"
#include "pocscan/errors.hpp"
#include "pocscan/harvest.hpp"
#include "support/fixtures.hpp"

using namespace pocscan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("pocscan-test-" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

RepoRecord make_record(const std::string& id, int cve_count) {
    RepoRecord r;
    r.repo_id = id;
    r.owner = "alice";
    r.name = id;
    for (int i = 0; i < cve_count; ++i) {
        CveId c;
        c.year = 2020;
        c.number = std::to_string(1000 + i);
        r.cve_ids.insert(c);
    }
    return r;
}

} // namespace

TEST_CASE("scan_repo_files classifies text and MZ binary") {
    TempDir tmp;
    fixtures::put(tmp.path / "poc.py", "print('hi')\n");
    fixtures::put(tmp.path / "tool.exe", std::string("MZ") + "binary bits");
    FileInventory inv = scan_repo_files(tmp.path);
    REQUIRE(inv.text_files.size() == 1);
    REQUIRE(inv.binary_files.size() == 1);
    CHECK(inv.text_files[0].path == "poc.py");
    CHECK(inv.text_files[0].language == "Python");
    CHECK(inv.binary_files[0].path == "tool.exe");
    CHECK(inv.binary_files[0].magic == "MZ");
    CHECK(inv.skipped.empty());
}

TEST_CASE("scan_repo_files on empty directory") {
    TempDir tmp;
    FileInventory inv = scan_repo_files(tmp.path);
    CHECK(inv.text_files.empty());
    CHECK(inv.binary_files.empty());
    CHECK(inv.skipped.empty());
}

TEST_CASE("scan_repo_files enforces the size cap") {
    TempDir tmp;
    fixtures::put(tmp.path / "big.txt", std::string(2048, 'a'));
    ScanLimits limits;
    limits.max_file_size = 1024;
    FileInventory inv = scan_repo_files(tmp.path, limits);
    REQUIRE(inv.skipped.size() == 1);
    CHECK(inv.skipped[0].path == "big.txt");
    CHECK(inv.skipped[0].reason == "size-limit");
}

TEST_CASE("scan_repo_files: exe extension without MZ is still binary") {
    TempDir tmp;
    fixtures::put(tmp.path / "x.dll", "not really a dll");
    FileInventory inv = scan_repo_files(tmp.path);
    REQUIRE(inv.binary_files.size() == 1);
    CHECK(inv.binary_files[0].magic == "other");
}

TEST_CASE("scan_repo_files throws on missing root") {
    CHECK_THROWS_AS(scan_repo_files("/nonexistent/path/xyz"), IngestError);
}

TEST_CASE("scan_repo_files lists are sorted and disjoint by path") {
    TempDir tmp;
    fixtures::put(tmp.path / "b.py", "b\n");
    fixtures::put(tmp.path / "a.py", "a\n");
    fixtures::put(tmp.path / "sub/c.py", "c\n");
    FileInventory inv = scan_repo_files(tmp.path);
    REQUIRE(inv.text_files.size() == 3);
    CHECK(inv.text_files[0].path == "a.py");
    CHECK(inv.text_files[1].path == "b.py");
    CHECK(inv.text_files[2].path == "sub/c.py");
}

TEST_CASE("contains_ioc_marker") {
    CHECK(contains_ioc_marker("Indicators of Compromise listed below"));
    CHECK(contains_ioc_marker("known IoC values"));
    CHECK(contains_ioc_marker("ioc: 1.2.3.4"));
    CHECK(!contains_ioc_marker("social media"));   // no word-bounded ioc
    CHECK(!contains_ioc_marker("sociocultural"));
    CHECK(!contains_ioc_marker("plain exploit code"));
}

TEST_CASE("clean_corpus: many CVEs plus IoC marker goes to review") {
    std::vector<RepoRecord> records{make_record("listing", 45), make_record("poc", 1)};
    CleanResult out = clean_corpus(records, {"listing"}, 20);
    REQUIRE(out.kept.size() == 1);
    CHECK(out.kept[0].repo_id == "poc");
    REQUIRE(out.excluded.size() == 1);
    CHECK(out.excluded[0].record.repo_id == "listing");
    CHECK(out.excluded[0].kind == ExclusionKind::IocReview);
}

TEST_CASE("clean_corpus: zero CVEs excluded outright") {
    CleanResult out = clean_corpus({make_record("empty", 0)}, {});
    CHECK(out.kept.empty());
    REQUIRE(out.excluded.size() == 1);
    CHECK(out.excluded[0].kind == ExclusionKind::NoCve);
    CHECK(out.excluded[0].reason == "no-cve");
}

TEST_CASE("clean_corpus: IoC marker alone is not enough") {
    // at the threshold (not above) the record stays
    CleanResult out = clean_corpus({make_record("r", 20)}, {"r"}, 20);
    CHECK(out.kept.size() == 1);
    CleanResult over = clean_corpus({make_record("r", 21)}, {"r"}, 20);
    CHECK(over.kept.empty());
    CleanResult no_marker = clean_corpus({make_record("r", 45)}, {}, 20);
    CHECK(no_marker.kept.size() == 1);
}

TEST_CASE("property: clean_corpus partitions the input") {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<RepoRecord> records;
        std::set<std::string> flagged;
        int n = 1 + static_cast<int>(rng() % 20);
        for (int i = 0; i < n; ++i) {
            records.push_back(make_record("r" + std::to_string(i),
                                          static_cast<int>(rng() % 40)));
            if (rng() % 2) flagged.insert(records.back().repo_id);
        }
        CleanResult out = clean_corpus(records, flagged, 20);
        CHECK(out.kept.size() + out.excluded.size() == records.size());
        std::set<std::string> seen;
        for (const auto& r : out.kept) CHECK(seen.insert(r.repo_id).second);
        for (const auto& e : out.excluded) CHECK(seen.insert(e.record.repo_id).second);
    }
}

TEST_CASE("diff_snapshots examples") {
    CorpusSnapshot old_snap, new_snap;
    old_snap.records["same"] = {true, "2022-01-01T00:00:00Z", "2022-01-01T00:00:00Z",
                                TakedownActor::None};
    new_snap.records["same"] = old_snap.records["same"];
    old_snap.records["gone"] = {true, "2022-01-01T00:00:00Z", "2022-01-01T00:00:00Z",
                                TakedownActor::None};
    new_snap.records["gone"] = {false, "2022-01-01T00:00:00Z", "2022-01-01T00:00:00Z",
                                TakedownActor::Owner};
    old_snap.records["dmca"] = old_snap.records["gone"];
    new_snap.records["dmca"] = {false, "2022-01-01T00:00:00Z", "2022-01-01T00:00:00Z",
                                TakedownActor::Platform};
    old_snap.records["pushed"] = {true, "2022-01-01T00:00:00Z", "2022-01-01T00:00:00Z",
                                  TakedownActor::None};
    new_snap.records["pushed"] = {true, "2023-02-01T00:00:00Z", "2023-02-01T00:00:00Z",
                                  TakedownActor::None};
    old_snap.records["meta"] = {true, "2022-01-01T00:00:00Z", "2022-01-01T00:00:00Z",
                                TakedownActor::None};
    new_snap.records["meta"] = {true, "2023-02-01T00:00:00Z", "2022-01-01T00:00:00Z",
                                TakedownActor::None};

    auto st = diff_snapshots(old_snap, new_snap);
    CHECK(st.at("same") == RepoStatus::Unchanged);
    CHECK(st.at("gone") == RepoStatus::TakenDownByOwner);
    CHECK(st.at("dmca") == RepoStatus::TakenDownByPlatform);
    CHECK(st.at("pushed") == RepoStatus::Pushed);  // precedence over Updated
    CHECK(st.at("meta") == RepoStatus::Updated);
}

TEST_CASE("diff_snapshots totality: vanished and new repos get a status") {
    CorpusSnapshot old_snap, new_snap;
    old_snap.records["vanished"] = {true, "t1", "t1", TakedownActor::None};
    new_snap.records["appeared"] = {true, "t1", "t1", TakedownActor::None};
    auto st = diff_snapshots(old_snap, new_snap);
    CHECK(st.size() == 2);
    CHECK(st.count("vanished") == 1);
    CHECK(st.count("appeared") == 1);
}

TEST_CASE("property: diff with self is all Unchanged") {
    std::mt19937 rng(9);
    CorpusSnapshot snap;
    for (int i = 0; i < 50; ++i) {
        SnapshotEntry e;
        e.available = rng() % 4 != 0;
        e.updated_at = "2022-01-0" + std::to_string(1 + rng() % 9);
        e.pushed_at = e.updated_at;
        snap.records["repo" + std::to_string(i)] = e;
    }
    for (const auto& [id, status] : diff_snapshots(snap, snap))
        CHECK(status == RepoStatus::Unchanged);
}

TEST_CASE("manifest round trip, sorted by repo_id") {
    RepoRecord a = make_record("zeta", 2);
    a.description = "desc with unicode \xc3\xa9";
    a.is_fork = true;
    a.parent_id = "alpha";
    a.local_path = "/tmp/zeta";
    RepoRecord b = make_record("alpha", 1);
    std::string text = manifest_to_jsonl({a, b});
    auto back = manifest_from_jsonl(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0] == b);  // sorted
    CHECK(back[1] == a);
    CHECK(manifest_to_jsonl(back) == text);
}

TEST_CASE("snapshot file round trip") {
    TempDir tmp;
    RepoRecord r = make_record("r1", 1);
    r.updated_at = "2022-05-05T00:00:00Z";
    r.pushed_at = "2022-05-04T00:00:00Z";
    CorpusSnapshot snap = snapshot_from_records({r}, "2022-06-01T00:00:00Z");
    write_snapshot(tmp.path / "snap.json", snap);
    CorpusSnapshot back = read_snapshot(tmp.path / "snap.json");
    CHECK(back.taken_at == snap.taken_at);
    REQUIRE(back.records.count("r1") == 1);
    CHECK(back.records["r1"].updated_at == "2022-05-05T00:00:00Z");
    CHECK(back.records["r1"].available);
}

TEST_CASE("guess_language basics") {
    CHECK(guess_language("poc.py") == "Python");
    CHECK(guess_language("a/b/exploit.c") == "C");
    CHECK(guess_language("x.unknownext").empty());
}

// ---- harvest ----

TEST_CASE("harvest from fixtures: dedup, idempotence, empty input") {
    TempDir tmp;
    // three distinct repos spread over two variants of the same CVE
    fixtures::put(tmp.path / "CVE-2021-44228.json",
                  R"({"items":[
                        {"id": 1, "name": "log4j-poc", "owner": {"login": "a"},
                         "description": "PoC for CVE-2021-44228", "language": "Java",
                         "stargazers_count": 5, "forks_count": 1, "fork": false,
                         "created_at": "t", "updated_at": "t", "pushed_at": "t"},
                        {"id": 2, "name": "dup", "owner": {"login": "b"},
                         "description": "CVE-2021-44228", "fork": false}
                      ]})");
    fixtures::put(tmp.path / "CVE_2021_44228.json",
                  R"({"items":[
                        {"id": 2, "name": "dup", "owner": {"login": "b"},
                         "description": "CVE-2021-44228", "fork": false},
                        {"id": 3, "name": "third", "owner": {"login": "c"},
                         "description": "also CVE-2021-44228", "fork": true,
                         "parent": {"id": 1}}
                      ]})");
    FixtureHostingClient client(tmp.path);
    CveId id;
    id.year = 2021;
    id.number = "44228";

    auto records = harvest({id}, client);
    REQUIRE(records.size() == 3);
    std::set<std::string> ids;
    for (const auto& r : records) CHECK(ids.insert(r.repo_id).second);
    CHECK(harvest({id}, client) == records);  // idempotent
    CHECK(harvest({}, client).empty());

    // fork lineage and metadata came through
    for (const auto& r : records) {
        if (r.repo_id == "3") {
            CHECK(r.is_fork);
            REQUIRE(r.parent_id.has_value());
            CHECK(*r.parent_id == "1");
        }
        if (r.repo_id == "1") {
            CHECK(r.primary_language == "Java");
            CHECK(r.stars == 5);
            CHECK(!r.cve_ids.empty());
        }
    }
}

TEST_CASE("query_variants covers the five separator forms") {
    CveId id;
    id.year = 2021;
    id.number = "44228";
    auto v = query_variants(id);
    REQUIRE(v.size() == 5);
    CHECK(v[0] == "CVE-2021-44228");
    CHECK(v[1] == "CVE 2021-44228");
    CHECK(v[2] == "CVE-2021 44228");
    CHECK(v[3] == "CVE 2021 44228");
    CHECK(v[4] == "CVE:2021-44228");
}
