#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pocscan/corpus.hpp"

namespace pocscan {

enum class IpContext { Code, Comment, Doc, DecodedPayload };
enum class IpClass { Public, Private, Reserved };

const char* to_string(IpContext c);
const char* to_string(IpClass c);

struct IpCandidate {
    std::string literal;    // dotted quad as matched
    std::string file;
    std::size_t offset = 0; // byte index into the scanned text
    IpContext context = IpContext::Code;
    IpClass classification = IpClass::Public;

    friend bool operator==(const IpCandidate&, const IpCandidate&) = default;
};

// Dropped candidates are logged instead of silently discarded so they can
// be reviewed by hand.
struct ReviewEntry {
    std::string file;
    std::size_t offset = 0;
    std::string literal;
    std::string reason;
};

enum class PayloadEncoding { Hex, Base64 };

const char* to_string(PayloadEncoding e);

struct EncodedPayload {
    PayloadEncoding encoding = PayloadEncoding::Base64;
    std::string source_file;
    std::string raw;                       // text as matched (hex: concatenated digits)
    std::vector<std::uint8_t> decoded;
    bool printable = false;                // >= 90% printable ASCII / whitespace
    int depth = 1;
    bool truncated_nibble = false;         // hex only: odd trailing nibble dropped
    std::vector<IpCandidate> embedded_ips; // all context == DecodedPayload
    std::vector<std::string> embedded_urls;
};

struct BinaryArtifact {
    std::string path;
    std::uint64_t size = 0;
    std::string sha256;
    std::string magic; // "MZ" or "other"
};

struct HashResult {
    std::vector<BinaryArtifact> artifacts;
    std::vector<SkippedFileEntry> skipped;
};

// Matches exactly four dot-joined octets (each 0-255) with non-digit,
// non-dot boundaries on both sides, so "1.2.3.4.5" yields nothing.
// Candidates on comment lines or inside usage/help text get a non-code
// context; classification follows RFC1918 plus the reserved ranges.
std::vector<IpCandidate> extract_ips(const std::string& content, const std::string& file);

// Keeps public candidates in code or decoded-payload context. Everything
// dropped lands in `review` with the drop reason.
std::vector<IpCandidate> filter_public(const std::vector<IpCandidate>& candidates,
                                       std::vector<ReviewEntry>& review);

// Collects \x-escaped hex bytes, concatenating all matches in a file in
// document order into a single payload. An odd trailing nibble is dropped
// and flagged. Embedded IPs and URLs are pulled from the decoded bytes.
std::vector<EncodedPayload> extract_hex_payloads(const std::string& content,
                                                 const std::string& file);

struct Base64Options {
    std::size_t min_length = 20; // total matched chars incl. padding
    int max_depth = 3;
    double printable_threshold = 0.90;
};

// Finds strictly-valid base64 runs (4-char groups, optional padded tail,
// length floor), decodes them, and recursively re-scans decoded text for
// further base64 and hex payloads up to max_depth.
std::vector<EncodedPayload> extract_base64_payloads(const std::string& content,
                                                    const std::string& file,
                                                    const Base64Options& opts = {});

// One artifact per binary file under root; duplicates are preserved here
// and deduplicated only in unique-hash rollups.
HashResult hash_binaries(const std::filesystem::path& root, const FileInventory& inventory);

// Shared helpers, also used by the payload scanners.
std::vector<std::string> extract_urls(const std::string& text);
bool mostly_printable(const std::vector<std::uint8_t>& bytes, double threshold = 0.90);
std::string lossy_to_text(const std::vector<std::uint8_t>& bytes);

} // namespace pocscan
