#include "pocscan/extract.hpp"

#include <algorithm>
#include <cctype>

#include "pocscan/ipaddr.hpp"
#include "pocscan/sha256.hpp"

namespace pocscan {

const char* to_string(IpContext c) {
    switch (c) {
        case IpContext::Code: return "code";
        case IpContext::Comment: return "comment";
        case IpContext::Doc: return "doc";
        case IpContext::DecodedPayload: return "decoded-payload";
    }
    return "code";
}

const char* to_string(IpClass c) {
    switch (c) {
        case IpClass::Public: return "public";
        case IpClass::Private: return "private";
        case IpClass::Reserved: return "reserved";
    }
    return "public";
}

const char* to_string(PayloadEncoding e) {
    return e == PayloadEncoding::Hex ? "hex" : "base64";
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

// Per-line context classification. Comment prefixes cover the corpus's
// common languages; /* ... */ blocks are tracked across lines.
std::vector<IpContext> line_contexts(const std::string& content,
                                     std::vector<std::size_t>& line_starts) {
    std::vector<IpContext> ctx;
    line_starts.clear();
    bool in_block_comment = false;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        std::size_t eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        std::string line = content.substr(pos, eol - pos);
        line_starts.push_back(pos);

        std::string trimmed = line;
        trimmed.erase(0, trimmed.find_first_not_of(" \t"));
        std::string low = lower(line);

        IpContext c = IpContext::Code;
        bool line_in_block = in_block_comment;
        if (line.find("/*") != std::string::npos) {
            line_in_block = true;
            if (line.rfind("*/") != std::string::npos &&
                line.rfind("*/") > line.find("/*"))
                in_block_comment = false;
            else
                in_block_comment = true;
        } else if (in_block_comment && line.find("*/") != std::string::npos) {
            in_block_comment = false;
        }

        if (line_in_block || trimmed.rfind("#", 0) == 0 || trimmed.rfind("//", 0) == 0 ||
            trimmed.rfind(";", 0) == 0 || trimmed.rfind("--", 0) == 0 ||
            trimmed.rfind("*", 0) == 0) {
            c = IpContext::Comment;
        } else if (low.find("usage:") != std::string::npos ||
                   low.find("example") != std::string::npos ||
                   low.find("--help") != std::string::npos ||
                   low.find(" -h ") != std::string::npos) {
            c = IpContext::Doc;
        }
        ctx.push_back(c);
        if (eol == content.size()) break;
        pos = eol + 1;
    }
    return ctx;
}

IpContext context_at(const std::vector<IpContext>& ctx,
                     const std::vector<std::size_t>& line_starts, std::size_t offset) {
    auto it = std::upper_bound(line_starts.begin(), line_starts.end(), offset);
    std::size_t idx = static_cast<std::size_t>(it - line_starts.begin());
    return ctx[idx == 0 ? 0 : idx - 1];
}

IpClass classify(std::uint32_t addr) {
    if (is_private_ipv4(addr)) return IpClass::Private;
    if (is_reserved_ipv4(addr)) return IpClass::Reserved;
    return IpClass::Public;
}

// Parses one octet (maximal digit run, 1-3 digits, value <= 255) at `i`.
// Returns the value or -1; advances `i` past the digits on success.
int take_octet(const std::string& s, std::size_t& i) {
    std::size_t start = i;
    int value = 0;
    while (i < s.size() && is_digit(s[i])) {
        value = value * 10 + (s[i] - '0');
        if (i - start >= 3 || value > 255) return -1;
        ++i;
    }
    if (i == start) return -1;
    return value;
}

} // namespace

std::vector<IpCandidate> extract_ips(const std::string& content, const std::string& file) {
    std::vector<std::size_t> line_starts;
    std::vector<IpContext> ctx = line_contexts(content, line_starts);

    std::vector<IpCandidate> out;
    const std::size_t n = content.size();
    std::size_t i = 0;
    while (i < n) {
        if (!is_digit(content[i])) { ++i; continue; }
        // left boundary: neither digit nor dot
        if (i > 0 && (is_digit(content[i - 1]) || content[i - 1] == '.')) {
            while (i < n && is_digit(content[i])) ++i;
            continue;
        }
        std::size_t start = i;
        std::size_t p = i;
        bool ok = true;
        for (int oct = 0; oct < 4 && ok; ++oct) {
            if (take_octet(content, p) < 0) { ok = false; break; }
            if (oct < 3) {
                if (p < n && content[p] == '.') ++p;
                else ok = false;
            }
        }
        if (ok && p < n && (is_digit(content[p]) || content[p] == '.')) ok = false;
        if (!ok) {
            while (i < n && is_digit(content[i])) ++i;
            continue;
        }
        std::string literal = content.substr(start, p - start);
        auto addr = parse_ipv4(literal);
        if (addr) {
            out.push_back(IpCandidate{literal, file, start,
                                      context_at(ctx, line_starts, start), classify(*addr)});
        }
        i = p;
    }
    return out;
}

std::vector<IpCandidate> filter_public(const std::vector<IpCandidate>& candidates,
                                       std::vector<ReviewEntry>& review) {
    std::vector<IpCandidate> kept;
    for (const auto& c : candidates) {
        bool context_ok =
            c.context == IpContext::Code || c.context == IpContext::DecodedPayload;
        if (c.classification == IpClass::Public && context_ok) {
            kept.push_back(c);
            continue;
        }
        std::string reason;
        if (c.classification == IpClass::Private) reason = "private-range";
        else if (c.classification == IpClass::Reserved) reason = "reserved-range";
        else if (c.context == IpContext::Comment) reason = "comment-context";
        else reason = "doc-context";
        review.push_back({c.file, c.offset, c.literal, reason});
    }
    return kept;
}

std::vector<std::string> extract_urls(const std::string& text) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i + 7 < text.size(); ++i) {
        if (text.compare(i, 7, "http://") != 0 && text.compare(i, 8, "https://") != 0)
            continue;
        std::size_t end = i;
        while (end < text.size()) {
            char c = text[end];
            if (std::isspace((unsigned char)c) || c == '"' || c == '\'' || c == '<' ||
                c == '>' || c == '`')
                break;
            ++end;
        }
        std::string url = text.substr(i, end - i);
        while (!url.empty() && (url.back() == '.' || url.back() == ',' || url.back() == ')' ||
                                url.back() == ';'))
            url.pop_back();
        if (url.size() > 8) out.push_back(url);
        i = end;
    }
    return out;
}

bool mostly_printable(const std::vector<std::uint8_t>& bytes, double threshold) {
    if (bytes.empty()) return false;
    std::size_t good = 0;
    for (std::uint8_t b : bytes)
        if ((b >= 0x20 && b < 0x7f) || b == '\t' || b == '\n' || b == '\r') ++good;
    return static_cast<double>(good) >= threshold * static_cast<double>(bytes.size());
}

std::string lossy_to_text(const std::vector<std::uint8_t>& bytes) {
    std::string out;
    out.reserve(bytes.size());
    for (std::uint8_t b : bytes)
        out += ((b >= 0x20 && b < 0x7f) || b == '\t' || b == '\n' || b == '\r')
                   ? static_cast<char>(b)
                   : '?';
    return out;
}

namespace {

int hex_val(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

void attach_embedded(EncodedPayload& p) {
    std::string text = lossy_to_text(p.decoded);
    for (auto& ip : extract_ips(text, p.source_file)) {
        ip.context = IpContext::DecodedPayload;
        p.embedded_ips.push_back(ip);
    }
    p.embedded_urls = extract_urls(text);
}

std::vector<EncodedPayload> scan_hex(const std::string& content, const std::string& file,
                                     int depth, double printable_threshold) {
    // Collect \xHH escapes (at most two hex digits per escape) and
    // concatenate the digits in document order into one per-file payload.
    std::string digits;
    for (std::size_t i = 0; i + 1 < content.size(); ++i) {
        if (content[i] != '\\' || content[i + 1] != 'x') continue;
        std::size_t p = i + 2;
        int taken = 0;
        while (p < content.size() && taken < 2 && hex_val(content[p]) >= 0) {
            digits += content[p];
            ++p;
            ++taken;
        }
        if (taken > 0) i = p - 1;
    }
    if (digits.empty()) return {};

    EncodedPayload payload;
    payload.encoding = PayloadEncoding::Hex;
    payload.source_file = file;
    payload.raw = digits;
    payload.depth = depth;
    if (digits.size() % 2 != 0) {
        payload.truncated_nibble = true;
        digits.pop_back();
    }
    for (std::size_t i = 0; i + 1 < digits.size(); i += 2) {
        payload.decoded.push_back(
            static_cast<std::uint8_t>(hex_val(digits[i]) * 16 + hex_val(digits[i + 1])));
    }
    payload.printable = mostly_printable(payload.decoded, printable_threshold);
    attach_embedded(payload);
    return {payload};
}

bool is_b64_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '+' || c == '/';
}

int b64_val(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

bool decode_base64(const std::string& raw, std::vector<std::uint8_t>& out) {
    if (raw.size() % 4 != 0 || raw.empty()) return false;
    out.clear();
    for (std::size_t i = 0; i < raw.size(); i += 4) {
        int pad = 0;
        int v[4];
        for (int k = 0; k < 4; ++k) {
            char c = raw[i + k];
            if (c == '=') {
                // '=' only in the last group, only in the final 1-2 slots
                if (i + 4 != raw.size() || k < 2) return false;
                ++pad;
                v[k] = 0;
            } else {
                if (pad > 0) return false; // data after padding
                v[k] = b64_val(c);
                if (v[k] < 0) return false;
            }
        }
        out.push_back(static_cast<std::uint8_t>((v[0] << 2) | (v[1] >> 4)));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>(((v[1] & 0xf) << 4) | (v[2] >> 2)));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(((v[2] & 0x3) << 6) | v[3]));
    }
    return true;
}

void scan_base64_rec(const std::string& content, const std::string& file, int depth,
                     const Base64Options& opts, std::vector<EncodedPayload>& out) {
    const std::size_t n = content.size();
    std::size_t i = 0;
    while (i < n) {
        if (!is_b64_char(content[i])) { ++i; continue; }
        std::size_t start = i;
        while (i < n && is_b64_char(content[i])) ++i;
        std::size_t pad = 0;
        while (i < n && content[i] == '=' && pad < 2) { ++i; ++pad; }
        // padding glued to more alphabet chars is not a valid run
        if (pad > 0 && i < n && (is_b64_char(content[i]) || content[i] == '='))
            continue;
        std::size_t total = (i - start);
        if (total < opts.min_length || total % 4 != 0) continue;

        std::string raw = content.substr(start, total);
        EncodedPayload payload;
        payload.encoding = PayloadEncoding::Base64;
        payload.source_file = file;
        payload.raw = raw;
        payload.depth = depth;
        if (!decode_base64(raw, payload.decoded)) continue;
        payload.printable = mostly_printable(payload.decoded, opts.printable_threshold);
        attach_embedded(payload);

        if (depth < opts.max_depth && payload.printable) {
            std::string inner = lossy_to_text(payload.decoded);
            scan_base64_rec(inner, file, depth + 1, opts, out);
            for (auto& hex : scan_hex(inner, file, depth + 1, opts.printable_threshold))
                out.push_back(std::move(hex));
        }
        out.push_back(std::move(payload));
    }
}

} // namespace

std::vector<EncodedPayload> extract_hex_payloads(const std::string& content,
                                                 const std::string& file) {
    return scan_hex(content, file, 1, 0.90);
}

std::vector<EncodedPayload> extract_base64_payloads(const std::string& content,
                                                    const std::string& file,
                                                    const Base64Options& opts) {
    std::vector<EncodedPayload> out;
    scan_base64_rec(content, file, 1, opts, out);
    std::stable_sort(out.begin(), out.end(),
                     [](const EncodedPayload& a, const EncodedPayload& b) {
                         return a.depth < b.depth;
                     });
    return out;
}

HashResult hash_binaries(const std::filesystem::path& root, const FileInventory& inventory) {
    HashResult res;
    for (const auto& bin : inventory.binary_files) {
        try {
            BinaryArtifact a;
            a.path = bin.path;
            a.size = bin.size;
            a.magic = bin.magic;
            a.sha256 = sha256_file(root / bin.path);
            res.artifacts.push_back(std::move(a));
        } catch (const std::exception& e) {
            res.skipped.push_back({bin.path, std::string("unreadable: ") + e.what()});
        }
    }
    return res;
}

} // namespace pocscan
