#include "pocscan/ipaddr.hpp"

namespace pocscan {

std::optional<std::uint32_t> parse_ipv4(const std::string& text) {
    std::uint32_t addr = 0;
    int octets = 0;
    std::size_t i = 0;
    while (i < text.size() && octets < 4) {
        int value = 0, digits = 0;
        while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
            value = value * 10 + (text[i] - '0');
            if (++digits > 3 || value > 255) return std::nullopt;
            ++i;
        }
        if (digits == 0) return std::nullopt;
        addr = (addr << 8) | static_cast<std::uint32_t>(value);
        ++octets;
        if (octets < 4) {
            if (i >= text.size() || text[i] != '.') return std::nullopt;
            ++i;
        }
    }
    if (octets != 4 || i != text.size()) return std::nullopt;
    return addr;
}

std::string format_ipv4(std::uint32_t addr) {
    return std::to_string((addr >> 24) & 0xff) + "." + std::to_string((addr >> 16) & 0xff) +
           "." + std::to_string((addr >> 8) & 0xff) + "." + std::to_string(addr & 0xff);
}

bool in_cidr(std::uint32_t addr, std::uint32_t network, int prefix_len) {
    if (prefix_len <= 0) return true;
    std::uint32_t mask = prefix_len >= 32 ? 0xffffffffu : ~(0xffffffffu >> prefix_len);
    return (addr & mask) == (network & mask);
}

bool is_private_ipv4(std::uint32_t addr) {
    return in_cidr(addr, 0x0a000000u, 8) ||   // 10.0.0.0/8
           in_cidr(addr, 0xac100000u, 12) ||  // 172.16.0.0/12
           in_cidr(addr, 0xc0a80000u, 16);    // 192.168.0.0/16
}

bool is_reserved_ipv4(std::uint32_t addr) {
    return in_cidr(addr, 0x00000000u, 8) ||   // 0.0.0.0/8
           in_cidr(addr, 0x7f000000u, 8) ||   // 127.0.0.0/8 loopback
           in_cidr(addr, 0xa9fe0000u, 16) ||  // 169.254.0.0/16 link-local
           in_cidr(addr, 0xc0000200u, 24) ||  // 192.0.2.0/24 TEST-NET-1
           in_cidr(addr, 0xc6336400u, 24) ||  // 198.51.100.0/24 TEST-NET-2
           in_cidr(addr, 0xcb007100u, 24) ||  // 203.0.113.0/24 TEST-NET-3
           addr >= 0xe0000000u;               // multicast and class E
}

} // namespace pocscan
