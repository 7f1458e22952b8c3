#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace pocscan {

// Dotted-quad parsing/printing on host-order 32-bit values.
std::optional<std::uint32_t> parse_ipv4(const std::string& text);
std::string format_ipv4(std::uint32_t addr);

bool in_cidr(std::uint32_t addr, std::uint32_t network, int prefix_len);

// RFC1918: 10/8, 172.16/12, 192.168/16.
bool is_private_ipv4(std::uint32_t addr);

// Loopback, link-local, multicast and above (>= 224.0.0.0), the
// documentation /24s and 0.0.0.0/8.
bool is_reserved_ipv4(std::uint32_t addr);

} // namespace pocscan
