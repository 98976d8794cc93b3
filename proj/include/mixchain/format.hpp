#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

namespace mixchain {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Strict numeric parsing: the whole string must be consumed.
bool parse_double(std::string_view text, double& out);
bool parse_u64(std::string_view text, std::uint64_t& out);

std::string_view trim(std::string_view s);

}  // namespace mixchain
