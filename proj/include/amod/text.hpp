#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace amod::text {

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

/// Fixed-point with `digits` decimals; used for presentation only.
std::string format_fixed(double v, int digits);

std::string_view trim(std::string_view s);

std::vector<std::string_view> split_ws(std::string_view line);

/// Splits one CSV line. Double-quoted fields may contain commas; `""` is an
/// escaped quote.
std::vector<std::string> split_csv(std::string_view line);

bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, long long& out);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ull);
std::string hex64(std::uint64_t v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace amod::text
