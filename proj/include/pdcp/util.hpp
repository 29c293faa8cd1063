#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pdcp::util {

// FNV-1a, used for config hashes and derived seeds.
std::uint64_t fnv1a(const std::string& s);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// Shortest round-trip decimal form; the one float format used in CSV output
// so reruns are byte-identical.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
void ensure_parent_dir(const std::string& path);
void ensure_dir(const std::string& path);
bool file_exists(const std::string& path);

std::vector<std::string> split(const std::string& s, char sep);

}  // namespace pdcp::util
