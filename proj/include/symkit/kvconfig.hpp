#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

namespace symkit {

// Flat key=value config text. Keys sort lexicographically on write, which
// makes the serialized form canonical (same map, same bytes).
using KvMap = std::map<std::string, std::string>;

KvMap parse_kv(std::istream& is);
KvMap parse_kv_file(const std::string& path);
void write_kv(std::ostream& os, const KvMap& kv);
std::string kv_to_string(const KvMap& kv);

// Round-trippable decimal text for a double (17 significant digits,
// trailing zeros stripped). Used everywhere a float goes into a text file.
std::string format_double(double v);

// Typed lookups; missing key returns the fallback, malformed value throws.
std::string kv_get(const KvMap& kv, const std::string& key,
                   const std::string& fallback);
double kv_get(const KvMap& kv, const std::string& key, double fallback);
int kv_get(const KvMap& kv, const std::string& key, int fallback);
std::uint64_t kv_get(const KvMap& kv, const std::string& key,
                     std::uint64_t fallback);
bool kv_get(const KvMap& kv, const std::string& key, bool fallback);

}  // namespace symkit
