#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace trilead {

// Flat `key = value` configuration with `#` comments. Used for run configs
// and embedded in checkpoints; canonical() gives a stable, digestible text.
class KvConfig {
  public:
    static KvConfig parse_text(const std::string& text);
    static KvConfig parse_file(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    long get_long(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;

    // Keys sorted, one `key = value` per line.
    std::string canonical() const;

    // Throws naming the first key not in `allowed`.
    void validate_keys(const std::vector<std::string>& allowed) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

// FNV-1a 64-bit, used as the checkpoint config digest.
std::uint64_t fnv1a64(const std::string& s);

}  // namespace trilead
