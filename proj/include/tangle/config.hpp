#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tangle/selection.hpp"
#include "tangle/weight.hpp"

namespace tangle {

// Parse/lookup failure with the offending location attached.
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& message, std::string field_in, int line_in = 0)
        : std::runtime_error(message), field(std::move(field_in)), line(line_in) {}
    std::string field;
    int line = 0;
};

// Plain-text scenario file: `key = value` entries plus one level of
// `[section]` tables (stored as "section.key"). Insertion order is kept so
// manifests round-trip through the same syntax.
class ConfigMap {
public:
    static ConfigMap parse_file(const std::filesystem::path& path);
    static ConfigMap parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    void set(const std::string& key, const std::string& value);

    // Keys never read back through a getter; catches typos in overrides.
    std::vector<std::string> unused_keys() const;

    const std::vector<std::string>& ordered_keys() const { return order_; }
    std::string to_text() const;
    const std::string& origin() const { return origin_; }

private:
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool used = false;
    };

    const Entry& entry(const std::string& key) const;

    std::string origin_;
    std::map<std::string, Entry> values_;
    std::vector<std::string> order_;
};

// Selection-policy grammar used in scenario files:
//   uniform
//   mcmc{ALPHA}                (also mcmc{alpha=ALPHA})
//   age{g=exp,beta=B} | age{g=const[,c=C]} | age{g=window,width=W}
//   hybrid{FIRST,SECOND}       (one nesting level)
SelectionPolicy parse_policy(const std::string& text);

// Weight grammar: const[{C}] | exp{BETA} | window{WIDTH}.
WeightFunction parse_weight(const std::string& text);

}  // namespace tangle
