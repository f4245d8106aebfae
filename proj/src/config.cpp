#include "tangle/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace tangle {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool valid_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

// Splits "name{args}" into name and raw args ("" when braces are absent).
void split_call(const std::string& text, std::string& name, std::string& args,
                const std::string& what) {
    const std::size_t open = text.find('{');
    if (open == std::string::npos) {
        name = trim(text);
        args.clear();
        return;
    }
    if (text.back() != '}') throw ConfigError("unbalanced braces in " + what + ": " + text, what);
    name = trim(text.substr(0, open));
    args = trim(text.substr(open + 1, text.size() - open - 2));
}

// Top-level comma split (respects nested braces).
std::vector<std::string> split_args(const std::string& args) {
    std::vector<std::string> parts;
    int depth = 0;
    std::string cur;
    for (char c : args) {
        if (c == '{') ++depth;
        if (c == '}') --depth;
        if (c == ',' && depth == 0) {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!trim(cur).empty()) parts.push_back(trim(cur));
    return parts;
}

double parse_number(const std::string& text, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected a number in " + what + ", got '" + text + "'", what);
    }
}

// key=value argument lists; bare values land under the given positional name.
std::map<std::string, std::string> parse_kv_args(const std::string& args,
                                                 const std::string& positional,
                                                 const std::string& what) {
    std::map<std::string, std::string> out;
    for (const std::string& part : split_args(args)) {
        const std::size_t eq = part.find('=');
        if (eq == std::string::npos) {
            if (out.count(positional)) throw ConfigError("duplicate value in " + what, what);
            out[positional] = part;
        } else {
            out[trim(part.substr(0, eq))] = trim(part.substr(eq + 1));
        }
    }
    return out;
}

}  // namespace

// --- ConfigMap ---------------------------------------------------------------

ConfigMap ConfigMap::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string(), path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path.string());
}

ConfigMap ConfigMap::parse_string(const std::string& text, const std::string& origin) {
    ConfigMap map;
    map.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header",
                                  line, lineno);
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name",
                                  line, lineno);
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected `key = value`",
                              line, lineno);
        }
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || !std::all_of(key.begin(), key.end(), valid_key_char)) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad key '" + key + "'",
                              key, lineno);
        }
        if (!section.empty()) key = section + "." + key;
        if (map.values_.count(key)) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'",
                              key, lineno);
        }
        map.values_[key] = Entry{value, lineno, false};
        map.order_.push_back(key);
    }
    return map;
}

const ConfigMap::Entry& ConfigMap::entry(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        throw ConfigError(origin_ + ": missing required field '" + key + "'", key);
    }
    it->second.used = true;
    return it->second;
}

std::string ConfigMap::get_string(const std::string& key) const { return entry(key).value; }

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? entry(key).value : fallback;
}

double ConfigMap::get_double(const std::string& key) const {
    const Entry& e = entry(key);
    try {
        std::size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument(e.value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": field '" + key +
                              "' is not a number: '" + e.value + "'",
                          key, e.line);
    }
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::int64_t ConfigMap::get_int(const std::string& key) const {
    const Entry& e = entry(key);
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc() || ptr != e.value.data() + e.value.size()) {
        throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": field '" + key +
                              "' is not an integer: '" + e.value + "'",
                          key, e.line);
    }
    return v;
}

std::int64_t ConfigMap::get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t ConfigMap::get_uint(const std::string& key) const {
    const Entry& e = entry(key);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc() || ptr != e.value.data() + e.value.size()) {
        throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": field '" + key +
                              "' is not an unsigned integer: '" + e.value + "'",
                          key, e.line);
    }
    return v;
}

std::uint64_t ConfigMap::get_uint(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_uint(key) : fallback;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Entry& e = entry(key);
    if (e.value == "true" || e.value == "1") return true;
    if (e.value == "false" || e.value == "0") return false;
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": field '" + key +
                          "' is not a boolean: '" + e.value + "'",
                      key, e.line);
}

void ConfigMap::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) {
        values_[key] = Entry{value, 0, false};
        order_.push_back(key);
    } else {
        it->second.value = value;
        it->second.used = false;
    }
}

std::vector<std::string> ConfigMap::unused_keys() const {
    std::vector<std::string> out;
    for (const std::string& key : order_) {
        if (!values_.at(key).used) out.push_back(key);
    }
    return out;
}

std::string ConfigMap::to_text() const {
    // Emit flat keys first, then grouped sections, keeping first-seen order.
    std::ostringstream out;
    std::vector<std::string> sections;
    for (const std::string& key : order_) {
        if (key.find('.') == std::string::npos) {
            out << key << " = " << values_.at(key).value << "\n";
        } else {
            const std::string section = key.substr(0, key.find('.'));
            if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
                sections.push_back(section);
            }
        }
    }
    for (const std::string& section : sections) {
        out << "\n[" << section << "]\n";
        for (const std::string& key : order_) {
            if (key.rfind(section + ".", 0) == 0) {
                out << key.substr(section.size() + 1) << " = " << values_.at(key).value << "\n";
            }
        }
    }
    return out.str();
}

// --- policy / weight grammar --------------------------------------------------

WeightFunction parse_weight(const std::string& text) {
    std::string name, args;
    split_call(text, name, args, "weight");
    auto kv = parse_kv_args(args, "value", "weight '" + text + "'");
    auto take = [&](const char* key) -> double {
        auto it = kv.count(key) ? kv.find(key) : kv.find("value");
        if (it == kv.end()) {
            throw ConfigError("weight '" + text + "' needs a " + key + " parameter", text);
        }
        const double v = parse_number(it->second, "weight '" + text + "'");
        kv.erase(it);
        return v;
    };
    WeightFunction out = WeightFunction::constant();
    if (name == "const") {
        out = WeightFunction::constant(kv.empty() ? 1.0 : take("c"));
    } else if (name == "exp") {
        out = WeightFunction::exp_decay(take("beta"));
    } else if (name == "window") {
        out = WeightFunction::window(take("width"));
    } else {
        throw ConfigError("unknown weight family '" + name + "' (const|exp|window)", text);
    }
    if (!kv.empty()) {
        throw ConfigError("weight '" + text + "' has unexpected parameter '" + kv.begin()->first + "'",
                          text);
    }
    return out;
}

SelectionPolicy parse_policy(const std::string& text) {
    std::string name, args;
    split_call(text, name, args, "policy");
    if (name == "uniform") {
        if (!args.empty()) throw ConfigError("uniform takes no parameters", text);
        return SelectionPolicy::uniform();
    }
    if (name == "mcmc") {
        auto kv = parse_kv_args(args, "alpha", "policy '" + text + "'");
        auto it = kv.find("alpha");
        if (it == kv.end()) throw ConfigError("mcmc{alpha} needs alpha", text);
        return SelectionPolicy::mcmc(parse_number(it->second, "policy '" + text + "'"));
    }
    if (name == "age") {
        auto kv = parse_kv_args(args, "g", "policy '" + text + "'");
        auto g_it = kv.find("g");
        if (g_it == kv.end()) throw ConfigError("age{g=...} needs a weight family", text);
        // Reassemble a weight string from the remaining parameters.
        std::string weight_text = g_it->second;
        kv.erase(g_it);
        if (!kv.empty()) {
            weight_text += "{";
            bool first = true;
            for (const auto& [k, v] : kv) {
                if (!first) weight_text += ",";
                weight_text += k + "=" + v;
                first = false;
            }
            weight_text += "}";
        }
        return SelectionPolicy::age_weighted(parse_weight(weight_text));
    }
    if (name == "hybrid") {
        const std::vector<std::string> parts = split_args(args);
        if (parts.size() != 2) throw ConfigError("hybrid{first,second} needs two policies", text);
        try {
            return SelectionPolicy::hybrid(parse_policy(parts[0]), parse_policy(parts[1]));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("hybrid policy: ") + e.what(), text);
        }
    }
    throw ConfigError("unknown policy '" + name + "' (uniform|mcmc|age|hybrid)", text);
}

}  // namespace tangle
