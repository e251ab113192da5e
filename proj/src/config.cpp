#include "hydra/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace hydra::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

Tree Tree::parse_string(const std::string& text, const std::string& origin) {
    Tree tree;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::size_t hash = raw.find('#');
        std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        }
        if (tree.entries_.count(key) != 0) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" +
                              key + "'");
        }
        tree.entries_[key] = Entry{value, origin, line_no, false};
    }
    return tree;
}

Tree Tree::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

void Tree::set(const std::string& key, const std::string& value) {
    entries_[key] = Entry{value, "", 0, false};
}

void Tree::merge(const Tree& other) {
    for (const auto& [key, entry] : other.entries_) entries_[key] = entry;
}

bool Tree::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string Tree::describe(const std::string& key) const {
    const auto it = entries_.find(key);
    std::string loc;
    if (it != entries_.end() && !it->second.origin.empty()) {
        loc = it->second.origin + ":" + std::to_string(it->second.line) + ": ";
    }
    return loc + "key '" + key + "'";
}

void Tree::fail(const std::string& key, const std::string& message) const {
    throw ConfigError(describe(key) + ": " + message);
}

std::string Tree::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.consumed = true;
    return it->second.value;
}

double Tree::get_double(const std::string& key, double fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.consumed = true;
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(it->second.value, &pos);
    } catch (const std::exception&) {
        fail(key, "expected a number, got '" + it->second.value + "'");
    }
    if (pos != it->second.value.size()) {
        fail(key, "expected a number, got '" + it->second.value + "'");
    }
    return v;
}

int Tree::get_int(const std::string& key, int fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.consumed = true;
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(it->second.value, &pos);
    } catch (const std::exception&) {
        fail(key, "expected an integer, got '" + it->second.value + "'");
    }
    if (pos != it->second.value.size()) {
        fail(key, "expected an integer, got '" + it->second.value + "'");
    }
    return static_cast<int>(v);
}

std::uint64_t Tree::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.consumed = true;
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
        v = std::stoull(it->second.value, &pos);
    } catch (const std::exception&) {
        fail(key, "expected an unsigned integer, got '" + it->second.value + "'");
    }
    if (pos != it->second.value.size()) {
        fail(key, "expected an unsigned integer, got '" + it->second.value + "'");
    }
    return v;
}

bool Tree::get_bool(const std::string& key, bool fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.consumed = true;
    const std::string& v = it->second.value;
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(key, "expected true/false, got '" + v + "'");
}

std::vector<std::string> Tree::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (auto it = entries_.lower_bound(prefix); it != entries_.end(); ++it) {
        if (it->first.compare(0, prefix.size(), prefix) != 0) break;
        out.push_back(it->first);
    }
    return out;
}

std::vector<std::string> Tree::unconsumed() const {
    std::vector<std::string> out;
    for (const auto& [key, entry] : entries_) {
        if (!entry.consumed) out.push_back(describe(key));
    }
    return out;
}

std::string Tree::echo() const {
    std::ostringstream out;
    for (const auto& [key, entry] : entries_) {
        out << key << " = " << entry.value << "\n";
    }
    return out.str();
}

}  // namespace hydra::config
