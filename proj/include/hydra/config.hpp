#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace hydra::config {

/// Raised for any scenario/override validation problem. Messages carry
/// "<origin>:<line>:" prefixes when the offending entry came from a file.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat dotted-key/value tree. Values stay strings until a typed getter
/// reads them, so echoing the tree reproduces the inputs verbatim and a
/// replayed manifest is byte-identical. Getters mark keys consumed;
/// leftovers surface as unknown-key errors.
class Tree {
public:
    static Tree parse_file(const std::string& path);
    static Tree parse_string(const std::string& text, const std::string& origin);

    /// Insert or overwrite (programmatic entries carry line 0).
    void set(const std::string& key, const std::string& value);

    /// Overlay every entry of `other` on top of this tree.
    void merge(const Tree& other);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

    /// Keys sharing a dotted prefix (prefix itself excluded), sorted.
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

    /// "<origin>:<line>: key '<key>'" for error messages.
    std::string describe(const std::string& key) const;

    /// Keys never read by any getter, with their source locations.
    std::vector<std::string> unconsumed() const;

    /// Canonical sorted "key = value" dump.
    std::string echo() const;

    [[noreturn]] void fail(const std::string& key, const std::string& message) const;

private:
    struct Entry {
        std::string value;
        std::string origin;
        int line = 0;
        mutable bool consumed = false;
    };
    std::map<std::string, Entry> entries_;
};

}  // namespace hydra::config
