#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace qsgauc::cli {

enum class ValueType { Real, Count, Seed, Bool, Text, RealList, CountList };

struct KeySpec {
    std::string name;
    ValueType type;
    std::string default_value;
    std::string help;
};

/// Typed key/value settings for one command. Values are layered: defaults,
/// then a config file, then command-line overrides. Every assignment is type
/// checked, so a fully resolved Config never holds an unparsable value.
class Config {
public:
    Config(std::string command, std::vector<KeySpec> keys);

    /// Reads "key = value" lines; '#' starts a comment. Unknown keys and
    /// malformed lines throw ParseError with the line number.
    void load_file(const std::string& path);
    void load(std::istream& in, const std::string& origin);

    /// Throws InvalidParameter for unknown keys or values of the wrong type.
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;
    const std::string& text(const std::string& key) const;
    double real(const std::string& key) const;
    std::size_t count(const std::string& key) const;
    std::uint64_t seed(const std::string& key) const;
    bool flag(const std::string& key) const;
    std::vector<double> reals(const std::string& key) const;
    std::vector<std::size_t> counts(const std::string& key) const;

    const std::string& command() const noexcept { return command_; }
    const std::vector<KeySpec>& keys() const noexcept { return keys_; }

    /// Every key in declaration order, as it would be read back by load().
    void write(std::ostream& out) const;

private:
    const KeySpec& spec(const std::string& key) const;

    std::string command_;
    std::vector<KeySpec> keys_;
    std::map<std::string, std::string> values_;
};

/// Parsers shared with the value checks; all throw InvalidParameter naming `key`.
double parse_real_value(const std::string& key, const std::string& text);
std::size_t parse_count_value(const std::string& key, const std::string& text);
std::uint64_t parse_seed_value(const std::string& key, const std::string& text);
bool parse_bool_value(const std::string& key, const std::string& text);
std::vector<std::string> split_list(const std::string& text);

} // namespace qsgauc::cli
