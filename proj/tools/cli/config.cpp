#include "cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "qsgauc/error.hpp"
#include "qsgauc/table.hpp"

namespace qsgauc::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void check_value(const KeySpec& spec, const std::string& value) {
    switch (spec.type) {
    case ValueType::Real:
        parse_real_value(spec.name, value);
        break;
    case ValueType::Count:
        parse_count_value(spec.name, value);
        break;
    case ValueType::Seed:
        parse_seed_value(spec.name, value);
        break;
    case ValueType::Bool:
        parse_bool_value(spec.name, value);
        break;
    case ValueType::Text:
        break;
    case ValueType::RealList:
        for (const auto& item : split_list(value))
            parse_real_value(spec.name, item);
        break;
    case ValueType::CountList:
        for (const auto& item : split_list(value))
            parse_count_value(spec.name, item);
        break;
    }
}

} // namespace

double parse_real_value(const std::string& key, const std::string& text) {
    try {
        const double v = parse_real(text);
        if (!std::isfinite(v))
            throw InvalidInput("not finite");
        return v;
    } catch (const InvalidInput&) {
        throw InvalidParameter("key '" + key + "': expected a finite real number, got '" + text +
                               "'");
    }
}

std::size_t parse_count_value(const std::string& key, const std::string& text) {
    std::size_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (text.empty() || ec != std::errc() || ptr != end)
        throw InvalidParameter("key '" + key + "': expected a nonnegative integer, got '" + text +
                               "'");
    return v;
}

std::uint64_t parse_seed_value(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (text.empty() || ec != std::errc() || ptr != end)
        throw InvalidParameter("key '" + key + "': expected an unsigned 64-bit integer, got '" +
                               text + "'");
    return v;
}

bool parse_bool_value(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on")
        return true;
    if (text == "false" || text == "0" || text == "no" || text == "off")
        return false;
    throw InvalidParameter("key '" + key + "': expected true or false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::string current;
    for (char ch : text) {
        if (ch == ',') {
            items.push_back(trim(current));
            current.clear();
        } else {
            current += ch;
        }
    }
    if (!trim(current).empty() || !items.empty())
        items.push_back(trim(current));
    return items;
}

Config::Config(std::string command, std::vector<KeySpec> keys)
    : command_(std::move(command)), keys_(std::move(keys)) {
    for (const auto& k : keys_)
        values_[k.name] = k.default_value;
}

const KeySpec& Config::spec(const std::string& key) const {
    const auto it = std::find_if(keys_.begin(), keys_.end(),
                                 [&](const KeySpec& k) { return k.name == key; });
    if (it == keys_.end())
        throw InvalidParameter("unknown key '" + key + "' for command " + command_);
    return *it;
}

void Config::set(const std::string& key, const std::string& value) {
    const KeySpec& s = spec(key);
    check_value(s, value);
    values_[key] = value;
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

void Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file " + path);
    load(in, path);
}

void Config::load(std::istream& in, const std::string& origin) {
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(ParseError::Kind::Malformed, number, line,
                             origin + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ParseError(ParseError::Kind::Malformed, number, line, origin + ": empty key");
        try {
            set(key, value);
        } catch (const InvalidParameter& e) {
            throw ParseError(ParseError::Kind::Malformed, number, key,
                             origin + ": " + e.what());
        }
    }
}

const std::string& Config::text(const std::string& key) const {
    spec(key);
    return values_.at(key);
}

double Config::real(const std::string& key) const { return parse_real_value(key, text(key)); }

std::size_t Config::count(const std::string& key) const {
    return parse_count_value(key, text(key));
}

std::uint64_t Config::seed(const std::string& key) const {
    return parse_seed_value(key, text(key));
}

bool Config::flag(const std::string& key) const { return parse_bool_value(key, text(key)); }

std::vector<double> Config::reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(text(key)))
        out.push_back(parse_real_value(key, item));
    return out;
}

std::vector<std::size_t> Config::counts(const std::string& key) const {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(text(key)))
        out.push_back(parse_count_value(key, item));
    return out;
}

void Config::write(std::ostream& out) const {
    out << "# resolved configuration for '" << command_ << "'\n";
    for (const auto& k : keys_)
        out << k.name << " = " << values_.at(k.name) << '\n';
}

} // namespace qsgauc::cli
