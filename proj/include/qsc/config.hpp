#pragma once

// Minimal TOML subset for run configuration files.
//
// Supported: comments, [table] headers (one level), bare keys, basic
// strings, integers, floats, booleans and single-line arrays of those.
// Keys are flattened to "table.key". Anything else is a format error.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qsc/error.hpp"

namespace qsc {

struct ConfigValue;
using ConfigArray = std::vector<ConfigValue>;

struct ConfigValue {
    std::variant<bool, std::int64_t, double, std::string, ConfigArray> data;

    [[nodiscard]] bool is_array() const { return std::holds_alternative<ConfigArray>(data); }
};

using ConfigTable = std::map<std::string, ConfigValue>;

namespace detail {

class TomlReader {
  public:
    TomlReader(std::string_view line, std::size_t line_no) : s_(line), line_no_(line_no) {}

    [[noreturn]] void fail(const std::string &what) const {
        throw FormatError("config line " + std::to_string(line_no_) + ": " + what);
    }
    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) {
            ++pos_;
        }
    }
    [[nodiscard]] bool at_end_or_comment() {
        skip_ws();
        return pos_ >= s_.size() || s_[pos_] == '#';
    }
    bool consume(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    std::string key() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                                    s_[pos_] == '-')) {
            ++pos_;
        }
        if (pos_ == start) {
            fail("expected a key");
        }
        return std::string(s_.substr(start, pos_ - start));
    }
    ConfigValue value() {
        skip_ws();
        if (pos_ >= s_.size()) {
            fail("missing value");
        }
        const char c = s_[pos_];
        if (c == '"') {
            return {string()};
        }
        if (c == '[') {
            ++pos_;
            ConfigArray arr;
            if (consume(']')) {
                return {arr};
            }
            for (;;) {
                arr.push_back(value());
                if (consume(']')) {
                    return {arr};
                }
                if (!consume(',')) {
                    fail("expected ',' or ']' in array");
                }
                if (consume(']')) { // trailing comma
                    return {arr};
                }
            }
        }
        const std::size_t start = pos_;
        while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' && s_[pos_] != ' ' &&
               s_[pos_] != '\t') {
            ++pos_;
        }
        std::string tok(s_.substr(start, pos_ - start));
        if (tok == "true" || tok == "false") {
            return {tok == "true"};
        }
        std::erase(tok, '_');
        const bool is_float = tok.find_first_of(".eE") != std::string::npos || tok == "inf" || tok == "nan";
        if (!is_float) {
            std::int64_t iv = 0;
            const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), iv);
            if (ec == std::errc() && p == tok.data() + tok.size()) {
                return {iv};
            }
        } else {
            double dv = 0.0;
            const char *b = tok.data() + (tok.starts_with('+') ? 1 : 0);
            const auto [p, ec] = std::from_chars(b, tok.data() + tok.size(), dv);
            if (ec == std::errc() && p == tok.data() + tok.size()) {
                return {dv};
            }
        }
        fail("cannot parse value '" + tok + "'");
    }

  private:
    std::string string() {
        ++pos_; // opening quote
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char c = s_[pos_++];
            if (c == '\\') {
                if (pos_ >= s_.size()) {
                    break;
                }
                const char e = s_[pos_++];
                switch (e) {
                case 'n': c = '\n'; break;
                case 't': c = '\t'; break;
                case '"': c = '"'; break;
                case '\\': c = '\\'; break;
                default: fail(std::string("unsupported escape \\") + e);
                }
            }
            out.push_back(c);
        }
        if (pos_ >= s_.size()) {
            fail("unterminated string");
        }
        ++pos_;
        return out;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    std::size_t line_no_;
};

} // namespace detail

inline ConfigTable parse_config(std::istream &in) {
    ConfigTable out;
    std::string prefix;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::TomlReader rd(line, line_no);
        if (rd.at_end_or_comment()) {
            continue;
        }
        if (rd.consume('[')) {
            const std::string table = rd.key();
            if (!rd.consume(']') || !rd.at_end_or_comment()) {
                rd.fail("malformed table header");
            }
            prefix = table + ".";
            continue;
        }
        const std::string key = prefix + rd.key();
        if (!rd.consume('=')) {
            rd.fail("expected '=' after key");
        }
        auto v = rd.value();
        if (!rd.at_end_or_comment()) {
            rd.fail("trailing characters after value");
        }
        if (!out.emplace(key, std::move(v)).second) {
            rd.fail("duplicate key '" + key + "'");
        }
    }
    return out;
}

inline ConfigTable parse_config_string(const std::string &text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline ConfigTable parse_config_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open config file " + path.string());
    }
    return parse_config(in);
}

/// Typed accessors with key-naming diagnostics.
inline double config_number(const ConfigValue &v, const std::string &key) {
    if (const auto *d = std::get_if<double>(&v.data)) {
        return *d;
    }
    if (const auto *i = std::get_if<std::int64_t>(&v.data)) {
        return static_cast<double>(*i);
    }
    throw FormatError("config key '" + key + "' must be a number");
}

inline std::int64_t config_integer(const ConfigValue &v, const std::string &key) {
    if (const auto *i = std::get_if<std::int64_t>(&v.data)) {
        return *i;
    }
    throw FormatError("config key '" + key + "' must be an integer");
}

inline std::string config_string(const ConfigValue &v, const std::string &key) {
    if (const auto *s = std::get_if<std::string>(&v.data)) {
        return *s;
    }
    throw FormatError("config key '" + key + "' must be a string");
}

inline bool config_bool(const ConfigValue &v, const std::string &key) {
    if (const auto *b = std::get_if<bool>(&v.data)) {
        return *b;
    }
    throw FormatError("config key '" + key + "' must be a boolean");
}

/// A scalar or an array of numbers, as a list.
inline std::vector<double> config_number_list(const ConfigValue &v, const std::string &key) {
    std::vector<double> out;
    if (const auto *a = std::get_if<ConfigArray>(&v.data)) {
        for (const auto &e : *a) {
            out.push_back(config_number(e, key));
        }
    } else {
        out.push_back(config_number(v, key));
    }
    return out;
}

inline std::vector<std::int64_t> config_integer_list(const ConfigValue &v, const std::string &key) {
    std::vector<std::int64_t> out;
    if (const auto *a = std::get_if<ConfigArray>(&v.data)) {
        for (const auto &e : *a) {
            out.push_back(config_integer(e, key));
        }
    } else {
        out.push_back(config_integer(v, key));
    }
    return out;
}

} // namespace qsc
