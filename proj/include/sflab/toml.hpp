#pragma once

// Minimal TOML reader covering the subset used by the experiment configs:
// comments, [table] headers, bare keys, strings, integers, floats, booleans,
// and (nested) arrays.  Values are exposed under dotted paths; every lookup
// error names the offending field.

#include <cctype>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sflab {

struct TomlError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TomlValue {
    enum class Type { string, integer, floating, boolean, array };
    Type type = Type::string;
    std::string s;
    long long i = 0;
    double f = 0;
    bool b = false;
    std::vector<TomlValue> arr;

    double as_double() const {
        if (type == Type::floating) return f;
        if (type == Type::integer) return double(i);
        throw TomlError("expected a number");
    }
};

class TomlTable {
  public:
    std::map<std::string, TomlValue> values;

    bool has(const std::string& key) const { return values.count(key) > 0; }

    const TomlValue& require(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end()) throw TomlError("missing required field '" + key + "'");
        return it->second;
    }
    std::string get_string(const std::string& key) const {
        const auto& v = require(key);
        if (v.type != TomlValue::Type::string)
            throw TomlError("field '" + key + "' must be a string");
        return v.s;
    }
    long long get_int(const std::string& key) const {
        const auto& v = require(key);
        if (v.type != TomlValue::Type::integer)
            throw TomlError("field '" + key + "' must be an integer");
        return v.i;
    }
    double get_double(const std::string& key) const {
        const auto& v = require(key);
        if (v.type != TomlValue::Type::floating && v.type != TomlValue::Type::integer)
            throw TomlError("field '" + key + "' must be a number");
        return v.as_double();
    }
    bool get_bool(const std::string& key) const {
        const auto& v = require(key);
        if (v.type != TomlValue::Type::boolean)
            throw TomlError("field '" + key + "' must be a boolean");
        return v.b;
    }
    const std::vector<TomlValue>& get_array(const std::string& key) const {
        const auto& v = require(key);
        if (v.type != TomlValue::Type::array)
            throw TomlError("field '" + key + "' must be an array");
        return v.arr;
    }
    std::string get_string_or(const std::string& key, const std::string& dflt) const {
        return has(key) ? get_string(key) : dflt;
    }
    long long get_int_or(const std::string& key, long long dflt) const {
        return has(key) ? get_int(key) : dflt;
    }
    double get_double_or(const std::string& key, double dflt) const {
        return has(key) ? get_double(key) : dflt;
    }
    bool get_bool_or(const std::string& key, bool dflt) const {
        return has(key) ? get_bool(key) : dflt;
    }
};

namespace toml_detail {

inline void skip_ws(const std::string& s, size_t& p) {
    while (p < s.size() && (s[p] == ' ' || s[p] == '\t')) ++p;
}

inline TomlValue parse_value(const std::string& s, size_t& p, int line);

inline TomlValue parse_scalar(const std::string& s, size_t& p, int line) {
    TomlValue v;
    if (s[p] == '"') {
        v.type = TomlValue::Type::string;
        ++p;
        while (p < s.size() && s[p] != '"') {
            if (s[p] == '\\' && p + 1 < s.size()) ++p;
            v.s += s[p++];
        }
        if (p >= s.size()) throw TomlError("line " + std::to_string(line) + ": unterminated string");
        ++p;
        return v;
    }
    size_t start = p;
    while (p < s.size() && s[p] != ',' && s[p] != ']' && s[p] != '#' &&
           s[p] != ' ' && s[p] != '\t')
        ++p;
    std::string tok = s.substr(start, p - start);
    if (tok == "true" || tok == "false") {
        v.type = TomlValue::Type::boolean;
        v.b = (tok == "true");
        return v;
    }
    if (tok.empty()) throw TomlError("line " + std::to_string(line) + ": empty value");
    bool is_float = tok.find_first_of(".eE") != std::string::npos &&
                    tok.find_first_not_of("+-0123456789.eE") == std::string::npos;
    try {
        size_t used = 0;
        if (is_float) {
            v.type = TomlValue::Type::floating;
            v.f = std::stod(tok, &used);
        } else {
            v.type = TomlValue::Type::integer;
            v.i = std::stoll(tok, &used);
        }
        if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
        throw TomlError("line " + std::to_string(line) + ": cannot parse value '" + tok + "'");
    }
    return v;
}

inline TomlValue parse_value(const std::string& s, size_t& p, int line) {
    skip_ws(s, p);
    if (p >= s.size()) throw TomlError("line " + std::to_string(line) + ": missing value");
    if (s[p] != '[') return parse_scalar(s, p, line);
    TomlValue v;
    v.type = TomlValue::Type::array;
    ++p;
    skip_ws(s, p);
    while (p < s.size() && s[p] != ']') {
        v.arr.push_back(parse_value(s, p, line));
        skip_ws(s, p);
        if (p < s.size() && s[p] == ',') {
            ++p;
            skip_ws(s, p);
        }
    }
    if (p >= s.size()) throw TomlError("line " + std::to_string(line) + ": unterminated array");
    ++p;
    return v;
}

}  // namespace toml_detail

inline TomlTable parse_toml(std::istream& in) {
    TomlTable tab;
    std::string line, prefix;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t p = 0;
        toml_detail::skip_ws(line, p);
        if (p >= line.size() || line[p] == '#') continue;
        if (line[p] == '[') {
            size_t close = line.find(']', p);
            if (close == std::string::npos)
                throw TomlError("line " + std::to_string(lineno) + ": unterminated table header");
            prefix = line.substr(p + 1, close - p - 1) + ".";
            continue;
        }
        size_t eq = line.find('=', p);
        if (eq == std::string::npos)
            throw TomlError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = line.substr(p, eq - p);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        if (key.empty()) throw TomlError("line " + std::to_string(lineno) + ": empty key");
        size_t vp = eq + 1;
        TomlValue v = toml_detail::parse_value(line, vp, lineno);
        toml_detail::skip_ws(line, vp);
        if (vp < line.size() && line[vp] != '#')
            throw TomlError("line " + std::to_string(lineno) + ": trailing garbage after value");
        tab.values[prefix + key] = v;
    }
    return tab;
}

inline TomlTable parse_toml_string(const std::string& text) {
    std::istringstream in(text);
    return parse_toml(in);
}

}  // namespace sflab
