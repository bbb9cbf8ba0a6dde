#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "mfg/errors.hpp"

namespace mfg::toml {

// Minimal TOML subset, enough for run configuration files: [section] headers
// (dotted names allowed), bare keys, basic "..." and literal '...' strings,
// booleans, integers, floats, and arbitrarily nested arrays that may span
// lines and carry trailing commas. Not supported (rejected with a line
// number): inline tables, dotted keys, dates, multi-line strings, non-finite
// numbers.

class Value;
using Array = std::vector<Value>;

class Value {
  public:
    enum class Kind { boolean = 0, integer, floating, string, array };

    Value() = default;
    Value(bool b) : data_(b) {}
    Value(std::int64_t i) : data_(i) {}
    Value(double d) : data_(d) {}
    Value(std::string s) : data_(std::move(s)) {}
    Value(Array a) : data_(std::move(a)) {}

    Kind kind() const { return static_cast<Kind>(data_.index()); }
    bool is_number() const { return kind() == Kind::integer || kind() == Kind::floating; }

    // Accessors throw ConfigError on a kind mismatch; integers promote to
    // double through number().
    bool boolean() const;
    std::int64_t integer() const;
    double number() const;
    const std::string& text() const;
    const Array& array() const;

    bool operator==(const Value& other) const { return data_ == other.data_; }

  private:
    std::variant<bool, std::int64_t, double, std::string, Array> data_ = false;
};

struct Table {
    // section -> key -> value; "" holds keys that appear before any header.
    // std::map keeps iteration deterministic, which makes serialize canonical.
    std::map<std::string, std::map<std::string, Value>> sections;

    const Value* find(const std::string& section, const std::string& key) const;
    bool has(const std::string& section, const std::string& key) const {
        return find(section, key) != nullptr;
    }
};

Table parse_text(const std::string& text);
Table parse_file(const std::string& path);  // ConfigError when unreadable

// Canonical emission: sections and keys sorted, floats printed with 17
// significant digits and always carrying a decimal point or exponent so the
// kind survives a re-parse. parse_text(serialize(t)) == t.
std::string serialize(const Table& table);

}  // namespace mfg::toml
