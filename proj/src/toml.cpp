#include "mfg/toml.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mfg::toml {

namespace {

struct Cursor {
    const std::string& s;
    std::size_t i = 0;
    int line = 1;

    bool done() const { return i >= s.size(); }
    char peek() const { return s[i]; }
    char take() {
        const char c = s[i++];
        if (c == '\n') ++line;
        return c;
    }
};

[[noreturn]] void fail(const Cursor& c, const std::string& msg) {
    throw ConfigError("config line " + std::to_string(c.line) + ": " + msg);
}

void skip_comment(Cursor& c) {
    while (!c.done() && c.peek() != '\n') c.take();
}

// Spaces, tabs, carriage returns and comments; newlines too when crossing.
void skip_blank(Cursor& c, bool cross_lines) {
    while (!c.done()) {
        const char ch = c.peek();
        if (ch == ' ' || ch == '\t' || ch == '\r') {
            c.take();
        } else if (ch == '#') {
            skip_comment(c);
        } else if (ch == '\n' && cross_lines) {
            c.take();
        } else {
            break;
        }
    }
}

bool key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string bare_key(Cursor& c) {
    std::string out;
    while (!c.done() && key_char(c.peek())) out.push_back(c.take());
    if (out.empty()) fail(c, "expected a key");
    return out;
}

Value parse_value(Cursor& c);

Value parse_basic_string(Cursor& c) {
    c.take();  // opening quote
    std::string out;
    while (true) {
        if (c.done() || c.peek() == '\n') fail(c, "unterminated string");
        char ch = c.take();
        if (ch == '"') return Value(std::move(out));
        if (ch == '\\') {
            if (c.done()) fail(c, "unterminated string");
            const char esc = c.take();
            switch (esc) {
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                default: fail(c, std::string("unsupported escape \\") + esc);
            }
        } else {
            out.push_back(ch);
        }
    }
}

Value parse_literal_string(Cursor& c) {
    c.take();
    std::string out;
    while (true) {
        if (c.done() || c.peek() == '\n') fail(c, "unterminated string");
        const char ch = c.take();
        if (ch == '\'') return Value(std::move(out));
        out.push_back(ch);
    }
}

Value parse_array(Cursor& c) {
    c.take();  // '['
    Array items;
    while (true) {
        skip_blank(c, true);
        if (c.done()) fail(c, "unterminated array");
        if (c.peek() == ']') {
            c.take();
            return Value(std::move(items));
        }
        items.push_back(parse_value(c));
        skip_blank(c, true);
        if (c.done()) fail(c, "unterminated array");
        if (c.peek() == ',') {
            c.take();
        } else if (c.peek() != ']') {
            fail(c, "expected ',' or ']' in array");
        }
    }
}

Value parse_scalar(Cursor& c) {
    std::string tok;
    while (!c.done()) {
        const char ch = c.peek();
        if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n' || ch == ',' || ch == ']' ||
            ch == '#') {
            break;
        }
        tok.push_back(c.take());
    }
    if (tok.empty()) fail(c, "expected a value");
    if (tok == "true") return Value(true);
    if (tok == "false") return Value(false);

    std::string digits;
    digits.reserve(tok.size());
    for (char ch : tok) {
        if (ch != '_') digits.push_back(ch);  // 1_000 style separators
    }

    bool int_like = !digits.empty();
    for (std::size_t k = 0; k < digits.size(); ++k) {
        const char ch = digits[k];
        if (std::isdigit(static_cast<unsigned char>(ch))) continue;
        if (k == 0 && (ch == '+' || ch == '-')) continue;
        int_like = false;
        break;
    }
    if (int_like && std::isdigit(static_cast<unsigned char>(digits.back()))) {
        std::int64_t v = 0;
        const auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
        if (ec != std::errc() || p != digits.data() + digits.size()) {
            fail(c, "integer out of range: " + tok);
        }
        return Value(v);
    }

    double d = 0.0;
    const auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), d);
    if (ec != std::errc() || p != digits.data() + digits.size()) {
        fail(c, "cannot parse value: " + tok);
    }
    if (!std::isfinite(d)) fail(c, "number is not finite: " + tok);
    return Value(d);
}

Value parse_value(Cursor& c) {
    if (c.done()) fail(c, "expected a value");
    const char ch = c.peek();
    if (ch == '"') return parse_basic_string(c);
    if (ch == '\'') return parse_literal_string(c);
    if (ch == '[') return parse_array(c);
    if (ch == '{') fail(c, "inline tables are not supported");
    return parse_scalar(c);
}

void expect_line_end(Cursor& c) {
    skip_blank(c, false);
    if (c.done()) return;
    if (c.peek() != '\n') fail(c, "unexpected trailing characters");
    c.take();
}

void emit_value(std::string& out, const Value& v) {
    switch (v.kind()) {
        case Value::Kind::boolean:
            out += v.boolean() ? "true" : "false";
            return;
        case Value::Kind::integer:
            out += std::to_string(v.integer());
            return;
        case Value::Kind::floating: {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", v.number());
            std::string s(buf);
            if (s.find_first_of(".e") == std::string::npos) s += ".0";
            out += s;
            return;
        }
        case Value::Kind::string: {
            out.push_back('"');
            for (char ch : v.text()) {
                switch (ch) {
                    case '"': out += "\\\""; break;
                    case '\\': out += "\\\\"; break;
                    case '\n': out += "\\n"; break;
                    case '\t': out += "\\t"; break;
                    case '\r': out += "\\r"; break;
                    default: out.push_back(ch);
                }
            }
            out.push_back('"');
            return;
        }
        case Value::Kind::array: {
            out.push_back('[');
            const Array& items = v.array();
            for (std::size_t k = 0; k < items.size(); ++k) {
                if (k > 0) out += ", ";
                emit_value(out, items[k]);
            }
            out.push_back(']');
            return;
        }
    }
}

}  // namespace

bool Value::boolean() const {
    if (kind() != Kind::boolean) throw ConfigError("value is not a boolean");
    return std::get<bool>(data_);
}

std::int64_t Value::integer() const {
    if (kind() != Kind::integer) throw ConfigError("value is not an integer");
    return std::get<std::int64_t>(data_);
}

double Value::number() const {
    if (kind() == Kind::integer) return static_cast<double>(std::get<std::int64_t>(data_));
    if (kind() != Kind::floating) throw ConfigError("value is not a number");
    return std::get<double>(data_);
}

const std::string& Value::text() const {
    if (kind() != Kind::string) throw ConfigError("value is not a string");
    return std::get<std::string>(data_);
}

const Array& Value::array() const {
    if (kind() != Kind::array) throw ConfigError("value is not an array");
    return std::get<Array>(data_);
}

const Value* Table::find(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    if (s == sections.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
}

Table parse_text(const std::string& text) {
    Table table;
    Cursor c{text};
    std::string section;
    while (true) {
        skip_blank(c, true);
        if (c.done()) return table;
        if (c.peek() == '[') {
            c.take();
            skip_blank(c, false);
            std::string name = bare_key(c);
            while (!c.done() && c.peek() == '.') {
                c.take();
                name.push_back('.');
                name += bare_key(c);
            }
            skip_blank(c, false);
            if (c.done() || c.peek() != ']') fail(c, "expected ']' after section name");
            c.take();
            expect_line_end(c);
            section = name;
            table.sections[section];  // the header alone registers the section
            continue;
        }
        const std::string key = bare_key(c);
        skip_blank(c, false);
        if (c.done() || c.peek() != '=') fail(c, "expected '=' after key " + key);
        c.take();
        skip_blank(c, false);
        Value v = parse_value(c);
        auto& sec = table.sections[section];
        if (!sec.emplace(key, std::move(v)).second) {
            fail(c, "duplicate key " + (section.empty() ? key : section + "." + key));
        }
        expect_line_end(c);
    }
}

Table parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

std::string serialize(const Table& table) {
    std::string out;
    const auto emit_section = [&](const std::map<std::string, Value>& entries) {
        for (const auto& [key, value] : entries) {
            out += key;
            out += " = ";
            emit_value(out, value);
            out.push_back('\n');
        }
    };
    const auto top = table.sections.find("");
    if (top != table.sections.end()) emit_section(top->second);
    for (const auto& [name, entries] : table.sections) {
        if (name.empty()) continue;
        if (!out.empty()) out.push_back('\n');
        out += "[" + name + "]\n";
        emit_section(entries);
    }
    return out;
}

}  // namespace mfg::toml
