#include "homstokes/toml.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "homstokes/errors.hpp"

namespace homstokes::toml {

std::string_view Value::kind_name() const {
    switch (kind) {
        case Kind::Bool: return "boolean";
        case Kind::Int: return "integer";
        case Kind::Float: return "float";
        case Kind::String: return "string";
        case Kind::Array: return "array";
    }
    return "?";
}

namespace {

bool bare_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

class Parser {
public:
    explicit Parser(std::string_view t) : t_(t) {}

    Document run() {
        std::string table;
        while (true) {
            skip_ws_comments_newlines();
            if (eof()) break;
            if (peek() == '[') {
                ++p_;
                if (!eof() && peek() == '[') fail("arrays of tables are not supported");
                skip_ws();
                table = join(key_path());
                skip_ws();
                expect(']');
                end_of_line();
                if (!tables_.insert(table).second) fail("table [" + table + "] defined twice");
                continue;
            }
            const int line = line_;
            std::string key = join(key_path());
            if (!table.empty()) key = table + "." + key;
            skip_ws();
            expect('=');
            skip_ws();
            Value v = value();
            v.line = line;
            end_of_line();
            if (doc_.count(key)) fail("duplicate key '" + key + "'");
            doc_.emplace(std::move(key), std::move(v));
        }
        return std::move(doc_);
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ValidationError("line " + std::to_string(line_) + ": " + what);
    }
    [[nodiscard]] bool eof() const { return p_ >= t_.size(); }
    [[nodiscard]] char peek() const { return t_[p_]; }

    void expect(char c) {
        if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
        ++p_;
    }
    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++p_;
    }
    void skip_comment() {
        if (!eof() && peek() == '#')
            while (!eof() && peek() != '\n') ++p_;
    }
    void skip_ws_comments_newlines() {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (eof()) return;
            if (peek() == '\r') {
                ++p_;
            } else if (peek() == '\n') {
                ++p_;
                ++line_;
            } else {
                return;
            }
        }
    }
    void end_of_line() {
        skip_ws();
        skip_comment();
        if (!eof() && peek() == '\r') ++p_;
        if (eof()) return;
        if (peek() != '\n') fail("unexpected trailing characters");
        ++p_;
        ++line_;
    }

    static std::string join(const std::vector<std::string>& parts) {
        std::string s;
        for (const auto& part : parts) s += (s.empty() ? "" : ".") + part;
        return s;
    }

    std::vector<std::string> key_path() {
        std::vector<std::string> parts;
        while (true) {
            skip_ws();
            if (eof()) fail("expected a key");
            if (peek() == '"' || peek() == '\'') {
                parts.push_back(string_lit());
            } else {
                const std::size_t s = p_;
                while (!eof() && bare_char(peek())) ++p_;
                if (p_ == s) fail("expected a key");
                parts.emplace_back(t_.substr(s, p_ - s));
            }
            skip_ws();
            if (!eof() && peek() == '.') {
                ++p_;
                continue;
            }
            return parts;
        }
    }

    std::string string_lit() {
        const char q = peek();
        ++p_;
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = peek();
            ++p_;
            if (c == q) return out;
            if (c == '\\' && q == '"') {
                if (eof()) fail("unterminated string");
                const char e = peek();
                ++p_;
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case 'r': out += '\r'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: fail(std::string("unsupported escape \\") + e);
                }
                continue;
            }
            out += c;
        }
    }

    Value value() {
        if (eof()) fail("expected a value");
        Value v;
        const char c = peek();
        if (c == '"' || c == '\'') {
            if (t_.substr(p_, 3) == "\"\"\"" || t_.substr(p_, 3) == "'''") fail("multi-line strings are not supported");
            v.kind = Value::Kind::String;
            v.s = string_lit();
            return v;
        }
        if (c == '[') {
            ++p_;
            v.kind = Value::Kind::Array;
            while (true) {
                skip_ws_comments_newlines();
                if (eof()) fail("unterminated array");
                if (peek() == ']') {
                    ++p_;
                    return v;
                }
                v.items.push_back(value());
                v.items.back().line = line_;
                skip_ws_comments_newlines();
                if (!eof() && peek() == ',') {
                    ++p_;
                    continue;
                }
                skip_ws_comments_newlines();
                expect(']');
                return v;
            }
        }
        if (c == '{') fail("inline tables are not supported");
        const std::size_t s = p_;
        while (!eof() && peek() != ',' && peek() != ']' && peek() != '#' && peek() != '\n' && peek() != '\r' &&
               peek() != ' ' && peek() != '\t')
            ++p_;
        std::string tok(t_.substr(s, p_ - s));
        if (tok == "true" || tok == "false") {
            v.kind = Value::Kind::Bool;
            v.b = tok == "true";
            return v;
        }
        std::string clean;
        for (std::size_t k = 0; k < tok.size(); ++k) {
            if (tok[k] == '_') {
                if (k == 0 || k + 1 == tok.size() || !std::isdigit(static_cast<unsigned char>(tok[k - 1])) ||
                    !std::isdigit(static_cast<unsigned char>(tok[k + 1])))
                    fail("malformed number '" + tok + "'");
                continue;
            }
            clean += tok[k];
        }
        if (clean.empty()) fail("expected a value");
        const std::string body = (clean[0] == '+' || clean[0] == '-') ? clean.substr(1) : clean;
        if (body == "inf" || body == "nan") {
            v.kind = Value::Kind::Float;
            v.d = body == "inf" ? INFINITY : NAN;
            if (clean[0] == '-') v.d = -v.d;
            return v;
        }
        const bool is_float = clean.find_first_of(".eE") != std::string::npos;
        errno = 0;
        char* end = nullptr;
        if (is_float) {
            v.kind = Value::Kind::Float;
            v.d = std::strtod(clean.c_str(), &end);
        } else {
            v.kind = Value::Kind::Int;
            v.i = std::strtoll(clean.c_str(), &end, 10);
        }
        if (end != clean.c_str() + clean.size() || errno == ERANGE || body.empty() ||
            !std::isdigit(static_cast<unsigned char>(body[0])))
            fail("malformed value '" + tok + "'");
        return v;
    }

    std::string_view t_;
    std::size_t p_ = 0;
    int line_ = 1;
    Document doc_;
    std::set<std::string> tables_;
};

}  // namespace

Document parse(std::string_view text) { return Parser(text).run(); }

Document parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse(ss.str());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

}  // namespace homstokes::toml
