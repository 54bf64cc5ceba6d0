#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace homstokes::toml {

// The subset of TOML the study files use: [table] / [a.b] headers, key = value
// with bare or quoted keys, dotted keys, strings, integers, floats, booleans and
// (possibly multi-line, nested) arrays. Inline tables, dates and multi-line
// strings are rejected.
struct Value {
    enum class Kind { Bool, Int, Float, String, Array };
    Kind kind = Kind::Int;
    bool b = false;
    long long i = 0;
    double d = 0.0;
    std::string s;
    std::vector<Value> items;
    int line = 0;

    [[nodiscard]] std::string_view kind_name() const;
};

/// Flat view: fully qualified key ("table.key") to value.
using Document = std::map<std::string, Value>;

/// Throws ValidationError("line L: ...") on syntax errors and duplicate keys.
[[nodiscard]] Document parse(std::string_view text);
[[nodiscard]] Document parse_file(const std::string& path);

}  // namespace homstokes::toml
