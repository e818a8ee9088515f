// Copyright 2026 The ToolForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "toolforge/value.hpp"

namespace toolforge {

using Arguments = std::map<std::string, ParamValue>;

/// One invocation `tool_name(arg=value, ...)`. Arguments form a map, so the
/// order they were written in never matters.
struct ToolCall {
    std::string tool_name;
    Arguments arguments;
};

inline bool operator==(const ToolCall& a, const ToolCall& b) {
    if (a.tool_name != b.tool_name || a.arguments.size() != b.arguments.size()) return false;
    for (auto ia = a.arguments.begin(), ib = b.arguments.begin(); ia != a.arguments.end(); ++ia, ++ib) {
        if (ia->first != ib->first || !values_equal(ia->second, ib->second)) return false;
    }
    return true;
}

/// Ordered list of calls answering one query. May be empty and may repeat a tool.
using InvocationSequence = std::vector<ToolCall>;

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t position, std::string reason)
        : std::runtime_error("parse error at " + std::to_string(position) + ": " + reason),
          position_(position),
          reason_(std::move(reason)) {}

    std::size_t position() const noexcept { return position_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t position_;
    std::string reason_;
};

inline bool is_identifier_start(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}

inline bool is_identifier_char(char c) {
    return is_identifier_start(c) || (c >= '0' && c <= '9');
}

/// `[A-Za-z_][A-Za-z0-9_.]*`
inline bool is_valid_tool_name(std::string_view name) {
    if (name.empty() || !is_identifier_start(name.front())) return false;
    for (char c : name.substr(1))
        if (!is_identifier_char(c) && c != '.') return false;
    return true;
}

/// `[A-Za-z_][A-Za-z0-9_]*`
inline bool is_valid_param_name(std::string_view name) {
    if (name.empty() || !is_identifier_start(name.front())) return false;
    for (char c : name.substr(1))
        if (!is_identifier_char(c)) return false;
    return true;
}

namespace detail {

// Recursive-descent parser over the bracketed call-expression grammar:
//   sequence := '[' ( call (',' call)* )? ']'
//   call     := name '(' ( param '=' value (',' param '=' value)* )? ')'
//   value    := string | number | true | false | True | False | null | None
//             | '[' (value (',' value)*)? ']' | '{' (string ':' value (',' ...)*)? '}'
class CallParser {
public:
    explicit CallParser(std::string_view text) : text_(text) {}

    InvocationSequence parse_sequence() {
        skip_ws();
        expect('[', "expected '[' to open the call list");
        InvocationSequence seq;
        skip_ws();
        if (peek() == ']') {
            ++pos_;
        } else {
            for (;;) {
                seq.push_back(parse_call());
                skip_ws();
                if (peek() == ',') {
                    ++pos_;
                    continue;
                }
                expect(']', "expected ',' or ']' after call");
                break;
            }
        }
        skip_ws();
        if (pos_ != text_.size()) fail("trailing characters after closing ']'");
        return seq;
    }

private:
    static constexpr std::size_t kMaxDepth = 256;

    [[noreturn]] void fail(std::string reason) const { throw ParseError(pos_, std::move(reason)); }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    bool at_end() const { return pos_ >= text_.size(); }

    void skip_ws() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c != ' ' && c != '\t' && c != '\n' && c != '\r') break;
            ++pos_;
        }
    }

    void expect(char c, const char* reason) {
        if (at_end() || text_[pos_] != c) fail(at_end() ? std::string(reason) + " (unexpected end of input)" : reason);
        ++pos_;
    }

    std::string parse_name(bool allow_dots) {
        const std::size_t start = pos_;
        if (!is_identifier_start(peek())) fail("expected identifier");
        ++pos_;
        while (!at_end() && (is_identifier_char(text_[pos_]) || (allow_dots && text_[pos_] == '.'))) ++pos_;
        return std::string(text_.substr(start, pos_ - start));
    }

    ToolCall parse_call() {
        skip_ws();
        ToolCall call;
        call.tool_name = parse_name(true);
        skip_ws();
        expect('(', "expected '(' after tool name");
        skip_ws();
        if (peek() == ')') {
            ++pos_;
            return call;
        }
        for (;;) {
            skip_ws();
            const std::size_t name_pos = pos_;
            std::string name = parse_name(false);
            skip_ws();
            expect('=', "expected '=' after parameter name");
            ParamValue value = parse_value(0);
            if (!call.arguments.emplace(std::move(name), std::move(value)).second)
                throw ParseError(name_pos, "duplicate parameter name");
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            expect(')', "expected ',' or ')' after argument");
            return call;
        }
    }

    ParamValue parse_value(std::size_t depth) {
        if (depth > kMaxDepth) fail("value nesting too deep");
        skip_ws();
        if (at_end()) fail("expected value (unexpected end of input)");
        const char c = text_[pos_];
        if (c == '"' || c == '\'') return ParamValue(parse_string());
        if (c == '[') return parse_list(depth);
        if (c == '{') return parse_object(depth);
        if (c == '-' || (c >= '0' && c <= '9')) return parse_number();
        if (is_identifier_start(c)) {
            const std::size_t start = pos_;
            while (!at_end() && is_identifier_char(text_[pos_])) ++pos_;
            const std::string_view word = text_.substr(start, pos_ - start);
            if (word == "true" || word == "True") return ParamValue(true);
            if (word == "false" || word == "False") return ParamValue(false);
            if (word == "null" || word == "None") return ParamValue(nullptr);
            pos_ = start;
            fail("malformed value literal '" + std::string(word) + "'");
        }
        fail("malformed value literal");
    }

    ParamValue parse_list(std::size_t depth) {
        ++pos_;  // '['
        ParamValue::List items;
        skip_ws();
        if (peek() == ']') {
            ++pos_;
            return ParamValue(std::move(items));
        }
        for (;;) {
            items.push_back(parse_value(depth + 1));
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            expect(']', "expected ',' or ']' in list");
            return ParamValue(std::move(items));
        }
    }

    ParamValue parse_object(std::size_t depth) {
        ++pos_;  // '{'
        ParamValue::Object members;
        skip_ws();
        if (peek() == '}') {
            ++pos_;
            return ParamValue(std::move(members));
        }
        for (;;) {
            skip_ws();
            const std::size_t key_pos = pos_;
            if (peek() != '"' && peek() != '\'') fail("expected string key in object");
            std::string key = parse_string();
            skip_ws();
            expect(':', "expected ':' after object key");
            ParamValue value = parse_value(depth + 1);
            if (!members.emplace(std::move(key), std::move(value)).second)
                throw ParseError(key_pos, "duplicate object key");
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            expect('}', "expected ',' or '}' in object");
            return ParamValue(std::move(members));
        }
    }

    static void append_utf8(std::string& out, std::uint32_t cp) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }

    std::uint32_t parse_hex4() {
        if (pos_ + 4 > text_.size()) fail("truncated \\u escape");
        std::uint32_t cp = 0;
        const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + pos_ + 4, cp, 16);
        if (ec != std::errc() || ptr != text_.data() + pos_ + 4) fail("malformed \\u escape");
        pos_ += 4;
        return cp;
    }

    std::string parse_string() {
        const char quote = text_[pos_];
        const std::size_t open = pos_;
        ++pos_;
        std::string out;
        for (;;) {
            if (at_end()) throw ParseError(open, "unterminated string literal");
            const char c = text_[pos_++];
            if (c == quote) return out;
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            if (at_end()) throw ParseError(open, "unterminated string literal");
            const char e = text_[pos_++];
            switch (e) {
                case '"': out.push_back('"'); break;
                case '\'': out.push_back('\''); break;
                case '\\': out.push_back('\\'); break;
                case '/': out.push_back('/'); break;
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case 'b': out.push_back('\b'); break;
                case 'f': out.push_back('\f'); break;
                case 'u': {
                    std::uint32_t cp = parse_hex4();
                    if (cp >= 0xD800 && cp <= 0xDBFF) {
                        if (text_.substr(pos_, 2) != "\\u") fail("unpaired surrogate in \\u escape");
                        pos_ += 2;
                        const std::uint32_t lo = parse_hex4();
                        if (lo < 0xDC00 || lo > 0xDFFF) fail("invalid low surrogate in \\u escape");
                        cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
                    } else if (cp >= 0xDC00 && cp <= 0xDFFF) {
                        fail("unpaired surrogate in \\u escape");
                    }
                    append_utf8(out, cp);
                    break;
                }
                default:
                    --pos_;
                    fail("malformed escape sequence in string");
            }
        }
    }

    ParamValue parse_number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            const std::size_t s = pos_;
            while (!at_end() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
            return pos_ - s;
        };
        if (peek() == '-') ++pos_;
        if (digits() == 0) fail("malformed number literal");
        bool integral = true;
        if (peek() == '.') {
            ++pos_;
            integral = false;
            if (digits() == 0) fail("malformed number literal");
        }
        if (peek() == 'e' || peek() == 'E') {
            ++pos_;
            integral = false;
            if (peek() == '+' || peek() == '-') ++pos_;
            if (digits() == 0) fail("malformed number literal");
        }
        if (is_identifier_char(peek()) || peek() == '.') fail("malformed number literal");
        const char* first = text_.data() + start;
        const char* last = text_.data() + pos_;
        if (integral) {
            std::int64_t i = 0;
            const auto [ptr, ec] = std::from_chars(first, last, i);
            if (ec == std::errc() && ptr == last) return ParamValue(i == 0 ? std::int64_t{0} : i);
        }
        double d = 0;
        const auto [ptr, ec] = std::from_chars(first, last, d);
        if (ec != std::errc() || ptr != last || !std::isfinite(d)) {
            pos_ = start;
            fail("number literal out of range");
        }
        return canonicalize_value(ParamValue(d));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses a bracketed call expression such as
/// `[get_weather(city="Paris", unit="celsius"), get_time(tz="CET")]`.
/// Throws ParseError on any non-conforming input. Parsed numbers are already
/// in canonical form.
inline InvocationSequence parse_invocation(std::string_view text) {
    return detail::CallParser(text).parse_sequence();
}

/// Non-throwing variant; std::nullopt when the text does not parse.
inline std::optional<InvocationSequence> try_parse_invocation(std::string_view text) {
    try {
        return parse_invocation(text);
    } catch (const ParseError&) {
        return std::nullopt;
    }
}

inline ToolCall canonicalize(const ToolCall& call) {
    ToolCall out{call.tool_name, {}};
    for (const auto& [k, v] : call.arguments) out.arguments.emplace(k, canonicalize_value(v));
    return out;
}

inline InvocationSequence canonicalize(const InvocationSequence& seq) {
    InvocationSequence out;
    out.reserve(seq.size());
    for (const auto& c : seq) out.push_back(canonicalize(c));
    return out;
}

inline std::string serialize_call(const ToolCall& call) {
    std::string out = call.tool_name;
    out.push_back('(');
    bool first = true;
    for (const auto& [name, value] : call.arguments) {
        if (!first) out += ", ";
        first = false;
        out += name;
        out.push_back('=');
        append_value(out, value);
    }
    out.push_back(')');
    return out;
}

/// Canonical text: arguments in name order, `", "` separators.
inline std::string serialize_invocation(const InvocationSequence& seq) {
    std::string out = "[";
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i) out += ", ";
        out += serialize_call(seq[i]);
    }
    out.push_back(']');
    return out;
}

}  // namespace toolforge
