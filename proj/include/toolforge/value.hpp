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
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace toolforge {

/// A tool-call argument value: null, boolean, number (integer or finite
/// double), string, list or object.
class ParamValue {
public:
    using List = std::vector<ParamValue>;
    using Object = std::map<std::string, ParamValue>;
    using Storage = std::variant<std::nullptr_t, bool, std::int64_t, double, std::string, List, Object>;

    ParamValue() : data_(nullptr) {}
    ParamValue(std::nullptr_t) : data_(nullptr) {}
    ParamValue(bool b) : data_(b) {}
    ParamValue(int i) : data_(static_cast<std::int64_t>(i)) {}
    ParamValue(std::int64_t i) : data_(i) {}
    ParamValue(double d) : data_(d) {
        if (!std::isfinite(d)) throw std::invalid_argument("ParamValue: number must be finite");
    }
    ParamValue(std::string s) : data_(std::move(s)) {}
    ParamValue(const char* s) : data_(std::string(s)) {}
    ParamValue(List l) : data_(std::move(l)) {}
    ParamValue(Object o) : data_(std::move(o)) {}

    bool is_null() const noexcept { return std::holds_alternative<std::nullptr_t>(data_); }
    bool is_bool() const noexcept { return std::holds_alternative<bool>(data_); }
    bool is_integer() const noexcept { return std::holds_alternative<std::int64_t>(data_); }
    bool is_double() const noexcept { return std::holds_alternative<double>(data_); }
    bool is_number() const noexcept { return is_integer() || is_double(); }
    bool is_string() const noexcept { return std::holds_alternative<std::string>(data_); }
    bool is_list() const noexcept { return std::holds_alternative<List>(data_); }
    bool is_object() const noexcept { return std::holds_alternative<Object>(data_); }

    bool as_bool() const { return std::get<bool>(data_); }
    std::int64_t as_integer() const { return std::get<std::int64_t>(data_); }
    double as_double() const { return std::get<double>(data_); }
    double as_number() const { return is_integer() ? static_cast<double>(as_integer()) : as_double(); }
    const std::string& as_string() const { return std::get<std::string>(data_); }
    const List& as_list() const { return std::get<List>(data_); }
    const Object& as_object() const { return std::get<Object>(data_); }

    const Storage& storage() const noexcept { return data_; }

private:
    Storage data_;
};

namespace detail {

// Integral doubles in this range convert to int64 without overflow.
inline constexpr double kInt64Lo = -9223372036854775808.0;
inline constexpr double kInt64Hi = 9223372036854775808.0;

inline bool numbers_equal(const ParamValue& a, const ParamValue& b) {
    if (a.is_integer() && b.is_integer()) return a.as_integer() == b.as_integer();
    if (a.is_double() && b.is_double()) return a.as_double() == b.as_double();
    const std::int64_t i = a.is_integer() ? a.as_integer() : b.as_integer();
    const double d = a.is_double() ? a.as_double() : b.as_double();
    if (d != std::trunc(d) || d < kInt64Lo || d >= kInt64Hi) return false;
    return static_cast<std::int64_t>(d) == i;
}

}  // namespace detail

/// Canonical form: -0 becomes 0, integral doubles become integers. Objects are
/// always key-ordered and lists keep their order; strings are untouched.
inline ParamValue canonicalize_value(const ParamValue& v) {
    if (v.is_double()) {
        const double d = v.as_double();
        if (d == std::trunc(d) && d >= detail::kInt64Lo && d < detail::kInt64Hi)
            return ParamValue(static_cast<std::int64_t>(d));
        return v;
    }
    if (v.is_list()) {
        ParamValue::List out;
        out.reserve(v.as_list().size());
        for (const auto& item : v.as_list()) out.push_back(canonicalize_value(item));
        return ParamValue(std::move(out));
    }
    if (v.is_object()) {
        ParamValue::Object out;
        for (const auto& [k, item] : v.as_object()) out.emplace(k, canonicalize_value(item));
        return ParamValue(std::move(out));
    }
    return v;
}

/// Structural equality. Numbers compare by value (1 == 1.0), lists are
/// order-sensitive, strings compare byte-for-byte.
inline bool values_equal(const ParamValue& a, const ParamValue& b) {
    if (a.is_number() && b.is_number()) return detail::numbers_equal(a, b);
    if (a.storage().index() != b.storage().index()) return false;
    if (a.is_list()) {
        const auto& la = a.as_list();
        const auto& lb = b.as_list();
        if (la.size() != lb.size()) return false;
        for (std::size_t i = 0; i < la.size(); ++i)
            if (!values_equal(la[i], lb[i])) return false;
        return true;
    }
    if (a.is_object()) {
        const auto& oa = a.as_object();
        const auto& ob = b.as_object();
        if (oa.size() != ob.size()) return false;
        for (auto ia = oa.begin(), ib = ob.begin(); ia != oa.end(); ++ia, ++ib) {
            if (ia->first != ib->first || !values_equal(ia->second, ib->second)) return false;
        }
        return true;
    }
    return a.storage() == b.storage();
}

/// Stricter than values_equal: the numeric representation must match too.
inline bool values_identical(const ParamValue& a, const ParamValue& b) {
    if (a.storage().index() != b.storage().index()) return false;
    if (a.is_list()) {
        const auto& la = a.as_list();
        const auto& lb = b.as_list();
        if (la.size() != lb.size()) return false;
        for (std::size_t i = 0; i < la.size(); ++i)
            if (!values_identical(la[i], lb[i])) return false;
        return true;
    }
    if (a.is_object()) {
        const auto& oa = a.as_object();
        const auto& ob = b.as_object();
        if (oa.size() != ob.size()) return false;
        for (auto ia = oa.begin(), ib = ob.begin(); ia != oa.end(); ++ia, ++ib) {
            if (ia->first != ib->first || !values_identical(ia->second, ib->second)) return false;
        }
        return true;
    }
    if (a.is_double()) {
        // distinguishes -0.0 from 0.0
        return std::signbit(a.as_double()) == std::signbit(b.as_double()) && a.as_double() == b.as_double();
    }
    return a.storage() == b.storage();
}

inline bool operator==(const ParamValue& a, const ParamValue& b) { return values_equal(a, b); }

namespace detail {

inline void append_quoted(std::string& out, const std::string& s) {
    out.push_back('"');
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
}

inline void append_number(std::string& out, const ParamValue& v) {
    char buf[64];
    std::to_chars_result r{};
    if (v.is_integer()) {
        r = std::to_chars(buf, buf + sizeof buf, v.as_integer());
    } else {
        double d = v.as_double();
        if (d == 0.0) d = 0.0;  // drop the sign of -0
        r = std::to_chars(buf, buf + sizeof buf, d);
    }
    out.append(buf, r.ptr);
}

}  // namespace detail

/// Appends the canonical call-expression text for a value.
inline void append_value(std::string& out, const ParamValue& v) {
    if (v.is_null()) {
        out += "null";
    } else if (v.is_bool()) {
        out += v.as_bool() ? "true" : "false";
    } else if (v.is_number()) {
        detail::append_number(out, v);
    } else if (v.is_string()) {
        detail::append_quoted(out, v.as_string());
    } else if (v.is_list()) {
        out.push_back('[');
        bool first = true;
        for (const auto& item : v.as_list()) {
            if (!first) out += ", ";
            first = false;
            append_value(out, item);
        }
        out.push_back(']');
    } else {
        out.push_back('{');
        bool first = true;
        for (const auto& [k, item] : v.as_object()) {
            if (!first) out += ", ";
            first = false;
            detail::append_quoted(out, k);
            out += ": ";
            append_value(out, item);
        }
        out.push_back('}');
    }
}

inline std::string value_to_string(const ParamValue& v) {
    std::string out;
    append_value(out, v);
    return out;
}

}  // namespace toolforge
