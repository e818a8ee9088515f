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

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace toolforge {

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    IoError(const std::filesystem::path& path, const std::string& what)
        : std::runtime_error(path.string() + ": " + what), path_(path) {}
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

/// File was readable but a line did not match the expected schema.
class DataError : public std::runtime_error {
public:
    DataError(const std::filesystem::path& path, std::size_t line, const std::string& what)
        : std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what), path_(path), line_(line) {}
    const std::filesystem::path& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::filesystem::path path_;
    std::size_t line_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(path, "read failed");
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path, "cannot open for writing");
    out << content;
    out.flush();
    if (!out) throw IoError(path, "write failed");
}

/// Calls fn(line_number, text) for every non-blank line. Exceptions other
/// than IoError/DataError thrown by fn are rewrapped as DataError with the
/// line number.
inline void for_each_line(const std::filesystem::path& path,
                          const std::function<void(std::size_t, const std::string&)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            fn(line_no, line);
        } catch (const IoError&) {
            throw;
        } catch (const DataError&) {
            throw;
        } catch (const std::exception& e) {
            throw DataError(path, line_no, e.what());
        }
    }
    if (in.bad()) throw IoError(path, "read failed");
}

inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
    std::vector<nlohmann::json> out;
    for_each_line(path, [&](std::size_t, const std::string& line) { out.push_back(nlohmann::json::parse(line)); });
    return out;
}

template <typename Range, typename ToJson>
void write_jsonl(const std::filesystem::path& path, const Range& items, ToJson&& to_json_fn) {
    std::string content;
    for (const auto& item : items) {
        content += to_json_fn(item).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
        content.push_back('\n');
    }
    write_file(path, content);
}

}  // namespace toolforge
