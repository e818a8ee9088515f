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

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolforge/invocation.hpp"

namespace toolforge {

class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Candidate tool description as shown to the model. Parameter specs are kept
/// as ordered JSON so the prompt rendering reproduces the source key order.
struct ToolSchema {
    std::string name;
    std::string description;
    nlohmann::ordered_json properties = nlohmann::ordered_json::object();
    std::vector<std::string> required;
};

inline ToolSchema tool_schema_from_json(const nlohmann::ordered_json& j) {
    if (!j.is_object()) throw SchemaError("tool schema must be a JSON object");
    ToolSchema s;
    if (!j.contains("name") || !j["name"].is_string()) throw SchemaError("tool schema: missing string 'name'");
    s.name = j["name"].get<std::string>();
    if (!is_valid_tool_name(s.name)) throw SchemaError("tool schema: invalid tool name '" + s.name + "'");
    if (j.contains("description")) {
        if (!j["description"].is_string()) throw SchemaError("tool schema '" + s.name + "': 'description' must be a string");
        s.description = j["description"].get<std::string>();
    }
    if (j.contains("parameters")) {
        const auto& p = j["parameters"];
        if (!p.is_object()) throw SchemaError("tool schema '" + s.name + "': 'parameters' must be an object");
        if (p.contains("properties")) {
            if (!p["properties"].is_object())
                throw SchemaError("tool schema '" + s.name + "': 'properties' must be an object");
            for (const auto& [prop, spec] : p["properties"].items()) {
                if (!spec.is_object() || !spec.contains("type"))
                    throw SchemaError("tool schema '" + s.name + "': property '" + prop + "' needs a 'type'");
            }
            s.properties = p["properties"];
        }
        if (p.contains("required")) {
            if (!p["required"].is_array()) throw SchemaError("tool schema '" + s.name + "': 'required' must be an array");
            for (const auto& r : p["required"]) {
                if (!r.is_string()) throw SchemaError("tool schema '" + s.name + "': 'required' entries must be strings");
                s.required.push_back(r.get<std::string>());
            }
        }
    }
    for (const auto& r : s.required) {
        if (!s.properties.contains(r))
            throw SchemaError("tool schema '" + s.name + "': required parameter '" + r + "' is not declared");
    }
    return s;
}

inline nlohmann::ordered_json to_json(const ToolSchema& s) {
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    params["type"] = "dict";
    params["properties"] = s.properties;
    params["required"] = s.required;
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    j["name"] = s.name;
    j["description"] = s.description;
    j["parameters"] = std::move(params);
    return j;
}

/// Each tool pretty-printed with 4-space indentation, one after another.
inline std::string render_tools(const std::vector<ToolSchema>& tools) {
    std::string out;
    for (std::size_t i = 0; i < tools.size(); ++i) {
        if (i) out.push_back('\n');
        out += to_json(tools[i]).dump(4, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
    }
    return out;
}

}  // namespace toolforge
