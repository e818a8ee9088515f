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
#include <string_view>
#include <vector>

#include "toolforge/schema.hpp"

namespace toolforge {

enum class Role { system, user, assistant };

inline std::string_view role_name(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

inline Role role_from_name(std::string_view s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw std::invalid_argument("unknown chat role '" + std::string(s) + "'");
}

struct ChatMessage {
    Role role = Role::user;
    std::string content;
    bool trainable = false;  // only meaningful in training exports

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

using Conversation = std::vector<ChatMessage>;

inline constexpr std::string_view kSystemPromptTemplate =
    "You are an expert in composing functions. You are given a question and a set of possible functions. "
    "Based on the question, you will need to make one or more function/tool calls to achieve the purpose. "
    "If none of the function can be used, point it out. If the given question lacks the parameters required "
    "by the function, also point it out. You should only return the tool call in tools call sections.\n"
    "\n"
    "If you decide to invoke any of the function(s), you MUST put it in the format of:\n"
    "[func_name1(params_name1=value1, params_name2=value2,...), func_name2(params)]\n"
    "\n"
    "You should not include any other text in the response.\n"
    "Here is a list of functions in JSON format that you can invoke:\n"
    "{candidate tools}\n"
    "\n"
    "{other information}";

inline constexpr std::string_view kRefinePrompt =
    "Please refine your answer. Directly output the refined answer, or the original answer if you think it is "
    "already perfect.";

namespace detail {

inline void replace_once(std::string& s, std::string_view placeholder, std::string_view value) {
    const auto at = s.find(placeholder);
    if (at != std::string::npos) s.replace(at, placeholder.size(), value);
}

}  // namespace detail

/// Fills `{candidate tools}` and `{other information}` in a prompt template.
/// Substituted text is never rescanned for placeholders.
inline std::string render_system_prompt(const std::vector<ToolSchema>& tools, std::string_view other_information,
                                        std::string_view templ = kSystemPromptTemplate) {
    std::string out(templ);
    const std::string tools_text = render_tools(tools);
    const auto tools_at = out.find("{candidate tools}");
    const auto other_at = out.find("{other information}");
    if (tools_at != std::string::npos && other_at != std::string::npos && other_at < tools_at) {
        detail::replace_once(out, "{candidate tools}", tools_text);
        detail::replace_once(out, "{other information}", other_information);
    } else {
        // replace the later placeholder first so the earlier offset stays valid
        if (other_at != std::string::npos) out.replace(other_at, 19, other_information);
        if (tools_at != std::string::npos) out.replace(tools_at, 17, tools_text);
    }
    return out;
}

/// ⟨q,T⟩: system prompt with the candidate tools, then the user query.
inline Conversation direct_context(std::string_view query, const std::vector<ToolSchema>& tools,
                                   std::string_view other_information = {},
                                   std::string_view templ = kSystemPromptTemplate) {
    return {
        ChatMessage{Role::system, render_system_prompt(tools, other_information, templ), false},
        ChatMessage{Role::user, std::string(query), false},
    };
}

inline void append_refine_turn(Conversation& conv, std::string_view previous_answer, std::string_view refine_prompt) {
    conv.push_back(ChatMessage{Role::assistant, std::string(previous_answer), false});
    conv.push_back(ChatMessage{Role::user, std::string(refine_prompt), false});
}

}  // namespace toolforge
