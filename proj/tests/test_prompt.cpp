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

#include <gtest/gtest.h>

#include <string>

#include "toolforge/conversation.hpp"
#include "toolforge/schema.hpp"

namespace tf = toolforge;
using nlohmann::ordered_json;

namespace {

const char* kBookFlightJson = R"json({
    "name": "bookFlight",
    "description": "Book a flight for a specified destination",
    "parameters": {
        "type": "dict",
        "properties": {
            "origin": {
                "type": "string",
                "description": "The departure airport or city"
            },
            "destination": {
                "type": "string",
                "description": "The destination airport or city"
            },
            "departure_date": {
                "type": "string",
                "description": "The date of departure (in YYYY-MM-DD)"
            }
        },
        "required": [
            "origin",
            "destination",
            "departure_date"
        ]
    }
})json";

const char* kExpectedPrompt =
    "You are an expert in composing functions. You are given a question and a set of possible functions. Based on "
    "the question, you will need to make one or more function/tool calls to achieve the purpose. If none of the "
    "function can be used, point it out. If the given question lacks the parameters required by the function, also "
    "point it out. You should only return the tool call in tools call sections.\n\nIf you decide to invoke any of "
    "the function(s), you MUST put it in the format of:\n[func_name1(params_name1=value1, "
    "params_name2=value2,...), func_name2(params)]\n\nYou should not include any other text in the response.\nHere "
    "is a list of functions in JSON format that you can invoke:\n";

}  // namespace

TEST(Schema, RendersFlightToolByteForByte) {
    const auto tool = tf::tool_schema_from_json(ordered_json::parse(kBookFlightJson));
    EXPECT_EQ(tool.name, "bookFlight");
    EXPECT_EQ(tool.required.size(), 3u);
    EXPECT_EQ(tf::render_tools({tool}), kBookFlightJson);
}

TEST(Schema, RejectsInvalidDefinitions) {
    EXPECT_THROW(tf::tool_schema_from_json(ordered_json::parse(R"({"description": "x"})")), tf::SchemaError);
    EXPECT_THROW(tf::tool_schema_from_json(ordered_json::parse(R"({"name": "9bad"})")), tf::SchemaError);
    EXPECT_THROW(tf::tool_schema_from_json(ordered_json::parse(
                     R"({"name": "f", "parameters": {"properties": {"a": {"description": "no type"}}}})")),
                 tf::SchemaError);
    EXPECT_THROW(tf::tool_schema_from_json(ordered_json::parse(
                     R"({"name": "f", "parameters": {"properties": {"a": {"type": "string"}}, "required": ["b"]}})")),
                 tf::SchemaError);
    EXPECT_THROW(tf::tool_schema_from_json(ordered_json::parse("[1, 2]")), tf::SchemaError);
}

TEST(Schema, KeepsNestedSpecsAndKeyOrder) {
    const auto tool = tf::tool_schema_from_json(ordered_json::parse(
        R"({"name": "ns.search", "parameters": {"type": "dict", "properties": {
             "z": {"type": "array", "items": {"type": "integer"}},
             "a": {"type": "string", "enum": ["x", "y"]}}}})"));
    const auto rendered = tf::render_tools({tool});
    EXPECT_LT(rendered.find("\"z\""), rendered.find("\"a\""));
    EXPECT_NE(rendered.find("\"enum\""), std::string::npos);
    EXPECT_NE(rendered.find("\"description\": \"\""), std::string::npos);
}

TEST(Prompt, SystemPromptIsBitExact) {
    const auto tool = tf::tool_schema_from_json(ordered_json::parse(kBookFlightJson));
    const std::string other = "The current time is 2024-10-02 18:18:11.";
    const std::string expected = std::string(kExpectedPrompt) + kBookFlightJson + "\n\n" + other;
    EXPECT_EQ(tf::render_system_prompt({tool}, other), expected);
}

TEST(Prompt, EmptyOtherInformationKeepsLayout) {
    const std::string expected = std::string(kExpectedPrompt) + "\n\n";
    EXPECT_EQ(tf::render_system_prompt({}, ""), expected);
}

TEST(Prompt, SubstitutedTextIsNotRescanned) {
    const auto out = tf::render_system_prompt({}, "{candidate tools}", "A {other information} B {candidate tools} C");
    EXPECT_EQ(out, "A {candidate tools} B  C");
}

TEST(Prompt, RefinePromptText) {
    EXPECT_EQ(tf::kRefinePrompt,
              "Please refine your answer. Directly output the refined answer, or the original answer if you think it "
              "is already perfect.");
}

TEST(Prompt, DirectContextAndRefineTurn) {
    auto conv = tf::direct_context("book it", {}, "now");
    ASSERT_EQ(conv.size(), 2u);
    EXPECT_EQ(conv[0].role, tf::Role::system);
    EXPECT_EQ(conv[1].role, tf::Role::user);
    EXPECT_EQ(conv[1].content, "book it");
    tf::append_refine_turn(conv, "[f()]", tf::kRefinePrompt);
    ASSERT_EQ(conv.size(), 4u);
    EXPECT_EQ(conv[2].role, tf::Role::assistant);
    EXPECT_EQ(conv[2].content, "[f()]");
    EXPECT_EQ(conv[3].content, tf::kRefinePrompt);
}

TEST(Prompt, RoleNames) {
    for (auto r : {tf::Role::system, tf::Role::user, tf::Role::assistant})
        EXPECT_EQ(tf::role_from_name(tf::role_name(r)), r);
    EXPECT_THROW(tf::role_from_name("tool"), std::invalid_argument);
}
