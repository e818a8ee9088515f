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

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "toolforge/conversation.hpp"
#include "toolforge/invocation.hpp"
#include "toolforge/model.hpp"

namespace toolforge {

enum class EqualityMode { structural, textual };

inline EqualityMode equality_mode_from_name(std::string_view s) {
    if (s == "structural") return EqualityMode::structural;
    if (s == "textual") return EqualityMode::textual;
    throw std::invalid_argument("unknown equality mode '" + std::string(s) + "'");
}

/// Stopping-test equality. Structural mode compares parsed, canonical
/// sequences (argument order ignored, call order kept) and falls back to exact
/// text when either side fails to parse. Textual mode compares raw text.
inline bool answers_equal(std::string_view a, std::string_view b, EqualityMode mode = EqualityMode::structural) {
    if (mode == EqualityMode::textual) return a == b;
    const auto pa = try_parse_invocation(a);
    const auto pb = try_parse_invocation(b);
    if (pa && pb) return *pa == *pb;
    return a == b;
}

enum class StopReason { converged, max_iterations };

inline std::string_view stop_reason_name(StopReason r) {
    return r == StopReason::converged ? "converged" : "max_iterations";
}

struct RefineTrace {
    std::string id;
    std::vector<std::string> answers;  // A_0 ... A_last
    std::vector<std::optional<InvocationSequence>> parsed;
    int iterations_used = 0;
    StopReason stop_reason = StopReason::max_iterations;
    std::string final_answer;
};

inline nlohmann::json to_json(const RefineTrace& t) {
    return {{"id", t.id},
            {"iterations_used", t.iterations_used},
            {"stop_reason", std::string(stop_reason_name(t.stop_reason))},
            {"answers", t.answers},
            {"final", t.final_answer}};
}

/// Carries the partial trace of a refine loop that hit a backend failure.
class RefineError : public BackendError {
public:
    RefineError(const BackendError& cause, RefineTrace partial)
        : BackendError(cause.kind(), cause.what(), cause.status()), trace_(std::move(partial)) {}
    const RefineTrace& trace() const noexcept { return trace_; }

private:
    RefineTrace trace_;
};

struct RefineOptions {
    std::string refine_prompt = std::string(kRefinePrompt);
    int max_iterations = 5;
    EqualityMode equality = EqualityMode::structural;
    std::optional<int> max_output_tokens;
};

namespace detail {

inline GenerationParams greedy(const RefineOptions& options) {
    GenerationParams p;
    p.temperature = 0.0;
    p.max_output_tokens = options.max_output_tokens;
    return p;
}

inline void record_answer(RefineTrace& trace, std::string answer) {
    trace.parsed.push_back(try_parse_invocation(answer));
    trace.answers.push_back(std::move(answer));
}

}  // namespace detail

/// Greedy direct answer, then up to max_iterations refinement turns over the
/// growing conversation; stops as soon as two consecutive answers are equal.
/// On exhaustion the last answer is returned. At most n + 1 generations.
inline RefineTrace adaptive_self_refine(ModelBackend& backend, const Conversation& context,
                                        const RefineOptions& options = {}) {
    if (options.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    const GenerationParams params = detail::greedy(options);
    RefineTrace trace;
    Conversation conv = context;
    try {
        detail::record_answer(trace, backend.generate_one(conv, params));
        for (int i = 1; i <= options.max_iterations; ++i) {
            append_refine_turn(conv, trace.answers.back(), options.refine_prompt);
            detail::record_answer(trace, backend.generate_one(conv, params));
            trace.iterations_used = i;
            const auto& cur = trace.answers[trace.answers.size() - 1];
            const auto& prev = trace.answers[trace.answers.size() - 2];
            if (answers_equal(cur, prev, options.equality)) {
                trace.stop_reason = StopReason::converged;
                trace.final_answer = cur;
                return trace;
            }
        }
    } catch (const BackendError& e) {
        throw RefineError(e, std::move(trace));
    }
    trace.stop_reason = StopReason::max_iterations;
    trace.final_answer = trace.answers.back();
    return trace;
}

inline RefineTrace adaptive_self_refine(ModelBackend& backend, std::string_view query,
                                        const std::vector<ToolSchema>& tools, const RefineOptions& options = {},
                                        std::string_view other_information = {}) {
    return adaptive_self_refine(backend, direct_context(query, tools, other_information), options);
}

/// A_0 ... A_count with no convergence check.
inline std::vector<std::string> refine_chain(ModelBackend& backend, const Conversation& context, int count,
                                             const RefineOptions& options = {}) {
    if (count < 0) throw std::invalid_argument("refinement count must be >= 0");
    const GenerationParams params = detail::greedy(options);
    std::vector<std::string> answers;
    Conversation conv = context;
    answers.push_back(backend.generate_one(conv, params));
    for (int i = 1; i <= count; ++i) {
        append_refine_turn(conv, answers.back(), options.refine_prompt);
        answers.push_back(backend.generate_one(conv, params));
    }
    return answers;
}

/// Runs exactly `iteration` refinement turns and returns that answer.
inline std::string vanilla_self_refine(ModelBackend& backend, const Conversation& context, int iteration,
                                       const RefineOptions& options = {}) {
    return refine_chain(backend, context, iteration, options).back();
}

inline std::string vanilla_self_refine(ModelBackend& backend, std::string_view query,
                                       const std::vector<ToolSchema>& tools, int iteration,
                                       const RefineOptions& options = {}, std::string_view other_information = {}) {
    return vanilla_self_refine(backend, direct_context(query, tools, other_information), iteration, options);
}

class EmptyAnswers : public std::invalid_argument {
public:
    EmptyAnswers() : std::invalid_argument("self-consistency needs at least one answer") {}
};

/// Most frequent answer under answers_equal; ties go to the class seen first.
/// The returned text is that class's first occurrence.
inline std::string self_consistency(const std::vector<std::string>& answers,
                                    EqualityMode mode = EqualityMode::structural) {
    if (answers.empty()) throw EmptyAnswers();
    std::vector<std::size_t> representative;  // index of each class's first member
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        bool placed = false;
        for (std::size_t c = 0; c < representative.size(); ++c) {
            if (answers_equal(answers[representative[c]], answers[i], mode)) {
                ++counts[c];
                placed = true;
                break;
            }
        }
        if (!placed) {
            representative.push_back(i);
            counts.push_back(1);
        }
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c)
        if (counts[c] > counts[best]) best = c;
    return answers[representative[best]];
}

}  // namespace toolforge
