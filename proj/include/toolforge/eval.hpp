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

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "toolforge/alignment.hpp"
#include "toolforge/inference.hpp"
#include "toolforge/jsonl.hpp"
#include "toolforge/parallel.hpp"

namespace toolforge {

struct BenchmarkCase {
    std::string id;
    std::string category;
    std::string query;
    std::vector<ToolSchema> tools;
    std::vector<InvocationSequence> references;
    std::string extra_context;
};

inline std::vector<ToolSchema> tools_from_json(const nlohmann::ordered_json& j) {
    if (!j.is_array()) throw SchemaError("'tools' must be an array");
    std::vector<ToolSchema> tools;
    for (const auto& t : j) tools.push_back(tool_schema_from_json(t));
    return tools;
}

inline BenchmarkCase benchmark_case_from_json(const nlohmann::ordered_json& j) {
    if (!j.is_object()) throw std::invalid_argument("benchmark line must be a JSON object");
    BenchmarkCase c;
    c.id = j.at("id").get<std::string>();
    c.category = j.value("category", std::string("uncategorized"));
    c.query = j.at("query").get<std::string>();
    c.tools = tools_from_json(j.at("tools"));
    const auto& refs = j.at("references");
    if (!refs.is_array() || refs.empty()) throw std::invalid_argument("case '" + c.id + "' needs at least one reference");
    for (const auto& r : refs) {
        try {
            c.references.push_back(parse_invocation(r.get<std::string>()));
        } catch (const ParseError& e) {
            throw std::invalid_argument("case '" + c.id + "': malformed reference: " + e.what());
        }
    }
    c.extra_context = j.value("extra_context", std::string());
    return c;
}

/// Reads benchmark JSONL; the first bad line aborts with its line number.
inline std::vector<BenchmarkCase> load_benchmark(const std::filesystem::path& path) {
    std::vector<BenchmarkCase> cases;
    std::set<std::string> seen;
    for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        auto c = benchmark_case_from_json(nlohmann::ordered_json::parse(line));
        if (!seen.insert(c.id).second) throw DataError(path, line_no, "duplicate case id '" + c.id + "'");
        cases.push_back(std::move(c));
    });
    return cases;
}

/// Correct iff the prediction reproduces some reference exactly: overlap 1,
/// i.e. equal call multisets regardless of call or argument order.
inline bool judge(const InvocationSequence& prediction, const std::vector<InvocationSequence>& references) {
    return std::any_of(references.begin(), references.end(),
                       [&](const InvocationSequence& r) { return overlap(r, prediction) == 1.0; });
}

inline bool judge_text(std::string_view prediction, const std::vector<InvocationSequence>& references) {
    const auto parsed = try_parse_invocation(prediction);
    return parsed && judge(*parsed, references);
}

struct InferenceMode {
    enum class Kind { direct, adaptive, vanilla, consistency };
    Kind kind = Kind::direct;
    int n = 0;  // max iterations (adaptive, consistency) or refinement index (vanilla)

    static InferenceMode direct() { return {Kind::direct, 0}; }
    static InferenceMode adaptive(int n = 5) { return {Kind::adaptive, n}; }
    static InferenceMode vanilla(int i) { return {Kind::vanilla, i}; }
    static InferenceMode consistency(int n = 5) { return {Kind::consistency, n}; }

    /// "direct", "adaptive[:n]", "vanilla:i", "consistency[:n]".
    static InferenceMode parse(std::string_view text, int default_n = 5) {
        const auto colon = text.find(':');
        const std::string_view head = text.substr(0, colon);
        std::optional<int> arg;
        if (colon != std::string_view::npos) {
            const std::string_view tail = text.substr(colon + 1);
            int v = 0;
            const auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), v);
            if (ec != std::errc() || ptr != tail.data() + tail.size() || v < 0)
                throw std::invalid_argument("bad inference mode argument in '" + std::string(text) + "'");
            arg = v;
        }
        InferenceMode m;
        if (head == "direct") {
            if (arg) throw std::invalid_argument("direct mode takes no argument");
            return direct();
        }
        if (head == "adaptive") m = adaptive(arg.value_or(default_n));
        else if (head == "vanilla") m = vanilla(arg.value_or(default_n));
        else if (head == "consistency") m = consistency(arg.value_or(default_n));
        else throw std::invalid_argument("unknown inference mode '" + std::string(text) + "'");
        if ((m.kind == Kind::adaptive || m.kind == Kind::consistency) && m.n < 1)
            throw std::invalid_argument("mode '" + std::string(text) + "' needs n >= 1");
        return m;
    }

    std::string name() const {
        switch (kind) {
            case Kind::direct: return "direct";
            case Kind::adaptive: return "adaptive:" + std::to_string(n);
            case Kind::vanilla: return "vanilla:" + std::to_string(n);
            case Kind::consistency: return "consistency:" + std::to_string(n);
        }
        return "direct";
    }
};

struct CategoryCount {
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct AccuracyReport {
    std::string mode;
    std::map<std::string, CategoryCount> categories;
    std::size_t correct = 0;
    std::size_t total = 0;
    std::optional<double> mean_iterations;
    std::size_t errors = 0;

    double overall() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }

    void add(const std::string& category, bool is_correct) {
        auto& c = categories[category];
        ++c.total;
        ++total;
        if (is_correct) {
            ++c.correct;
            ++correct;
        }
    }
};

inline nlohmann::json to_json(const AccuracyReport& r) {
    nlohmann::json cats = nlohmann::json::object();
    for (const auto& [name, c] : r.categories)
        cats[name] = {{"correct", c.correct}, {"total", c.total}, {"accuracy", c.accuracy()}};
    return {{"mode", r.mode},
            {"overall", r.overall()},
            {"correct", r.correct},
            {"total", r.total},
            {"categories", std::move(cats)},
            {"mean_iterations", r.mean_iterations ? nlohmann::json(*r.mean_iterations) : nlohmann::json(nullptr)},
            {"errors", r.errors}};
}

inline AccuracyReport accuracy_report_from_json(const nlohmann::json& j) {
    AccuracyReport r;
    r.mode = j.at("mode").get<std::string>();
    for (const auto& [name, c] : j.at("categories").items()) {
        CategoryCount cc{c.at("correct").get<std::size_t>(), c.at("total").get<std::size_t>()};
        if (cc.correct > cc.total) throw std::invalid_argument("report category '" + name + "': correct > total");
        r.correct += cc.correct;
        r.total += cc.total;
        r.categories[name] = cc;
    }
    if (j.contains("mean_iterations") && !j["mean_iterations"].is_null())
        r.mean_iterations = j["mean_iterations"].get<double>();
    r.errors = j.value("errors", std::size_t{0});
    return r;
}

struct CaseResult {
    std::string id;
    std::string category;
    std::string final_answer;
    bool correct = false;
    std::string error;  // empty unless the backend failed
    RefineTrace trace;
};

inline nlohmann::json prediction_to_json(const CaseResult& c) {
    nlohmann::json j = {{"id", c.id}, {"category", c.category}, {"final", c.final_answer}, {"correct", c.correct}};
    if (!c.error.empty()) j["error"] = c.error;
    return j;
}

struct EvalResult {
    AccuracyReport report;
    std::vector<CaseResult> cases;
};

struct EvalOptions {
    RefineOptions refine;
    std::size_t parallel = 8;
    std::string system_template = std::string(kSystemPromptTemplate);
};

/// Runs one inference strategy and returns its full trace. Direct mode is a
/// zero-iteration trace; consistency's final is the majority over A_1..A_n.
inline RefineTrace run_mode(ModelBackend& backend, const Conversation& context, const InferenceMode& mode,
                            const RefineOptions& base) {
    RefineOptions options = base;
    RefineTrace trace;
    switch (mode.kind) {
        case InferenceMode::Kind::adaptive:
            options.max_iterations = mode.n;
            return adaptive_self_refine(backend, context, options);
        case InferenceMode::Kind::direct:
        case InferenceMode::Kind::vanilla:
        case InferenceMode::Kind::consistency: {
            const int count = mode.kind == InferenceMode::Kind::direct ? 0 : mode.n;
            trace.answers = refine_chain(backend, context, count, options);
            for (const auto& a : trace.answers) trace.parsed.push_back(try_parse_invocation(a));
            trace.iterations_used = count;
            trace.stop_reason = StopReason::max_iterations;
            if (mode.kind == InferenceMode::Kind::consistency) {
                const std::vector<std::string> refined(trace.answers.begin() + 1, trace.answers.end());
                trace.final_answer = self_consistency(refined, options.equality);
            } else {
                trace.final_answer = trace.answers.back();
            }
            return trace;
        }
    }
    return trace;
}

/// Accuracy of `mode` over the benchmark. Backend failures count as incorrect
/// and are tallied in `errors`; aggregation follows case order.
inline EvalResult evaluate(ModelBackend& backend, const std::vector<BenchmarkCase>& cases, const InferenceMode& mode,
                           const EvalOptions& options = {}) {
    EvalResult result;
    result.report.mode = mode.name();
    result.cases.resize(cases.size());
    const std::size_t limit = backend.share_safe() ? options.parallel : 1;
    parallel_for(cases.size(), limit, [&](std::size_t i) {
        const auto& c = cases[i];
        CaseResult& out = result.cases[i];
        out.id = c.id;
        out.category = c.category;
        const Conversation context = direct_context(c.query, c.tools, c.extra_context, options.system_template);
        try {
            out.trace = run_mode(backend, context, mode, options.refine);
            out.final_answer = out.trace.final_answer;
            out.correct = judge_text(out.final_answer, c.references);
        } catch (const RefineError& e) {
            out.trace = e.trace();
            out.error = e.what();
        } catch (const BackendError& e) {
            out.error = e.what();
        }
        out.trace.id = c.id;
    });
    double iteration_sum = 0.0;
    std::size_t iteration_cases = 0;
    for (const auto& c : result.cases) {
        result.report.add(c.category, c.correct);
        if (!c.error.empty()) {
            ++result.report.errors;
        } else {
            iteration_sum += c.trace.iterations_used;
            ++iteration_cases;
        }
    }
    if (mode.kind == InferenceMode::Kind::adaptive && iteration_cases > 0)
        result.report.mean_iterations = iteration_sum / static_cast<double>(iteration_cases);
    return result;
}

/// Judges stored final answers (id -> text). Cases without a prediction count
/// as incorrect errors.
inline AccuracyReport evaluate_predictions(const std::vector<BenchmarkCase>& cases,
                                           const std::map<std::string, std::string>& predictions,
                                           std::string mode_name = "predictions") {
    AccuracyReport report;
    report.mode = std::move(mode_name);
    for (const auto& c : cases) {
        const auto it = predictions.find(c.id);
        if (it == predictions.end()) {
            ++report.errors;
            report.add(c.category, false);
            continue;
        }
        report.add(c.category, judge_text(it->second, c.references));
    }
    return report;
}

enum class ReportFormat { table, json };

inline ReportFormat report_format_from_name(std::string_view s) {
    if (s == "table") return ReportFormat::table;
    if (s == "json") return ReportFormat::json;
    throw std::invalid_argument("unknown report format '" + std::string(s) + "'");
}

namespace detail {

inline std::string fixed4(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

}  // namespace detail

/// One report renders as a JSON object, several as an array. Tables put one
/// column per report and one row per category.
inline std::string render_report(const std::vector<AccuracyReport>& reports, ReportFormat format) {
    if (reports.empty()) throw std::invalid_argument("render_report needs at least one report");
    if (format == ReportFormat::json) {
        if (reports.size() == 1) return to_json(reports.front()).dump(2) + "\n";
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : reports) arr.push_back(to_json(r));
        return arr.dump(2) + "\n";
    }
    std::set<std::string> category_names;
    bool any_iterations = false;
    for (const auto& r : reports) {
        for (const auto& [name, _] : r.categories) category_names.insert(name);
        any_iterations = any_iterations || r.mean_iterations.has_value();
    }
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"category"};
    for (const auto& r : reports) header.push_back(r.mode);
    rows.push_back(header);
    for (const auto& name : category_names) {
        std::vector<std::string> row{name};
        for (const auto& r : reports) {
            const auto it = r.categories.find(name);
            row.push_back(it == r.categories.end() ? "-"
                                                   : detail::fixed4(it->second.accuracy()) + " (" +
                                                         std::to_string(it->second.correct) + "/" +
                                                         std::to_string(it->second.total) + ")");
        }
        rows.push_back(row);
    }
    std::vector<std::string> overall{"overall"};
    for (const auto& r : reports)
        overall.push_back(detail::fixed4(r.overall()) + " (" + std::to_string(r.correct) + "/" +
                          std::to_string(r.total) + ")");
    rows.push_back(overall);
    if (any_iterations) {
        std::vector<std::string> row{"mean_iterations"};
        for (const auto& r : reports) row.push_back(r.mean_iterations ? detail::fixed4(*r.mean_iterations) : "-");
        rows.push_back(row);
    }
    std::vector<std::string> errors{"errors"};
    for (const auto& r : reports) errors.push_back(std::to_string(r.errors));
    rows.push_back(errors);

    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += "  ";
            const std::string pad(width[c] - row[c].size(), ' ');
            out += c == 0 ? row[c] + pad : pad + row[c];
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out.push_back('\n');
    }
    return out;
}

}  // namespace toolforge
