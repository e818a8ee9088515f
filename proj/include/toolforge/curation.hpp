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
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "toolforge/difficulty.hpp"
#include "toolforge/eval.hpp"
#include "toolforge/inference.hpp"
#include "toolforge/jsonl.hpp"

namespace toolforge {

enum class SampleKind { direct, refinement };

inline std::string_view sample_kind_name(SampleKind k) { return k == SampleKind::direct ? "direct" : "refinement"; }

inline SampleKind sample_kind_from_name(std::string_view s) {
    if (s == "direct") return SampleKind::direct;
    if (s == "refinement") return SampleKind::refinement;
    throw std::invalid_argument("unknown sample kind '" + std::string(s) + "'");
}

/// A training conversation whose last assistant turn is the reference.
///   direct:     [system, user(q), assistant(A)]
///   refinement: [system, user(q), assistant(A1, masked), user(r), assistant(A)]
struct TrainingSample {
    std::string id;
    SampleKind kind = SampleKind::direct;
    Conversation conversation;
    InvocationSequence reference;
    bool identical_refinement = false;  // refinement sample with A1 == A

    /// Everything before the final assistant turn.
    Conversation context() const {
        if (conversation.empty()) return {};
        return Conversation(conversation.begin(), conversation.end() - 1);
    }
};

/// One line of the input pool.
struct PoolEntry {
    std::string id;
    std::string query;
    std::vector<ToolSchema> tools;
    InvocationSequence answer;
    std::string extra_context;
};

inline PoolEntry pool_entry_from_json(const nlohmann::ordered_json& j) {
    if (!j.is_object()) throw std::invalid_argument("pool line must be a JSON object");
    PoolEntry e;
    e.id = j.at("id").get<std::string>();
    e.query = j.at("query").get<std::string>();
    e.tools = tools_from_json(j.at("tools"));
    try {
        e.answer = parse_invocation(j.at("answer").get<std::string>());
    } catch (const ParseError& err) {
        throw std::invalid_argument("sample '" + e.id + "': malformed answer: " + err.what());
    }
    e.extra_context = j.value("extra_context", std::string());
    return e;
}

inline TrainingSample make_direct_sample(const PoolEntry& entry,
                                         std::string_view system_template = kSystemPromptTemplate) {
    TrainingSample s;
    s.id = entry.id;
    s.kind = SampleKind::direct;
    s.reference = canonicalize(entry.answer);
    s.conversation = direct_context(entry.query, entry.tools, entry.extra_context, system_template);
    s.conversation.push_back(ChatMessage{Role::assistant, serialize_invocation(s.reference), true});
    return s;
}

/// Builds ⟨q,T⟩, A1, r, A from a direct sample. A1 is carried verbatim even
/// when malformed or already correct; only the final turn is trainable.
inline TrainingSample build_refinement_sample(const TrainingSample& base, std::string_view first_answer,
                                              std::string_view refine_prompt = kRefinePrompt) {
    if (base.kind != SampleKind::direct || base.conversation.size() != 3)
        throw std::invalid_argument("build_refinement_sample needs a direct sample");
    TrainingSample s;
    s.id = base.id + "/refine";
    s.kind = SampleKind::refinement;
    s.reference = base.reference;
    s.conversation = base.context();
    for (auto& m : s.conversation) m.trainable = false;
    s.conversation.push_back(ChatMessage{Role::assistant, std::string(first_answer), false});
    s.conversation.push_back(ChatMessage{Role::user, std::string(refine_prompt), false});
    const std::string final_text = serialize_invocation(base.reference);
    s.conversation.push_back(ChatMessage{Role::assistant, final_text, true});
    s.identical_refinement = answers_equal(first_answer, final_text);
    return s;
}

inline nlohmann::ordered_json to_json(const TrainingSample& s) {
    nlohmann::ordered_json messages = nlohmann::ordered_json::array();
    for (const auto& m : s.conversation) {
        nlohmann::ordered_json jm = nlohmann::ordered_json::object();
        jm["role"] = std::string(role_name(m.role));
        jm["content"] = m.content;
        jm["trainable"] = m.trainable;
        messages.push_back(std::move(jm));
    }
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    j["id"] = s.id;
    j["kind"] = std::string(sample_kind_name(s.kind));
    j["messages"] = std::move(messages);
    return j;
}

/// Reverse of to_json; checks the role layout, mask flags and that the last
/// assistant turn parses.
inline TrainingSample training_sample_from_json(const nlohmann::ordered_json& j) {
    TrainingSample s;
    s.id = j.at("id").get<std::string>();
    s.kind = sample_kind_from_name(j.at("kind").get<std::string>());
    for (const auto& m : j.at("messages")) {
        s.conversation.push_back(ChatMessage{role_from_name(m.at("role").get<std::string>()),
                                             m.at("content").get<std::string>(), m.value("trainable", false)});
    }
    const std::vector<Role> layout =
        s.kind == SampleKind::direct
            ? std::vector<Role>{Role::system, Role::user, Role::assistant}
            : std::vector<Role>{Role::system, Role::user, Role::assistant, Role::user, Role::assistant};
    if (s.conversation.size() != layout.size())
        throw std::invalid_argument("sample '" + s.id + "': expected " + std::to_string(layout.size()) + " messages");
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (s.conversation[i].role != layout[i])
            throw std::invalid_argument("sample '" + s.id + "': unexpected role at message " + std::to_string(i));
        const bool last = i + 1 == layout.size();
        if (s.conversation[i].trainable != last)
            throw std::invalid_argument("sample '" + s.id + "': only the final assistant turn may be trainable");
    }
    try {
        s.reference = parse_invocation(s.conversation.back().content);
    } catch (const ParseError& e) {
        throw std::invalid_argument("sample '" + s.id + "': final answer does not parse: " + e.what());
    }
    if (s.kind == SampleKind::refinement)
        s.identical_refinement = answers_equal(s.conversation[2].content, s.conversation.back().content);
    return s;
}

inline void export_training_file(const std::vector<TrainingSample>& samples, const std::filesystem::path& path) {
    write_jsonl(path, samples, [](const TrainingSample& s) { return to_json(s); });
}

inline std::vector<TrainingSample> import_training_file(const std::filesystem::path& path) {
    std::vector<TrainingSample> out;
    for_each_line(path, [&](std::size_t, const std::string& line) {
        out.push_back(training_sample_from_json(nlohmann::ordered_json::parse(line)));
    });
    return out;
}

/// A sample read from either a pool file or a training file, with the source
/// line kept so filters can re-emit it untouched.
struct LoadedSample {
    TrainingSample sample;
    std::string line;
};

/// Accepts pool lines (`query`/`answer`) and training lines (`messages`),
/// mixed freely.
inline std::vector<LoadedSample> load_samples(const std::filesystem::path& path,
                                              std::string_view system_template = kSystemPromptTemplate) {
    std::vector<LoadedSample> out;
    std::set<std::string> seen;
    for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        const auto j = nlohmann::ordered_json::parse(line);
        TrainingSample s = j.contains("messages") ? training_sample_from_json(j)
                                                  : make_direct_sample(pool_entry_from_json(j), system_template);
        if (!seen.insert(s.id).second) throw DataError(path, line_no, "duplicate sample id '" + s.id + "'");
        out.push_back(LoadedSample{std::move(s), line});
    });
    return out;
}

struct SelectionConfig {
    double alpha = 0.0;
    double beta = 0.9;

    void validate() const {
        if (!(alpha < beta)) throw std::invalid_argument("selection: alpha must be < beta");
    }
    bool accepts(double difficulty) const { return alpha < difficulty && difficulty < beta; }
};

/// Samples whose difficulty lies strictly inside (alpha, beta), input order kept.
inline std::vector<TrainingSample> select(const std::vector<std::pair<TrainingSample, DifficultyRecord>>& records,
                                          const SelectionConfig& config) {
    config.validate();
    std::vector<TrainingSample> out;
    for (const auto& [sample, rec] : records)
        if (config.accepts(rec.difficulty)) out.push_back(sample);
    return out;
}

struct AugmentResult {
    std::vector<TrainingSample> samples;  // all direct samples, then refinements
    std::size_t refinements = 0;
    std::size_t identical = 0;
    std::size_t failures = 0;
    std::vector<std::string> failure_notes;
};

/// For each direct sample draws one greedy first answer from `backend` and
/// appends the matching refinement sample. Refinement samples already present
/// in the pool are dropped and rebuilt. Backend failures skip the sample.
inline AugmentResult augment_pool(const std::vector<TrainingSample>& pool, ModelBackend& backend,
                                  std::string_view refine_prompt = kRefinePrompt, std::size_t parallel = 8,
                                  std::optional<int> max_output_tokens = std::nullopt) {
    AugmentResult result;
    for (const auto& s : pool)
        if (s.kind == SampleKind::direct) result.samples.push_back(s);
    const std::size_t n_direct = result.samples.size();
    std::vector<std::optional<TrainingSample>> built(n_direct);
    std::vector<std::string> errors(n_direct);
    const std::size_t limit = backend.share_safe() ? parallel : 1;
    parallel_for(n_direct, limit, [&](std::size_t i) {
        const auto& base = result.samples[i];
        GenerationParams p;
        p.temperature = 0.0;
        p.max_output_tokens = max_output_tokens;
        try {
            built[i] = build_refinement_sample(base, backend.generate_one(base.context(), p), refine_prompt);
        } catch (const BackendError& e) {
            errors[i] = base.id + ": " + e.what();
        }
    });
    for (std::size_t i = 0; i < n_direct; ++i) {
        if (!built[i]) {
            ++result.failures;
            result.failure_notes.push_back(errors[i]);
            continue;
        }
        if (built[i]->identical_refinement) ++result.identical;
        ++result.refinements;
        result.samples.push_back(std::move(*built[i]));
    }
    return result;
}

class TrainerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Consumes an exported training file, returns the next backend.
using TrainerHook = std::function<BackendPtr(const std::filesystem::path& training_file, int iteration)>;

/// Dev-set accuracy of a backend, in [0, 1].
using DevEvaluator = std::function<double(ModelBackend&)>;

struct IterationOptions {
    int iteration = 1;
    std::filesystem::path out_dir;  // artifacts land in out_dir/iter_<n>/
    std::string refine_prompt = std::string(kRefinePrompt);
    std::size_t parallel = 8;
    int max_iterations = 3;
    double min_improvement = 0.005;  // accuracy fraction, i.e. 0.5 points
    DevEvaluator dev_accuracy;
    std::optional<double> dev_before;  // reused from the previous iteration when known
};

struct IterationReport {
    int iteration = 0;
    std::size_t pool_size = 0;
    std::size_t selected = 0;
    std::size_t refinement_samples = 0;
    std::size_t identical_refinements = 0;
    std::size_t augment_failures = 0;
    std::optional<double> dev_before;
    std::optional<double> dev_after;
    bool stop = false;
    std::string stop_reason;  // "continue", "iteration_cap" or "marginal_improvement"
};

inline nlohmann::json to_json(const IterationReport& r) {
    auto opt = [](const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); };
    return {{"iteration", r.iteration},
            {"pool_size", r.pool_size},
            {"selected", r.selected},
            {"refinement_samples", r.refinement_samples},
            {"identical_refinements", r.identical_refinements},
            {"augment_failures", r.augment_failures},
            {"dev_before", opt(r.dev_before)},
            {"dev_after", opt(r.dev_after)},
            {"stop", r.stop},
            {"stop_reason", r.stop_reason}};
}

inline IterationReport iteration_report_from_json(const nlohmann::json& j) {
    IterationReport r;
    r.iteration = j.at("iteration").get<int>();
    r.pool_size = j.at("pool_size").get<std::size_t>();
    r.selected = j.at("selected").get<std::size_t>();
    r.refinement_samples = j.value("refinement_samples", std::size_t{0});
    r.identical_refinements = j.value("identical_refinements", std::size_t{0});
    r.augment_failures = j.value("augment_failures", std::size_t{0});
    if (j.contains("dev_before") && !j["dev_before"].is_null()) r.dev_before = j["dev_before"].get<double>();
    if (j.contains("dev_after") && !j["dev_after"].is_null()) r.dev_after = j["dev_after"].get<double>();
    r.stop = j.at("stop").get<bool>();
    r.stop_reason = j.value("stop_reason", std::string());
    return r;
}

/// Stop when the dev gain is below min_improvement or the cap is reached.
inline std::pair<bool, std::string> stop_decision(int iteration, int max_iterations, std::optional<double> before,
                                                  std::optional<double> after, double min_improvement) {
    if (before && after && *after - *before < min_improvement) return {true, "marginal_improvement"};
    if (iteration >= max_iterations) return {true, "iteration_cap"};
    return {false, "continue"};
}

struct IterationOutcome {
    BackendPtr backend;
    IterationReport report;
};

inline std::filesystem::path iteration_dir(const std::filesystem::path& out_dir, int iteration) {
    return out_dir / ("iter_" + std::to_string(iteration));
}

/// One round of curation: rebuild refinement samples with the current model,
/// score every sample, keep those inside the difficulty band, export them and
/// hand the file to the trainer. A throwing trainer aborts the round and the
/// caller keeps its current backend.
inline IterationOutcome run_iteration(BackendPtr backend, const std::vector<TrainingSample>& pool,
                                      const SelectionConfig& selection, const DifficultyConfig& difficulty,
                                      const TrainerHook& trainer, const IterationOptions& options) {
    if (!backend) throw std::invalid_argument("run_iteration needs a backend");
    if (!trainer) throw std::invalid_argument("run_iteration needs a trainer hook");
    selection.validate();
    difficulty.validate();
    IterationReport report;
    report.iteration = options.iteration;

    if (options.dev_accuracy) report.dev_before = options.dev_before ? *options.dev_before : options.dev_accuracy(*backend);

    AugmentResult augmented = augment_pool(pool, *backend, options.refine_prompt, options.parallel,
                                           difficulty.max_output_tokens);
    report.pool_size = augmented.samples.size();
    report.refinement_samples = augmented.refinements;
    report.identical_refinements = augmented.identical;
    report.augment_failures = augmented.failures;

    std::vector<DifficultyTask> tasks;
    tasks.reserve(augmented.samples.size());
    for (const auto& s : augmented.samples) tasks.push_back(DifficultyTask{s.id, s.context(), s.reference});
    DifficultyConfig diff = difficulty;
    diff.parallel = options.parallel;
    const auto records = estimate_all(*backend, tasks, diff);

    std::vector<std::pair<TrainingSample, DifficultyRecord>> scored;
    scored.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) scored.emplace_back(augmented.samples[i], records[i]);
    const auto selected = select(scored, selection);
    report.selected = selected.size();

    const auto dir = iteration_dir(options.out_dir, options.iteration);
    export_training_file(augmented.samples, dir / "augmented.jsonl");
    write_difficulty_jsonl(dir / "difficulty.jsonl", records);
    const auto train_path = dir / "train.jsonl";
    export_training_file(selected, train_path);

    BackendPtr next;
    try {
        next = trainer(train_path, options.iteration);
    } catch (const TrainerError&) {
        throw;
    } catch (const std::exception& e) {
        throw TrainerError(std::string("trainer failed: ") + e.what());
    }
    if (!next) throw TrainerError("trainer returned no backend");

    if (options.dev_accuracy) report.dev_after = options.dev_accuracy(*next);
    std::tie(report.stop, report.stop_reason) = stop_decision(options.iteration, options.max_iterations,
                                                              report.dev_before, report.dev_after,
                                                              options.min_improvement);
    write_file(dir / "report.json", to_json(report).dump(2) + "\n");
    return IterationOutcome{std::move(next), std::move(report)};
}

/// Repeats run_iteration from iteration 1 until the stop rule fires.
inline std::vector<IterationReport> run_curation(BackendPtr backend, const std::vector<TrainingSample>& pool,
                                                 const SelectionConfig& selection, const DifficultyConfig& difficulty,
                                                 const TrainerHook& trainer, IterationOptions options,
                                                 BackendPtr* final_backend = nullptr) {
    std::vector<IterationReport> reports;
    for (int it = 1;; ++it) {
        options.iteration = it;
        auto outcome = run_iteration(backend, pool, selection, difficulty, trainer, options);
        backend = std::move(outcome.backend);
        options.dev_before = outcome.report.dev_after;
        reports.push_back(outcome.report);
        if (outcome.report.stop) break;
    }
    if (final_backend) *final_backend = backend;
    return reports;
}

}  // namespace toolforge
