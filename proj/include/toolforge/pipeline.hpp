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

// Batch commands behind the `toolforge` CLI. Each command reads its inputs
// from the paths in PipelineConfig and writes its artifacts into out_dir.

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolforge/curation.hpp"
#include "toolforge/difficulty.hpp"
#include "toolforge/eval.hpp"
#include "toolforge/http_model.hpp"
#include "toolforge/inference.hpp"
#include "toolforge/jsonl.hpp"
#include "toolforge/model.hpp"

namespace toolforge {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int config = 2;
inline constexpr int io = 3;
inline constexpr int backend = 4;
inline constexpr int trainer = 5;
}  // namespace exit_code

/// Backend document plus the directory its relative paths resolve against.
struct BackendSpec {
    nlohmann::json doc;
    std::filesystem::path base_dir;
    std::filesystem::path source;  // file it came from, empty when inline
};

struct PipelineConfig {
    std::optional<BackendSpec> backend;
    DifficultyConfig difficulty;
    SelectionConfig selection;
    int max_iters = 5;  // refinement cap for inference
    std::string refine_prompt = std::string(kRefinePrompt);
    std::string mode = "adaptive";
    EqualityMode equality = EqualityMode::structural;
    int iteration_cap = 3;
    double min_improvement = 0.005;
    std::string dev_mode = "direct";
    std::filesystem::path pool;
    std::filesystem::path benchmark;
    std::filesystem::path dev;
    std::filesystem::path difficulty_path;
    std::filesystem::path predictions;
    std::filesystem::path out_dir = ".";
    std::string trainer;
    std::size_t parallel = 8;
    std::uint64_t seed = 0;
    std::string format = "table";
};

inline BackendSpec load_backend_spec(const std::filesystem::path& path) {
    BackendSpec spec;
    try {
        spec.doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": invalid backend config: " + e.what());
    }
    spec.source = std::filesystem::absolute(path);
    spec.base_dir = spec.source.parent_path();
    return spec;
}

/// Copy of the document with `table_path` made absolute, so it can be stored
/// elsewhere and still load.
inline nlohmann::json portable_backend_doc(const BackendSpec& spec) {
    nlohmann::json doc = spec.doc;
    if (doc.contains("table_path")) {
        const std::filesystem::path p = doc["table_path"].get<std::string>();
        doc["table_path"] = (p.is_absolute() ? p : spec.base_dir / p).lexically_normal().string();
    }
    return doc;
}

/// `{"kind": "scripted", ...}` or `{"kind": "http", "base_url", ...}`.
/// Scripted tables may live inline (`table`) or in a separate file
/// (`table_path`, a JSON array).
inline BackendPtr make_backend(const BackendSpec& spec) {
    const auto& doc = spec.doc;
    if (!doc.is_object() || !doc.contains("kind")) throw ConfigError("backend config needs a 'kind'");
    const std::string kind = doc["kind"].get<std::string>();
    try {
        if (kind == "scripted") {
            nlohmann::json merged = doc;
            if (doc.contains("table_path")) {
                std::filesystem::path p = doc["table_path"].get<std::string>();
                if (p.is_relative()) p = spec.base_dir / p;
                merged["table"] = nlohmann::json::parse(read_file(p));
            }
            return std::make_shared<ScriptedModel>(ScriptedModel::from_json(merged));
        }
        if (kind == "http") return std::make_shared<HttpModel>(HttpConfig::from_json(doc));
    } catch (const IoError&) {
        throw;
    } catch (const BackendError& e) {
        throw ConfigError(std::string("backend config: ") + e.what());
    } catch (const std::exception& e) {
        throw ConfigError(std::string("backend config: ") + e.what());
    }
    throw ConfigError("unknown backend kind '" + kind + "'");
}

/// Reads a pipeline config document. Relative paths resolve against the
/// config file's directory.
inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": invalid config: " + e.what());
    }
    const auto base = std::filesystem::absolute(path).parent_path();
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path fp = p;
        return fp.is_absolute() ? fp : (base / fp).lexically_normal();
    };
    PipelineConfig c;
    try {
        if (j.contains("backend")) {
            if (j["backend"].is_string()) {
                c.backend = load_backend_spec(resolve(j["backend"].get<std::string>()));
            } else {
                c.backend = BackendSpec{j["backend"], base, {}};
            }
        }
        if (j.contains("difficulty")) {
            const auto& d = j["difficulty"];
            c.difficulty.k = d.value("k", c.difficulty.k);
            c.difficulty.temperature = d.value("temperature", c.difficulty.temperature);
            if (d.contains("max_output_tokens") && !d["max_output_tokens"].is_null())
                c.difficulty.max_output_tokens = d["max_output_tokens"].get<int>();
        }
        if (j.contains("selection")) {
            c.selection.alpha = j["selection"].value("alpha", c.selection.alpha);
            c.selection.beta = j["selection"].value("beta", c.selection.beta);
        }
        if (j.contains("inference")) {
            const auto& inf = j["inference"];
            c.max_iters = inf.value("n", c.max_iters);
            c.refine_prompt = inf.value("refine_prompt", c.refine_prompt);
            c.mode = inf.value("mode", c.mode);
            c.equality = equality_mode_from_name(inf.value("equality", std::string("structural")));
        }
        if (j.contains("iterate")) {
            const auto& it = j["iterate"];
            c.iteration_cap = it.value("max_iterations", c.iteration_cap);
            c.min_improvement = it.value("min_improvement", c.min_improvement);
            c.dev_mode = it.value("dev_mode", c.dev_mode);
            if (it.contains("trainer")) c.trainer = it["trainer"].get<std::string>();
        }
        if (j.contains("paths")) {
            const auto& p = j["paths"];
            if (p.contains("pool")) c.pool = resolve(p["pool"].get<std::string>());
            if (p.contains("benchmark")) c.benchmark = resolve(p["benchmark"].get<std::string>());
            if (p.contains("dev")) c.dev = resolve(p["dev"].get<std::string>());
            if (p.contains("difficulty")) c.difficulty_path = resolve(p["difficulty"].get<std::string>());
            if (p.contains("predictions")) c.predictions = resolve(p["predictions"].get<std::string>());
            if (p.contains("out_dir")) c.out_dir = resolve(p["out_dir"].get<std::string>());
        }
        c.parallel = j.value("parallel", c.parallel);
        c.seed = j.value("seed", c.seed);
        c.format = j.value("format", c.format);
    } catch (const ConfigError&) {
        throw;
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return c;
}

/// Checks the invariants shared by every command.
inline void validate_config(const PipelineConfig& c) {
    try {
        c.selection.validate();
        c.difficulty.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (c.max_iters < 1) throw ConfigError("max iterations must be >= 1");
    if (c.iteration_cap < 1) throw ConfigError("iteration cap must be >= 1");
    if (c.parallel < 1) throw ConfigError("parallel must be >= 1");
}

namespace detail {

inline void require_path(const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw ConfigError(std::string("missing path: ") + what);
    if (!std::filesystem::exists(p)) throw IoError(p, std::string(what) + " does not exist");
}

inline BackendPtr require_backend(const PipelineConfig& c) {
    if (!c.backend) throw ConfigError("no backend configured (use --backend or the config's 'backend')");
    return make_backend(*c.backend);
}

inline DifficultyConfig difficulty_of(const PipelineConfig& c) {
    DifficultyConfig d = c.difficulty;
    d.seed = c.seed;
    d.parallel = c.parallel;
    return d;
}

inline RefineOptions refine_of(const PipelineConfig& c) {
    RefineOptions r;
    r.refine_prompt = c.refine_prompt;
    r.max_iterations = c.max_iters;
    r.equality = c.equality;
    return r;
}

inline InferenceMode mode_of(const std::string& text, int default_n) {
    try {
        return InferenceMode::parse(text, default_n);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

inline std::vector<std::string> split_modes(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto piece = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!piece.empty()) out.push_back(piece);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw ConfigError("no inference mode given");
    return out;
}

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out.push_back(c);
    }
    out.push_back('\'');
    return out;
}

}  // namespace detail

/// Difficulty of every sample in the pool -> out_dir/difficulty.jsonl.
inline std::vector<DifficultyRecord> cmd_score(const PipelineConfig& c) {
    validate_config(c);
    detail::require_path(c.pool, "pool");
    const auto samples = load_samples(c.pool);
    auto backend = detail::require_backend(c);
    std::vector<DifficultyTask> tasks;
    tasks.reserve(samples.size());
    for (const auto& s : samples) tasks.push_back(DifficultyTask{s.sample.id, s.sample.context(), s.sample.reference});
    auto records = estimate_all(*backend, tasks, detail::difficulty_of(c));
    write_difficulty_jsonl(c.out_dir / "difficulty.jsonl", records);
    return records;
}

/// Pool lines whose difficulty is inside (alpha, beta), re-emitted verbatim
/// to out_dir/selected.jsonl. Returns the number kept.
inline std::size_t cmd_select(const PipelineConfig& c) {
    validate_config(c);
    detail::require_path(c.pool, "pool");
    detail::require_path(c.difficulty_path, "difficulty file");
    const auto samples = load_samples(c.pool);
    std::map<std::string, DifficultyRecord> by_id;
    for (auto& r : read_difficulty_jsonl(c.difficulty_path)) by_id.emplace(r.sample_id, std::move(r));
    std::vector<std::pair<TrainingSample, DifficultyRecord>> scored;
    std::map<std::string, const std::string*> line_of;
    for (const auto& s : samples) {
        const auto it = by_id.find(s.sample.id);
        if (it == by_id.end()) throw IoError(c.difficulty_path, "no difficulty record for sample '" + s.sample.id + "'");
        scored.emplace_back(s.sample, it->second);
        line_of[s.sample.id] = &s.line;
    }
    const auto kept = select(scored, c.selection);
    std::string content;
    for (const auto& s : kept) {
        content += *line_of.at(s.id);
        content.push_back('\n');
    }
    write_file(c.out_dir / "selected.jsonl", content);
    return kept.size();
}

/// Direct samples plus fresh refinement samples -> out_dir/augmented.jsonl.
inline AugmentResult cmd_augment(const PipelineConfig& c) {
    validate_config(c);
    detail::require_path(c.pool, "pool");
    std::vector<TrainingSample> pool;
    for (auto& s : load_samples(c.pool)) pool.push_back(std::move(s.sample));
    auto backend = detail::require_backend(c);
    auto result = augment_pool(pool, *backend, c.refine_prompt, c.parallel, c.difficulty.max_output_tokens);
    export_training_file(result.samples, c.out_dir / "augmented.jsonl");
    return result;
}

/// Runs `<trainer> <training_file> <current_backend_config> <iteration>` and
/// returns the backend config path printed on the last non-empty stdout line.
inline std::filesystem::path run_trainer_command(const std::string& trainer, const std::filesystem::path& training_file,
                                                 const std::filesystem::path& backend_config, int iteration) {
    const std::string cmd = detail::shell_quote(trainer) + " " + detail::shell_quote(training_file.string()) + " " +
                            detail::shell_quote(backend_config.string()) + " " + std::to_string(iteration);
    std::fflush(nullptr);
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw TrainerError("cannot start trainer '" + trainer + "'");
    std::string output;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) output += buf;
    const int status = ::pclose(pipe);
    if (status != 0) throw TrainerError("trainer '" + trainer + "' exited with status " + std::to_string(status));
    std::string last;
    std::size_t pos = 0;
    while (pos < output.size()) {
        auto nl = output.find('\n', pos);
        if (nl == std::string::npos) nl = output.size();
        std::string line = output.substr(pos, nl - pos);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) last = line;
        pos = nl + 1;
    }
    if (last.empty()) throw TrainerError("trainer '" + trainer + "' printed no backend config path");
    if (!std::filesystem::exists(last)) throw TrainerError("trainer output '" + last + "' does not exist");
    return last;
}

struct IterateResult {
    std::vector<IterationReport> reports;
    std::vector<bool> resumed;  // per iteration: loaded from disk instead of run
    std::filesystem::path final_backend_config;
};

/// The full curation loop with an external trainer. Every iteration leaves
/// iter_<n>/{backend.json, augmented.jsonl, difficulty.jsonl, train.jsonl,
/// next_backend.json, report.json}; iterations whose report.json exists are
/// loaded instead of re-run.
inline IterateResult cmd_iterate(const PipelineConfig& c) {
    validate_config(c);
    detail::require_path(c.pool, "pool");
    if (c.trainer.empty()) throw ConfigError("missing trainer command (--trainer)");
    if (!c.backend) throw ConfigError("no backend configured (use --backend or the config's 'backend')");
    std::vector<TrainingSample> pool;
    for (auto& s : load_samples(c.pool)) pool.push_back(std::move(s.sample));
    std::vector<BenchmarkCase> dev;
    if (!c.dev.empty()) {
        detail::require_path(c.dev, "dev benchmark");
        dev = load_benchmark(c.dev);
    }
    const InferenceMode dev_mode = detail::mode_of(c.dev_mode, c.max_iters);

    IterationOptions opts;
    opts.out_dir = c.out_dir;
    opts.refine_prompt = c.refine_prompt;
    opts.parallel = c.parallel;
    opts.max_iterations = c.iteration_cap;
    opts.min_improvement = c.min_improvement;
    if (!dev.empty()) {
        EvalOptions eo;
        eo.refine = detail::refine_of(c);
        eo.parallel = c.parallel;
        opts.dev_accuracy = [dev, dev_mode, eo](ModelBackend& b) { return evaluate(b, dev, dev_mode, eo).report.overall(); };
    }

    IterateResult result;
    BackendSpec current = *c.backend;
    for (int it = 1;; ++it) {
        const auto dir = iteration_dir(c.out_dir, it);
        const auto report_path = dir / "report.json";
        const auto next_path = dir / "next_backend.json";
        if (std::filesystem::exists(report_path) && std::filesystem::exists(next_path)) {
            IterationReport rep;
            try {
                rep = iteration_report_from_json(nlohmann::json::parse(read_file(report_path)));
            } catch (const IoError&) {
                throw;
            } catch (const std::exception& e) {
                throw DataError(report_path, 1, e.what());
            }
            current = load_backend_spec(next_path);
            opts.dev_before = rep.dev_after;
            result.reports.push_back(rep);
            result.resumed.push_back(true);
            if (rep.stop) break;
            continue;
        }

        const auto used_path = dir / "backend.json";
        write_file(used_path, portable_backend_doc(current).dump(2) + "\n");
        auto backend = make_backend(current);
        TrainerHook hook = [&](const std::filesystem::path& train_file, int iteration) -> BackendPtr {
            const auto produced = run_trainer_command(c.trainer, std::filesystem::absolute(train_file),
                                                      std::filesystem::absolute(used_path), iteration);
            BackendSpec next;
            try {
                next = load_backend_spec(produced);
            } catch (const std::exception& e) {
                throw TrainerError(std::string("trainer produced an unreadable backend config: ") + e.what());
            }
            write_file(next_path, portable_backend_doc(next).dump(2) + "\n");
            try {
                return make_backend(next);
            } catch (const std::exception& e) {
                throw TrainerError(std::string("trainer produced an invalid backend config: ") + e.what());
            }
        };
        opts.iteration = it;
        const auto d = detail::difficulty_of(c);
        auto outcome = run_iteration(backend, pool, c.selection, d, hook, opts);
        current = load_backend_spec(next_path);
        opts.dev_before = outcome.report.dev_after;
        result.reports.push_back(outcome.report);
        result.resumed.push_back(false);
        if (outcome.report.stop) break;
    }
    result.final_backend_config = current.source;
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& r : result.reports) summary.push_back(to_json(r));
    write_file(c.out_dir / "iterations.json", summary.dump(2) + "\n");
    return result;
}

/// Predictions and traces for one inference mode -> out_dir/predictions.jsonl
/// and out_dir/traces.jsonl.
inline EvalResult cmd_infer(const PipelineConfig& c) {
    validate_config(c);
    detail::require_path(c.benchmark, "benchmark");
    const auto cases = load_benchmark(c.benchmark);
    const auto mode = detail::mode_of(c.mode, c.max_iters);
    auto backend = detail::require_backend(c);
    EvalOptions eo;
    eo.refine = detail::refine_of(c);
    eo.parallel = c.parallel;
    auto result = evaluate(*backend, cases, mode, eo);
    write_jsonl(c.out_dir / "predictions.jsonl", result.cases, [](const CaseResult& r) { return prediction_to_json(r); });
    write_jsonl(c.out_dir / "traces.jsonl", result.cases, [](const CaseResult& r) { return to_json(r.trace); });
    return result;
}

/// Accuracy reports: from a predictions file when one is configured,
/// otherwise by running each comma-separated mode. Writes out_dir/report.json.
inline std::vector<AccuracyReport> cmd_eval(const PipelineConfig& c) {
    validate_config(c);
    detail::require_path(c.benchmark, "benchmark");
    const auto cases = load_benchmark(c.benchmark);
    std::vector<AccuracyReport> reports;
    if (!c.predictions.empty()) {
        detail::require_path(c.predictions, "predictions");
        std::map<std::string, std::string> preds;
        for_each_line(c.predictions, [&](std::size_t, const std::string& line) {
            const auto j = nlohmann::json::parse(line);
            preds[j.at("id").get<std::string>()] = j.at("final").get<std::string>();
        });
        reports.push_back(evaluate_predictions(cases, preds, c.predictions.stem().string()));
    } else {
        auto backend = detail::require_backend(c);
        EvalOptions eo;
        eo.refine = detail::refine_of(c);
        eo.parallel = c.parallel;
        for (const auto& m : detail::split_modes(c.mode))
            reports.push_back(evaluate(*backend, cases, detail::mode_of(m, c.max_iters), eo).report);
    }
    nlohmann::json saved = nlohmann::json::array();
    for (const auto& r : reports) saved.push_back(to_json(r));
    write_file(c.out_dir / "report.json", saved.dump(2) + "\n");
    return reports;
}

/// Renders saved report files (each a report object or an array of them).
inline std::string cmd_report(const std::vector<std::filesystem::path>& files, ReportFormat format) {
    if (files.empty()) throw ConfigError("report needs at least one report file");
    std::vector<AccuracyReport> reports;
    for (const auto& f : files) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(f));
            if (j.is_array()) {
                for (const auto& r : j) reports.push_back(accuracy_report_from_json(r));
            } else {
                reports.push_back(accuracy_report_from_json(j));
            }
        } catch (const IoError&) {
            throw;
        } catch (const std::exception& e) {
            throw DataError(f, 1, e.what());
        }
    }
    if (reports.empty()) throw DataError(files.front(), 1, "no reports found");
    return render_report(reports, format);
}

}  // namespace toolforge
