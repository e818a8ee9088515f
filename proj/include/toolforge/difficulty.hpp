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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolforge/alignment.hpp"
#include "toolforge/jsonl.hpp"
#include "toolforge/model.hpp"
#include "toolforge/parallel.hpp"

namespace toolforge {

struct DifficultyConfig {
    int k = 8;
    double temperature = 1.0;
    std::optional<int> max_output_tokens;
    std::uint64_t seed = 0;
    std::size_t parallel = 8;

    void validate() const {
        if (k < 1) throw std::invalid_argument("difficulty: k must be >= 1");
        if (!(temperature >= 0.0)) throw std::invalid_argument("difficulty: temperature must be >= 0");
    }
};

struct DifficultyRecord {
    std::string sample_id;
    std::vector<std::string> outputs;
    std::vector<double> overlaps;
    double difficulty = 1.0;
    int parse_failures = 0;
};

class EmptyAttempts : public std::invalid_argument {
public:
    EmptyAttempts() : std::invalid_argument("difficulty needs at least one attempt") {}
};

/// 1 - mean(overlaps).
inline double difficulty_from_overlaps(std::span<const double> overlaps) {
    if (overlaps.empty()) throw EmptyAttempts();
    double sum = 0.0;
    for (double o : overlaps) {
        if (!(o >= 0.0 && o <= 1.0)) throw std::invalid_argument("overlap outside [0, 1]");
        sum += o;
    }
    return std::clamp(1.0 - sum / static_cast<double>(overlaps.size()), 0.0, 1.0);
}

/// Per-attempt request seed; attempt l of a run seeded s always draws the same.
inline std::uint64_t attempt_seed(std::uint64_t seed, int attempt) {
    return detail::mix64(seed * 0x100000001B3ull + static_cast<std::uint64_t>(attempt));
}

/// Samples k completions for `context` and scores each against `reference`.
/// Unparseable completions score 0. Any backend failure discards the whole
/// record.
inline DifficultyRecord estimate_difficulty(ModelBackend& backend, const Conversation& context,
                                            const InvocationSequence& reference, const DifficultyConfig& config,
                                            std::string sample_id = {}) {
    config.validate();
    DifficultyRecord rec;
    rec.sample_id = std::move(sample_id);
    const auto k = static_cast<std::size_t>(config.k);
    rec.outputs.resize(k);
    rec.overlaps.resize(k);
    std::vector<char> failed(k, 0);
    const std::size_t limit = backend.share_safe() ? config.parallel : 1;
    parallel_for(k, limit, [&](std::size_t l) {
        GenerationParams p;
        p.temperature = config.temperature;
        p.max_output_tokens = config.max_output_tokens;
        p.request_seed = attempt_seed(config.seed, static_cast<int>(l));
        rec.outputs[l] = backend.generate_one(context, p);
        if (auto parsed = try_parse_invocation(rec.outputs[l])) {
            rec.overlaps[l] = overlap(reference, *parsed);
        } else {
            rec.overlaps[l] = 0.0;
            failed[l] = 1;
        }
    });
    rec.parse_failures = static_cast<int>(std::count(failed.begin(), failed.end(), 1));
    rec.difficulty = difficulty_from_overlaps(rec.overlaps);
    return rec;
}

struct DifficultyTask {
    std::string sample_id;
    Conversation context;
    InvocationSequence reference;
};

/// Scores many samples with at most config.parallel samples in flight. The
/// attempts of one sample run sequentially in that mode.
inline std::vector<DifficultyRecord> estimate_all(ModelBackend& backend, const std::vector<DifficultyTask>& tasks,
                                                  const DifficultyConfig& config) {
    config.validate();
    std::vector<DifficultyRecord> records(tasks.size());
    DifficultyConfig inner = config;
    inner.parallel = 1;
    const std::size_t limit = backend.share_safe() ? config.parallel : 1;
    parallel_for(tasks.size(), limit, [&](std::size_t i) {
        records[i] = estimate_difficulty(backend, tasks[i].context, tasks[i].reference, inner, tasks[i].sample_id);
    });
    return records;
}

inline nlohmann::json to_json(const DifficultyRecord& r) {
    return {{"sample_id", r.sample_id},
            {"overlaps", r.overlaps},
            {"difficulty", r.difficulty},
            {"parse_failures", r.parse_failures}};
}

inline DifficultyRecord difficulty_record_from_json(const nlohmann::json& j) {
    DifficultyRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.overlaps = j.at("overlaps").get<std::vector<double>>();
    r.difficulty = j.at("difficulty").get<double>();
    r.parse_failures = j.value("parse_failures", 0);
    if (!(r.difficulty >= 0.0 && r.difficulty <= 1.0))
        throw std::invalid_argument("difficulty record '" + r.sample_id + "': difficulty outside [0, 1]");
    return r;
}

inline void write_difficulty_jsonl(const std::filesystem::path& path, const std::vector<DifficultyRecord>& records) {
    write_jsonl(path, records, [](const DifficultyRecord& r) { return to_json(r); });
}

inline std::vector<DifficultyRecord> read_difficulty_jsonl(const std::filesystem::path& path) {
    std::vector<DifficultyRecord> out;
    for_each_line(path, [&](std::size_t, const std::string& line) {
        out.push_back(difficulty_record_from_json(nlohmann::json::parse(line)));
    });
    return out;
}

}  // namespace toolforge
