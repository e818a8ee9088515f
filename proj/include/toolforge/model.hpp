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
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "toolforge/conversation.hpp"

namespace toolforge {

struct GenerationParams {
    double temperature = 0.0;
    int n = 1;
    std::optional<int> max_output_tokens;
    std::vector<std::string> stop;
    // Distinguishes otherwise identical requests for backends with seeded
    // sampling; ignored by remote endpoints.
    std::uint64_t request_seed = 0;

    void validate() const {
        if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
        if (n < 1) throw std::invalid_argument("n must be >= 1");
    }
};

class BackendError : public std::runtime_error {
public:
    enum class Kind { http_status, timeout, transport, malformed_response, config, other };

    BackendError(Kind kind, std::string message, int status = 0)
        : std::runtime_error(std::move(message)), kind_(kind), status_(status) {}

    Kind kind() const noexcept { return kind_; }
    int status() const noexcept { return status_; }

private:
    Kind kind_;
    int status_;
};

/// A text generator over chat conversations. Implementations must return
/// identical output for identical input at temperature 0.
class ModelBackend {
public:
    virtual ~ModelBackend() = default;

    virtual std::vector<std::string> generate(const Conversation& conversation, const GenerationParams& params) = 0;

    /// True when generate may be called concurrently from several threads.
    virtual bool share_safe() const noexcept { return false; }

    std::string generate_one(const Conversation& conversation, const GenerationParams& params) {
        GenerationParams p = params;
        p.n = 1;
        auto out = generate(conversation, p);
        if (out.empty()) throw BackendError(BackendError::Kind::malformed_response, "backend returned no output");
        return std::move(out.front());
    }
};

using BackendPtr = std::shared_ptr<ModelBackend>;

namespace detail {

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a_u64(std::uint64_t h, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
        h ^= (x >> (8 * i)) & 0xFF;
        h *= kFnvPrime;
    }
    return h;
}

// splitmix64 finaliser
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Stable hash of every non-system message (role and content) plus their count.
/// System prompts are excluded so scripts survive prompt-template changes.
inline std::uint64_t conversation_fingerprint(const Conversation& conversation) {
    std::uint64_t h = detail::kFnvOffset;
    std::uint64_t count = 0;
    for (const auto& m : conversation) {
        if (m.role == Role::system) continue;
        ++count;
        h = detail::fnv1a(h, role_name(m.role));
        h = detail::fnv1a_u64(h, m.content.size());
        h = detail::fnv1a(h, m.content);
    }
    return detail::fnv1a_u64(h, count);
}

struct ScriptedOutput {
    std::string text;
    double weight = 1.0;
    bool correct = false;
};

struct ScriptedBehavior {
    std::vector<ScriptedOutput> outputs;
};

/// Table-driven, seeded generator standing in for a trained checkpoint.
///
/// Each conversation fingerprint maps to a weighted output distribution.
/// The capability level c moves probability mass onto the outputs flagged
/// correct: P(correct) = p0 + c * (1 - p0), where p0 is the table's own
/// correct mass, so c = 0 keeps the table as written and c = 1 always answers
/// correctly. Draws are a pure function of (seed, fingerprint, request_seed).
class ScriptedModel final : public ModelBackend {
public:
    enum class Fallback { fixed_text, echo_last_answer };

    ScriptedModel() = default;
    explicit ScriptedModel(std::uint64_t seed, double capability = 0.0) : seed_(seed) { set_capability(capability); }

    void script(std::uint64_t fingerprint, ScriptedBehavior behavior) {
        if (behavior.outputs.empty()) throw std::invalid_argument("scripted behavior needs at least one output");
        for (const auto& o : behavior.outputs)
            if (!(o.weight >= 0.0)) throw std::invalid_argument("scripted output weight must be >= 0");
        table_[fingerprint] = std::move(behavior);
    }
    void script(const Conversation& conversation, ScriptedBehavior behavior) {
        script(conversation_fingerprint(conversation), std::move(behavior));
    }
    /// Deterministic single answer for this conversation.
    void script(const Conversation& conversation, std::string text, bool correct = true) {
        script(conversation, ScriptedBehavior{{ScriptedOutput{std::move(text), 1.0, correct}}});
    }

    void set_fallback(Fallback mode, std::string text = {}) {
        fallback_ = mode;
        fallback_text_ = std::move(text);
    }
    void set_capability(double c) {
        if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("capability must lie in [0, 1]");
        capability_ = c;
    }
    double capability() const noexcept { return capability_; }
    std::uint64_t seed() const noexcept { return seed_; }
    void set_seed(std::uint64_t seed) noexcept { seed_ = seed; }
    std::size_t table_size() const noexcept { return table_.size(); }

    bool share_safe() const noexcept override { return true; }

    std::vector<std::string> generate(const Conversation& conversation, const GenerationParams& params) override {
        params.validate();
        const std::uint64_t fp = conversation_fingerprint(conversation);
        const auto it = table_.find(fp);
        if (it == table_.end()) return std::vector<std::string>(params.n, fallback_output(conversation));

        const auto& outputs = it->second.outputs;
        const std::vector<double> probs = effective_probabilities(outputs, params.temperature);
        std::vector<std::string> result;
        result.reserve(params.n);
        if (params.temperature == 0.0) {
            const auto modal = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
            result.assign(params.n, outputs[modal].text);
            return result;
        }
        // Correct outputs first in the cumulative order, so raising the
        // capability only ever turns a given draw from wrong to right.
        std::vector<std::size_t> order(outputs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_partition(order.begin(), order.end(), [&](std::size_t i) { return outputs[i].correct; });

        std::mt19937_64 rng(detail::mix64(detail::mix64(seed_ ^ fp) ^ params.request_seed));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int draw = 0; draw < params.n; ++draw) {
            const double u = unit(rng);
            double acc = 0.0;
            std::size_t pick = order.back();
            for (std::size_t idx : order) {
                if (probs[idx] <= 0.0) continue;
                acc += probs[idx];
                if (u < acc) {
                    pick = idx;
                    break;
                }
                pick = idx;
            }
            result.push_back(outputs[pick].text);
        }
        return result;
    }

    /// Probabilities after applying capability then temperature.
    std::vector<double> effective_probabilities(const std::vector<ScriptedOutput>& outputs, double temperature) const {
        double correct_mass = 0.0, wrong_mass = 0.0;
        std::size_t correct_count = 0;
        for (const auto& o : outputs) {
            if (o.correct) {
                correct_mass += o.weight;
                ++correct_count;
            } else {
                wrong_mass += o.weight;
            }
        }
        std::vector<double> p(outputs.size(), 0.0);
        const double total = correct_mass + wrong_mass;
        const double p0 = total > 0.0 ? correct_mass / total : 0.0;
        double target = p0 + capability_ * (1.0 - p0);
        if (correct_count == 0) target = 0.0;
        if (wrong_mass <= 0.0 && correct_count > 0) target = 1.0;
        for (std::size_t i = 0; i < outputs.size(); ++i) {
            const double w = outputs[i].weight;
            if (outputs[i].correct) {
                p[i] = correct_mass > 0.0 ? target * w / correct_mass : target / static_cast<double>(correct_count);
            } else if (wrong_mass > 0.0) {
                p[i] = (1.0 - target) * w / wrong_mass;
            }
        }
        if (correct_count == 0 && wrong_mass <= 0.0) {
            std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(outputs.size()));
        }
        if (temperature > 0.0 && temperature != 1.0) {
            double z = 0.0;
            for (auto& x : p) {
                x = x > 0.0 ? std::pow(x, 1.0 / temperature) : 0.0;
                z += x;
            }
            if (z > 0.0)
                for (auto& x : p) x /= z;
        }
        return p;
    }

    /// Loads `{"seed", "capability", "fallback": {"mode", "text"}, "table": [...]}`
    /// where each table entry is `{"messages": [{"role","content"}...] | "fingerprint",
    /// "outputs": [{"text","weight","correct"}...]}`.
    static ScriptedModel from_json(const nlohmann::json& j) {
        ScriptedModel m(j.value("seed", std::uint64_t{0}), j.value("capability", 0.0));
        if (j.contains("fallback")) {
            const auto& f = j["fallback"];
            const std::string mode = f.value("mode", std::string("fixed_text"));
            if (mode == "echo_last_answer") {
                m.set_fallback(Fallback::echo_last_answer, f.value("text", std::string()));
            } else if (mode == "fixed_text") {
                m.set_fallback(Fallback::fixed_text, f.value("text", std::string()));
            } else {
                throw std::invalid_argument("unknown scripted fallback mode '" + mode + "'");
            }
        }
        if (j.contains("table")) {
            for (const auto& entry : j["table"]) {
                ScriptedBehavior b;
                for (const auto& o : entry.at("outputs"))
                    b.outputs.push_back(ScriptedOutput{o.at("text").get<std::string>(), o.value("weight", 1.0),
                                                       o.value("correct", false)});
                if (entry.contains("fingerprint")) {
                    m.script(entry["fingerprint"].get<std::uint64_t>(), std::move(b));
                } else {
                    Conversation conv;
                    for (const auto& msg : entry.at("messages"))
                        conv.push_back(ChatMessage{role_from_name(msg.at("role").get<std::string>()),
                                                   msg.at("content").get<std::string>(), false});
                    m.script(conv, std::move(b));
                }
            }
        }
        return m;
    }

private:
    std::string fallback_output(const Conversation& conversation) const {
        if (fallback_ == Fallback::echo_last_answer) {
            for (auto it = conversation.rbegin(); it != conversation.rend(); ++it)
                if (it->role == Role::assistant) return it->content;
        }
        return fallback_text_;
    }

    std::unordered_map<std::uint64_t, ScriptedBehavior> table_;
    std::uint64_t seed_ = 0;
    double capability_ = 0.0;
    Fallback fallback_ = Fallback::fixed_text;
    std::string fallback_text_;
};

}  // namespace toolforge
