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

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "toolforge/pipeline.hpp"

namespace fs = std::filesystem;
using namespace toolforge;

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string backend;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<int> k;
    std::optional<double> temperature;
    std::optional<int> max_iters;
    std::optional<int> iteration_cap;
    std::string mode;
    std::string out_dir;
    std::optional<std::size_t> parallel;
    std::string pool;
    std::string benchmark;
    std::string dev;
    std::string difficulty;
    std::string predictions;
    std::string trainer;
    std::string refine_prompt;
    std::string format;
    std::vector<std::string> report_files;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "Pipeline config (JSON)");
    cmd->add_option("--seed", f.seed, "Sampling seed");
    cmd->add_option("--backend", f.backend, "Backend config (JSON)");
    cmd->add_option("--alpha", f.alpha, "Lower difficulty bound (exclusive)");
    cmd->add_option("--beta", f.beta, "Upper difficulty bound (exclusive)");
    cmd->add_option("--k", f.k, "Attempts per sample for difficulty");
    cmd->add_option("--temperature", f.temperature, "Sampling temperature for difficulty");
    cmd->add_option("--max-iters", f.max_iters, "Maximum refinement iterations at inference");
    cmd->add_option("--mode", f.mode, "direct | adaptive[:n] | vanilla:i | consistency[:n], comma-separated for eval");
    cmd->add_option("--out-dir", f.out_dir, "Output directory");
    cmd->add_option("--parallel", f.parallel, "Maximum concurrent requests");
    cmd->add_option("--refine-prompt", f.refine_prompt, "Override the refine prompt");
    cmd->add_option("--format", f.format, "table | json");
}

PipelineConfig build_config(const Flags& f) {
    PipelineConfig c = f.config.empty() ? PipelineConfig{} : load_pipeline_config(f.config);
    if (!f.backend.empty()) c.backend = load_backend_spec(f.backend);
    if (f.seed) c.seed = *f.seed;
    if (f.alpha) c.selection.alpha = *f.alpha;
    if (f.beta) c.selection.beta = *f.beta;
    if (f.k) c.difficulty.k = *f.k;
    if (f.temperature) c.difficulty.temperature = *f.temperature;
    if (f.max_iters) c.max_iters = *f.max_iters;
    if (f.iteration_cap) c.iteration_cap = *f.iteration_cap;
    if (!f.mode.empty()) c.mode = f.mode;
    if (!f.out_dir.empty()) c.out_dir = f.out_dir;
    if (f.parallel) c.parallel = *f.parallel;
    if (!f.pool.empty()) c.pool = f.pool;
    if (!f.benchmark.empty()) c.benchmark = f.benchmark;
    if (!f.dev.empty()) c.dev = f.dev;
    if (!f.difficulty.empty()) c.difficulty_path = f.difficulty;
    if (!f.predictions.empty()) c.predictions = f.predictions;
    if (!f.trainer.empty()) c.trainer = f.trainer;
    if (!f.refine_prompt.empty()) c.refine_prompt = f.refine_prompt;
    if (!f.format.empty()) c.format = f.format;
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);
    if (ec) throw IoError(c.out_dir, "cannot create output directory: " + ec.message());
    return c;
}

ReportFormat format_of(const PipelineConfig& c) {
    try {
        return report_format_from_name(c.format);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

int run(CLI::App& app, const Flags& f) {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "report") {
        std::vector<fs::path> files(f.report_files.begin(), f.report_files.end());
        std::cout << cmd_report(files, report_format_from_name(f.format.empty() ? "table" : f.format));
        return exit_code::ok;
    }
    const PipelineConfig c = build_config(f);
    if (name == "score") {
        const auto records = cmd_score(c);
        std::cerr << "scored " << records.size() << " samples -> " << (c.out_dir / "difficulty.jsonl").string() << "\n";
    } else if (name == "select") {
        const auto kept = cmd_select(c);
        std::cerr << "selected " << kept << " samples -> " << (c.out_dir / "selected.jsonl").string() << "\n";
    } else if (name == "augment") {
        const auto r = cmd_augment(c);
        std::cerr << "augmented: " << r.samples.size() << " samples (" << r.refinements << " refinement, "
                  << r.identical << " identical, " << r.failures << " failed)\n";
        for (const auto& note : r.failure_notes) std::cerr << "warning: " << note << "\n";
    } else if (name == "iterate") {
        const auto r = cmd_iterate(c);
        for (std::size_t i = 0; i < r.reports.size(); ++i) {
            const auto& rep = r.reports[i];
            std::cerr << "iteration " << rep.iteration << (r.resumed[i] ? " (resumed)" : "") << ": pool "
                      << rep.pool_size << ", selected " << rep.selected << ", " << rep.stop_reason << "\n";
        }
        std::cout << r.final_backend_config.string() << "\n";
    } else if (name == "infer") {
        const auto r = cmd_infer(c);
        std::cout << render_report({r.report}, format_of(c));
    } else if (name == "eval") {
        std::cout << render_report(cmd_eval(c), format_of(c));
    }
    return exit_code::ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model-aware tool-calling data curation and self-refine inference"};
    app.require_subcommand(1);
    Flags f;

    auto* score = app.add_subcommand("score", "Estimate per-sample difficulty");
    add_common(score, f);
    score->add_option("--pool", f.pool, "Pool or training JSONL");

    auto* sel = app.add_subcommand("select", "Keep samples inside the difficulty band");
    add_common(sel, f);
    sel->add_option("--pool", f.pool, "Pool or training JSONL");
    sel->add_option("--difficulty", f.difficulty, "Difficulty JSONL from `score`");

    auto* aug = app.add_subcommand("augment", "Add self-refinement samples");
    add_common(aug, f);
    aug->add_option("--pool", f.pool, "Pool or training JSONL");

    auto* iter = app.add_subcommand("iterate", "Run the iterative curation loop with an external trainer");
    add_common(iter, f);
    iter->add_option("--pool", f.pool, "Pool JSONL");
    iter->add_option("--trainer", f.trainer, "Trainer executable");
    iter->add_option("--dev", f.dev, "Dev benchmark JSONL for the stop rule");
    iter->add_option("--iteration-cap", f.iteration_cap, "Maximum training iterations");

    auto* infer = app.add_subcommand("infer", "Run inference over a benchmark");
    add_common(infer, f);
    infer->add_option("--benchmark", f.benchmark, "Benchmark JSONL");

    auto* ev = app.add_subcommand("eval", "Accuracy of inference modes or a predictions file");
    add_common(ev, f);
    ev->add_option("--benchmark", f.benchmark, "Benchmark JSONL");
    ev->add_option("--predictions", f.predictions, "Predictions JSONL from `infer`");

    auto* rep = app.add_subcommand("report", "Render saved accuracy reports");
    rep->add_option("files", f.report_files, "Report JSON files")->required();
    rep->add_option("--format", f.format, "table | json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_code::ok : exit_code::config;
    }

    try {
        return run(app, f);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_code::config;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_code::io;
    } catch (const DataError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return exit_code::io;
    } catch (const TrainerError& e) {
        std::cerr << "trainer error: " << e.what() << "\n";
        return exit_code::trainer;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return exit_code::backend;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_code::config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::failure;
    }
}
