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

#include <filesystem>

#include "test_support.hpp"
#include "toolforge/eval.hpp"

namespace tf = toolforge;
namespace fs = std::filesystem;

namespace {

const fs::path kData = TOOLFORGE_TEST_DATA;

tf::ScriptedModel mini_backend() {
    return tf::ScriptedModel::from_json(nlohmann::json::parse(tf::read_file(kData / "mini_backend.json")));
}

// Always answers with the first reference of whichever case it is asked.
class OracleModel final : public tf::ModelBackend {
public:
    explicit OracleModel(const std::vector<tf::BenchmarkCase>& cases) {
        for (const auto& c : cases) answers_[c.query] = tf::serialize_invocation(c.references.front());
    }
    std::vector<std::string> generate(const tf::Conversation& conv, const tf::GenerationParams& p) override {
        return std::vector<std::string>(p.n, answers_.at(conv.at(1).content));
    }
    bool share_safe() const noexcept override { return true; }

private:
    std::map<std::string, std::string> answers_;
};

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

const char* kGoodLine =
    R"({"id": "a", "category": "simple", "query": "q", "tools": [{"name": "f"}], "references": ["[f(x=1)]"]})";

}  // namespace

TEST(LoadBenchmark, EmptyAndSingleLine) {
    TempDir dir("toolforge_eval_load");
    tf::write_file(dir.path / "empty.jsonl", "");
    EXPECT_TRUE(tf::load_benchmark(dir.path / "empty.jsonl").empty());
    tf::write_file(dir.path / "one.jsonl", std::string(kGoodLine) + "\n");
    const auto cases = tf::load_benchmark(dir.path / "one.jsonl");
    ASSERT_EQ(cases.size(), 1u);
    EXPECT_EQ(cases[0].id, "a");
    EXPECT_EQ(cases[0].category, "simple");
    ASSERT_EQ(cases[0].references.size(), 1u);
    EXPECT_EQ(tf::serialize_invocation(cases[0].references[0]), "[f(x=1)]");
}

TEST(LoadBenchmark, ErrorsNameTheLine) {
    TempDir dir("toolforge_eval_errors");
    const std::string bad_ref =
        R"({"id": "b", "query": "q", "tools": [], "references": ["[f(x=1]"]})";
    const std::vector<std::pair<std::string, std::size_t>> files = {
        {std::string(kGoodLine) + "\n\n" + bad_ref + "\n", 3},
        {std::string(kGoodLine) + "\n{not json\n", 2},
        {R"({"id": "c", "query": "q", "tools": [], "references": []})" "\n", 1},
        {R"({"id": "c", "tools": [], "references": ["[]"]})" "\n", 1},
        {std::string(kGoodLine) + "\n" + kGoodLine + "\n", 2},
    };
    for (std::size_t i = 0; i < files.size(); ++i) {
        const auto path = dir.path / ("bad" + std::to_string(i) + ".jsonl");
        tf::write_file(path, files[i].first);
        try {
            (void)tf::load_benchmark(path);
            ADD_FAILURE() << "file " << i << " loaded";
        } catch (const tf::DataError& e) {
            EXPECT_EQ(e.line(), files[i].second) << e.what();
            EXPECT_NE(std::string(e.what()).find(":" + std::to_string(files[i].second) + ":"), std::string::npos);
        }
    }
    EXPECT_THROW(tf::load_benchmark(dir.path / "nope.jsonl"), tf::IoError);
}

TEST(Judge, Examples) {
    const auto ref = tf::parse_invocation(R"([f(x=1), g(y="a")])");
    EXPECT_TRUE(tf::judge(tf::parse_invocation(R"([g(y="a"), f(x=1)])"), {ref}));
    EXPECT_FALSE(tf::judge(tf::parse_invocation(R"([f(x=1)])"), {ref}));
    EXPECT_FALSE(tf::judge(tf::parse_invocation(R"([f(x=1), g(y="a"), g(y="a")])"), {ref}));
    // any of several references may match
    EXPECT_TRUE(tf::judge(tf::parse_invocation("[h()]"), {ref, tf::parse_invocation("[h()]")}));
    EXPECT_FALSE(tf::judge_text("f(x=1)", {ref}));
}

TEST(InferenceModeNames, ParseAndPrint) {
    EXPECT_EQ(tf::InferenceMode::parse("direct").name(), "direct");
    EXPECT_EQ(tf::InferenceMode::parse("adaptive").name(), "adaptive:5");
    EXPECT_EQ(tf::InferenceMode::parse("adaptive:3").name(), "adaptive:3");
    EXPECT_EQ(tf::InferenceMode::parse("vanilla:0").name(), "vanilla:0");
    EXPECT_EQ(tf::InferenceMode::parse("consistency", 4).name(), "consistency:4");
    for (const char* bad : {"adaptive:0", "adaptive:x", "direct:2", "beam", "vanilla:-1"})
        EXPECT_THROW(tf::InferenceMode::parse(bad), std::invalid_argument) << bad;
}

TEST(Evaluate, OracleBackendIsPerfectInEveryMode) {
    const auto cases = tf::load_benchmark(kData / "mini_benchmark.jsonl");
    OracleModel oracle(cases);
    for (const char* mode : {"direct", "adaptive", "vanilla:2", "consistency:3"}) {
        const auto r = tf::evaluate(oracle, cases, tf::InferenceMode::parse(mode));
        EXPECT_EQ(r.report.overall(), 1.0) << mode;
        EXPECT_EQ(r.report.errors, 0u);
    }
    const auto adaptive = tf::evaluate(oracle, cases, tf::InferenceMode::adaptive());
    ASSERT_TRUE(adaptive.report.mean_iterations.has_value());
    EXPECT_EQ(*adaptive.report.mean_iterations, 1.0);
}

TEST(Evaluate, MiniBenchmarkMatchesHandGrade) {
    const auto cases = tf::load_benchmark(kData / "mini_benchmark.jsonl");
    ASSERT_EQ(cases.size(), 20u);
    auto model = mini_backend();

    const auto direct = tf::evaluate(model, cases, tf::InferenceMode::direct()).report;
    EXPECT_EQ(direct.overall(), 0.75);
    EXPECT_EQ(direct.correct, 15u);
    EXPECT_EQ(direct.categories.at("simple").correct, 4u);
    EXPECT_EQ(direct.categories.at("multiple").correct, 4u);
    EXPECT_EQ(direct.categories.at("parallel").correct, 3u);
    EXPECT_EQ(direct.categories.at("multiple_parallel").correct, 4u);
    for (const auto& [_, c] : direct.categories) EXPECT_EQ(c.total, 5u);
    EXPECT_FALSE(direct.mean_iterations.has_value());

    const auto adaptive = tf::evaluate(model, cases, tf::InferenceMode::adaptive());
    EXPECT_EQ(adaptive.report.correct, 17u);
    EXPECT_EQ(adaptive.report.categories.at("simple").correct, 5u);
    EXPECT_EQ(adaptive.report.categories.at("parallel").correct, 4u);
    ASSERT_TRUE(adaptive.report.mean_iterations.has_value());
    EXPECT_EQ(*adaptive.report.mean_iterations, 26.0 / 20.0);
    std::map<std::string, int> iters;
    for (const auto& c : adaptive.cases) iters[c.id] = c.trace.iterations_used;
    EXPECT_EQ(iters.at("m03"), 2);
    EXPECT_EQ(iters.at("m05"), 1);
    EXPECT_EQ(iters.at("m12"), 2);
    EXPECT_EQ(iters.at("m15"), 5);

    EXPECT_EQ(tf::evaluate(model, cases, tf::InferenceMode::vanilla(1)).report.correct, 17u);
    EXPECT_EQ(tf::evaluate(model, cases, tf::InferenceMode::vanilla(0)).report.correct, 15u);
    EXPECT_EQ(tf::evaluate(model, cases, tf::InferenceMode::consistency(5)).report.correct, 17u);
}

TEST(Evaluate, BackendErrorsCountAsIncorrect) {
    const auto cases = tf::load_benchmark(kData / "mini_benchmark.jsonl");
    tf::testing::FailingModel failing;
    const auto r = tf::evaluate(failing, cases, tf::InferenceMode::adaptive());
    EXPECT_EQ(r.report.correct, 0u);
    EXPECT_EQ(r.report.total, 20u);
    EXPECT_EQ(r.report.errors, 20u);
    EXPECT_FALSE(r.report.mean_iterations.has_value());
    EXPECT_FALSE(r.cases[0].error.empty());
    EXPECT_EQ(tf::prediction_to_json(r.cases[0])["error"], r.cases[0].error);
}

TEST(Evaluate, SequentialAndParallelAgree) {
    const auto cases = tf::load_benchmark(kData / "mini_benchmark.jsonl");
    auto model = mini_backend();
    tf::EvalOptions one;
    one.parallel = 1;
    const auto a = tf::evaluate(model, cases, tf::InferenceMode::adaptive(), one);
    const auto b = tf::evaluate(model, cases, tf::InferenceMode::adaptive());
    EXPECT_EQ(tf::to_json(a.report), tf::to_json(b.report));
    for (std::size_t i = 0; i < cases.size(); ++i) EXPECT_EQ(a.cases[i].final_answer, b.cases[i].final_answer);
}

TEST(EvaluatePredictions, MissingCountsAsError) {
    const auto cases = tf::load_benchmark(kData / "mini_benchmark.jsonl");
    std::map<std::string, std::string> preds;
    for (const auto& c : cases) preds[c.id] = tf::serialize_invocation(c.references[0]);
    preds.erase("m01");
    preds["m02"] = "garbage";
    const auto r = tf::evaluate_predictions(cases, preds);
    EXPECT_EQ(r.correct, 18u);
    EXPECT_EQ(r.errors, 1u);
}

TEST(Report, JsonAndTable) {
    tf::AccuracyReport a;
    a.mode = "direct";
    a.add("simple", true);
    a.add("simple", false);
    a.add("parallel", true);
    tf::AccuracyReport b = a;
    b.mode = "adaptive:5";
    b.mean_iterations = 1.5;

    const auto single = nlohmann::json::parse(tf::render_report({a}, tf::ReportFormat::json));
    ASSERT_TRUE(single.is_object());
    EXPECT_EQ(single["categories"]["simple"]["correct"], 1);
    EXPECT_EQ(single["categories"]["parallel"]["accuracy"], 1.0);
    EXPECT_TRUE(single["mean_iterations"].is_null());
    EXPECT_TRUE(nlohmann::json::parse(tf::render_report({a, b}, tf::ReportFormat::json)).is_array());

    const std::string table = tf::render_report({a, b}, tf::ReportFormat::table);
    EXPECT_EQ(table,
              "category               direct    adaptive:5\n"
              "parallel         1.0000 (1/1)  1.0000 (1/1)\n"
              "simple           0.5000 (1/2)  0.5000 (1/2)\n"
              "overall          0.6667 (2/3)  0.6667 (2/3)\n"
              "mean_iterations             -        1.5000\n"
              "errors                      0             0\n");
    EXPECT_EQ(tf::render_report({a, b}, tf::ReportFormat::table), table);
    EXPECT_THROW(tf::render_report({}, tf::ReportFormat::table), std::invalid_argument);
}

TEST(Report, JsonRoundTrip) {
    const auto cases = tf::load_benchmark(kData / "mini_benchmark.jsonl");
    auto model = mini_backend();
    const auto r = tf::evaluate(model, cases, tf::InferenceMode::adaptive()).report;
    const auto back = tf::accuracy_report_from_json(tf::to_json(r));
    EXPECT_EQ(tf::to_json(back), tf::to_json(r));
}
