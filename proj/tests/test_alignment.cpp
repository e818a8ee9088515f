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

#include <cmath>
#include <set>

#include "test_support.hpp"
#include "toolforge/alignment.hpp"

namespace tf = toolforge;
using tf::testing::Rng;

namespace {

tf::ToolCall call(const char* text) { return tf::parse_invocation(std::string("[") + text + "]").at(0); }
tf::InvocationSequence seq(const char* text) { return tf::parse_invocation(text); }

std::vector<std::vector<double>> rows_of(const tf::SimilarityMatrix& s) {
    std::vector<std::vector<double>> out(s.rows(), std::vector<double>(s.cols()));
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t j = 0; j < s.cols(); ++j) out[i][j] = s(i, j);
    return out;
}

tf::SimilarityMatrix random_matrix(Rng& rng, std::size_t m, std::size_t n, bool sparse) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    tf::SimilarityMatrix s(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) s(i, j) = (sparse && rng() % 2) ? 0.0 : u(rng);
    return s;
}

void expect_valid_matching(const tf::SimilarityMatrix& s, const tf::Matching& m) {
    std::set<std::size_t> rows, cols;
    for (std::size_t k = 0; k < m.size(); ++k) {
        const auto [i, j] = m[k];
        ASSERT_LT(i, s.rows());
        ASSERT_LT(j, s.cols());
        EXPECT_TRUE(rows.insert(i).second) << "row reused";
        EXPECT_TRUE(cols.insert(j).second) << "column reused";
        EXPECT_GT(s(i, j), 0.0) << "zero pair reported";
        if (k) {
            EXPECT_LT(m[k - 1].first, i) << "pairs not sorted by row";
        }
    }
}

}  // namespace

TEST(PairScore, Examples) {
    EXPECT_EQ(tf::pair_score(call("f(x=1, y=2)"), call("f(y=2, x=1)")), 1.0);
    EXPECT_EQ(tf::pair_score(call("f(x=1, y=2)"), call("g(x=1, y=2)")), 0.0);
    EXPECT_EQ(tf::pair_score(call("f(x=1, y=2)"), call("f(x=1, y=3)")), 1.0 / 3.0);
    EXPECT_EQ(tf::pair_score(call("f()"), call("f()")), 1.0);
}

TEST(PairScore, MissingAndExtraArguments) {
    EXPECT_EQ(tf::pair_score(call("f(x=1, y=2)"), call("f(x=1)")), 0.5);
    EXPECT_EQ(tf::pair_score(call("f(x=1)"), call("f(x=1, z=3)")), 0.5);
    EXPECT_EQ(tf::pair_score(call("f()"), call("f(x=1)")), 0.0);
    EXPECT_EQ(tf::pair_score(call("f(x=1)"), call("f(x=1.0)")), 1.0);
    EXPECT_EQ(tf::pair_score(call("f(s=\"Paris\")"), call("f(s=\"paris\")")), 0.0);
}

TEST(PairScore, MatchesSetEnumerationOracle) {
    Rng rng(11);
    for (int t = 0; t < 5000; ++t) {
        const auto a = tf::testing::small_call(rng);
        const auto b = tf::testing::small_call(rng);
        EXPECT_EQ(tf::pair_score(a, b), tf::testing::brute_force_pair_score(a, b))
            << tf::serialize_call(a) << " vs " << tf::serialize_call(b);
    }
}

TEST(BuildMatrix, Examples) {
    EXPECT_TRUE(tf::build_matrix({}, seq("[f()]")).empty());
    EXPECT_TRUE(tf::build_matrix(seq("[f()]"), {}).empty());

    const auto z = tf::build_matrix(seq("[a(), b()]"), seq("[c(), d()]"));
    ASSERT_EQ(z.rows(), 2u);
    ASSERT_EQ(z.cols(), 2u);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(z(i, j), 0.0);

    const auto s = tf::build_matrix(seq("[f(x=1), g(y=2)]"), seq("[g(y=2)]"));
    ASSERT_EQ(s.rows(), 2u);
    ASSERT_EQ(s.cols(), 1u);
    EXPECT_EQ(s(0, 0), 0.0);
    EXPECT_EQ(s(1, 0), 1.0);
}

TEST(Matching, Examples) {
    EXPECT_TRUE(tf::optimal_matching(tf::SimilarityMatrix()).empty());
    tf::SimilarityMatrix id(2, 2);
    id(0, 0) = 1.0;
    id(1, 1) = 1.0;
    EXPECT_EQ(tf::optimal_matching(id), (tf::Matching{{0, 0}, {1, 1}}));

    // greedy would take (0,0)=0.9 and leave 0.1; optimum is 0.8 + 0.8
    tf::SimilarityMatrix trap(2, 2);
    trap(0, 0) = 0.9;
    trap(0, 1) = 0.8;
    trap(1, 0) = 0.8;
    trap(1, 1) = 0.1;
    EXPECT_EQ(tf::optimal_matching(trap), (tf::Matching{{0, 1}, {1, 0}}));
}

TEST(Matching, TiesResolveToSmallestColumns) {
    tf::SimilarityMatrix s(2, 3, 0.5);
    EXPECT_EQ(tf::optimal_matching(s), (tf::Matching{{0, 0}, {1, 1}}));
    tf::SimilarityMatrix t(3, 2, 1.0);
    EXPECT_EQ(tf::optimal_matching(t), (tf::Matching{{0, 0}, {1, 1}}));
}

TEST(Matching, AllZeroMatrixGivesEmptyMatching) {
    EXPECT_TRUE(tf::optimal_matching(tf::SimilarityMatrix(3, 4)).empty());
}

TEST(Matching, ThreeByThreeAgainstPermutationOracle) {
    Rng rng(33);
    for (int t = 0; t < 300; ++t) {
        const auto s = random_matrix(rng, 3, 3, false);
        const auto m = tf::optimal_matching(s);
        expect_valid_matching(s, m);
        EXPECT_EQ(tf::matching_total(s, m), tf::testing::brute_force_max_matching(rows_of(s)));
    }
}

TEST(Matching, RectangularAndSparseAgainstOracle) {
    Rng rng(34);
    for (int t = 0; t < 400; ++t) {
        const std::size_t m = rng() % 7, n = rng() % 7;
        const auto s = random_matrix(rng, m, n, t % 2 == 0);
        const auto match = tf::optimal_matching(s);
        expect_valid_matching(s, match);
        EXPECT_NEAR(tf::matching_total(s, match), tf::testing::brute_force_max_matching(rows_of(s)), 1e-12);
    }
}

TEST(Matching, DiscreteScoresAgainstOracle) {
    // scores from real call pairs, full of ties
    Rng rng(35);
    for (int t = 0; t < 500; ++t) {
        tf::InvocationSequence a, b;
        for (std::size_t i = 0, n = rng() % 6; i < n; ++i) a.push_back(tf::testing::small_call(rng));
        for (std::size_t i = 0, n = rng() % 6; i < n; ++i) b.push_back(tf::testing::small_call(rng));
        const auto s = tf::build_matrix(a, b);
        const auto match = tf::optimal_matching(s);
        expect_valid_matching(s, match);
        EXPECT_NEAR(tf::matching_total(s, match), tf::testing::brute_force_max_matching(rows_of(s)), 1e-12);
        EXPECT_EQ(tf::optimal_matching(s), match) << "not deterministic";
    }
}

TEST(Overlap, Examples) {
    EXPECT_EQ(tf::overlap(seq("[f(x=1), g(y=2)]"), seq("[f(x=1), g(y=2)]")), 1.0);
    EXPECT_EQ(tf::overlap(seq("[f(x=1), g(y=2)]"), seq("[g(y=2)]")), 0.5);
    EXPECT_EQ(tf::overlap(seq("[f(x=1), g(y=2)]"), seq("[h(x=1), k(y=2)]")), 0.0);
    EXPECT_EQ(tf::overlap(seq("[]"), seq("[]")), 1.0);
    EXPECT_EQ(tf::overlap(seq("[]"), seq("[f()]")), 0.0);
    EXPECT_EQ(tf::overlap(seq("[f()]"), seq("[]")), 0.0);
}

TEST(Overlap, OrderInsensitiveAndPenalisesExtras) {
    EXPECT_EQ(tf::overlap(seq("[f(x=1), g(y=2)]"), seq("[g(y=2), f(x=1)]")), 1.0);
    EXPECT_EQ(tf::overlap(seq("[f(x=1)]"), seq("[f(x=1), f(x=1)]")), 0.5);
    EXPECT_EQ(tf::overlap(seq("[f(x=1), f(x=1)]"), seq("[f(x=1)]")), 0.5);
    EXPECT_EQ(tf::overlap(seq("[f(x=1, y=2)]"), seq("[f(x=1, y=3)]")), 1.0 / 3.0);
}

TEST(Overlap, PropertiesOnFuzzedPairs) {
    Rng rng(36);
    for (int t = 0; t < 3000; ++t) {
        const auto [a, b] = tf::testing::related_pair(rng);
        const double ab = tf::overlap(a, b);
        const double ba = tf::overlap(b, a);
        EXPECT_GE(ab, 0.0);
        EXPECT_LE(ab, 1.0);
        EXPECT_NEAR(ab, ba, 1e-12);
        EXPECT_EQ(ab == 1.0, tf::testing::multiset_equal(a, b)) << tf::serialize_invocation(a) << " vs "
                                                                 << tf::serialize_invocation(b);
    }
}

TEST(Overlap, MonotoneInArgumentAgreement) {
    // fixing one more argument never lowers the score
    Rng rng(37);
    for (int t = 0; t < 500; ++t) {
        auto ref = tf::testing::small_call(rng);
        ref.arguments["x"] = tf::ParamValue(std::int64_t{1});
        auto pred = ref;
        pred.arguments["x"] = tf::ParamValue(std::int64_t{2});
        EXPECT_LE(tf::overlap({ref}, {pred}), tf::overlap({ref}, {ref}));
        EXPECT_LT(tf::overlap({ref}, {pred}), 1.0);
    }
}
