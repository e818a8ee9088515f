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
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "toolforge/invocation.hpp"

namespace toolforge {

/// Jaccard overlap of two calls' (name, value) argument sets; 0 when the tool
/// names differ. A same-name argument with a different value counts once on
/// each side of the union. Two argumentless calls to the same tool score 1.
inline double pair_score(const ToolCall& ref, const ToolCall& pred) {
    if (ref.tool_name != pred.tool_name) return 0.0;
    std::size_t matched = 0;
    for (const auto& [name, value] : ref.arguments) {
        const auto it = pred.arguments.find(name);
        if (it != pred.arguments.end() && values_equal(value, it->second)) ++matched;
    }
    const std::size_t united = ref.arguments.size() + pred.arguments.size() - matched;
    if (united == 0) return 1.0;
    return static_cast<double>(matched) / static_cast<double>(united);
}

/// Row-major rows x cols matrix of scores in [0, 1].
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    SimilarityMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    SimilarityMatrix transposed() const {
        SimilarityMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline SimilarityMatrix build_matrix(const InvocationSequence& reference, const InvocationSequence& prediction) {
    SimilarityMatrix s(reference.size(), prediction.size());
    for (std::size_t i = 0; i < reference.size(); ++i)
        for (std::size_t j = 0; j < prediction.size(); ++j) s(i, j) = pair_score(reference[i], prediction[j]);
    return s;
}

/// 0-based (row, col) pairs, sorted by row. One-to-one on both sides.
using Matching = std::vector<std::pair<std::size_t, std::size_t>>;

/// Sum of matched scores, accumulated in pair order.
inline double matching_total(const SimilarityMatrix& s, const Matching& m) {
    double total = 0.0;
    for (const auto& [i, j] : m) total += s(i, j);
    return total;
}

namespace detail {

// Minimum-cost perfect assignment on a square n x n cost matrix (row-major),
// O(n^3) shortest augmenting path with potentials. Returns col_of_row.
inline std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t n) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    // 1-based internally; index 0 is the virtual source.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> row_of_col(n + 1, 0), way(n + 1, 0);
    for (std::size_t row = 1; row <= n; ++row) {
        row_of_col[0] = row;
        std::size_t col0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[col0] = 1;
            const std::size_t i0 = row_of_col[col0];
            double delta = inf;
            std::size_t col1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = col0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    col1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
        } while (row_of_col[col0] != 0);
        do {
            const std::size_t col1 = way[col0];
            row_of_col[col0] = row_of_col[col1];
            col0 = col1;
        } while (col0 != 0);
    }
    std::vector<std::size_t> col_of_row(n, 0);
    for (std::size_t j = 1; j <= n; ++j) col_of_row[row_of_col[j] - 1] = j - 1;
    return col_of_row;
}

// Maximum-weight matching value of the submatrix left after removing the
// masked rows/cols, via zero-padding to a square minimisation problem.
inline double max_weight(const SimilarityMatrix& s, const std::vector<char>& row_gone,
                         const std::vector<char>& col_gone) {
    std::vector<std::size_t> rows, cols;
    for (std::size_t i = 0; i < s.rows(); ++i)
        if (!row_gone[i]) rows.push_back(i);
    for (std::size_t j = 0; j < s.cols(); ++j)
        if (!col_gone[j]) cols.push_back(j);
    if (rows.empty() || cols.empty()) return 0.0;
    const std::size_t n = std::max(rows.size(), cols.size());
    std::vector<double> cost(n * n, 0.0);
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = 0; b < cols.size(); ++b) cost[a * n + b] = -s(rows[a], cols[b]);
    const auto assign = solve_assignment(cost, n);
    double total = 0.0;
    for (std::size_t a = 0; a < rows.size(); ++a)
        if (assign[a] < cols.size()) total += s(rows[a], cols[assign[a]]);
    return total;
}

}  // namespace detail

/// Tolerance used when deciding whether two assignment totals tie.
inline constexpr double kMatchingTieTolerance = 1e-9;

/// Maximum-total one-to-one matching over the matrix. Among optimal matchings
/// the lexicographically smallest set of positive-score pairs is returned;
/// zero-score pairs are left out since they contribute nothing.
inline Matching optimal_matching(const SimilarityMatrix& s) {
    Matching result;
    if (s.empty()) return result;
    std::vector<char> row_gone(s.rows(), 0), col_gone(s.cols(), 0);
    double remaining = detail::max_weight(s, row_gone, col_gone);
    // Fix rows in order, each to its smallest column that still admits an
    // optimal completion; a row with no such column stays unmatched.
    for (std::size_t i = 0; i < s.rows() && remaining > kMatchingTieTolerance; ++i) {
        row_gone[i] = 1;
        for (std::size_t j = 0; j < s.cols(); ++j) {
            if (col_gone[j] || s(i, j) <= 0.0) continue;
            col_gone[j] = 1;
            const double rest = detail::max_weight(s, row_gone, col_gone);
            if (s(i, j) + rest >= remaining - kMatchingTieTolerance) {
                result.emplace_back(i, j);
                remaining = rest;
                break;
            }
            col_gone[j] = 0;
        }
    }
    return result;
}

/// Optimal matched total normalised by the longer sequence. Both empty gives
/// 1, exactly one empty gives 0.
inline double overlap(const InvocationSequence& reference, const InvocationSequence& prediction) {
    if (reference.empty() && prediction.empty()) return 1.0;
    if (reference.empty() || prediction.empty()) return 0.0;
    const SimilarityMatrix s = build_matrix(reference, prediction);
    const double total = matching_total(s, optimal_matching(s));
    const double denom = static_cast<double>(std::max(reference.size(), prediction.size()));
    return std::clamp(total / denom, 0.0, 1.0);
}

}  // namespace toolforge
