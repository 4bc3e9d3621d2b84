#include "pointadapt/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pointadapt {

namespace {

struct SquareSolution {
    std::vector<int> row_to_col;
    std::vector<double> u;  // row duals, 0-indexed
    std::vector<double> v;  // col duals, 0-indexed
};

// Jonker-Volgenant style shortest augmenting path solver on a square matrix.
// Maintains dual feasibility: cost[i][j] - u[i] - v[j] >= 0, equality on
// assigned cells.
SquareSolution solve_square(const std::vector<double>& cost, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<double> minv(n + 1);
    std::vector<char> used(n + 1);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur =
                    cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    SquareSolution sol;
    sol.row_to_col.assign(n, -1);
    sol.u.assign(n, 0.0);
    sol.v.assign(n, 0.0);
    for (int j = 1; j <= n; ++j) sol.row_to_col[p[j] - 1] = j - 1;
    for (int i = 1; i <= n; ++i) sol.u[i - 1] = u[i];
    for (int j = 1; j <= n; ++j) sol.v[j - 1] = v[j];
    return sol;
}

std::vector<double> pad_square(const DistanceMatrix& d, int n, double pad) {
    std::vector<double> cost(static_cast<std::size_t>(n) * n, pad);
    for (int i = 0; i < d.rows; ++i) {
        for (int j = 0; j < d.cols; ++j) {
            cost[static_cast<std::size_t>(i) * n + j] = d.at(i, j);
        }
    }
    return cost;
}

double pad_value(const DistanceMatrix& d) {
    double max_entry = 0.0;
    for (double e : d.entries) max_entry = std::max(max_entry, e);
    return max_entry + 1.0;
}

std::vector<std::pair<int, int>> real_pairs(const SquareSolution& sol,
                                            const DistanceMatrix& d) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < d.rows; ++i) {
        const int j = sol.row_to_col[i];
        if (j < d.cols) pairs.emplace_back(i, j);
    }
    return pairs;
}

double pair_cost(const std::vector<std::pair<int, int>>& pairs, const DistanceMatrix& d) {
    double total = 0.0;
    for (const auto& [i, j] : pairs) total += d.at(i, j);
    return total;
}

// Minimum cost of matching `need` pairs between rows (first_row..rows-1) and
// the columns not marked used. By construction need == min(#rows, #cols) of
// the subproblem, so the padded solve yields exactly `need` real pairs.
double completion_cost(const DistanceMatrix& d, int first_row,
                       const std::vector<char>& col_used, int need) {
    if (need == 0) return 0.0;
    std::vector<int> rows, cols;
    for (int i = first_row; i < d.rows; ++i) rows.push_back(i);
    for (int j = 0; j < d.cols; ++j) {
        if (!col_used[j]) cols.push_back(j);
    }
    DistanceMatrix sub(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
    for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = 0; b < cols.size(); ++b) {
            sub.at(static_cast<int>(a), static_cast<int>(b)) = d.at(rows[a], cols[b]);
        }
    }
    const int n = std::max(sub.rows, sub.cols);
    const SquareSolution sol = solve_square(pad_square(sub, n, pad_value(sub)), n);
    return pair_cost(real_pairs(sol, sub), sub);
}

// Rebuilds the pair list slot by slot, fixing at each slot the
// lexicographically smallest (row, col) that still completes to the optimal
// total cost.
std::vector<std::pair<int, int>> lexicographic_refine(const DistanceMatrix& d,
                                                      double best_cost) {
    const int k = std::min(d.rows, d.cols);
    // Slack absorbs last-ulp drift between independent solves; it is orders
    // of magnitude below any genuine cost gap the tie tests exercise.
    const double slack = 1e-9 * std::max(1.0, std::abs(best_cost));
    std::vector<std::pair<int, int>> fixed;
    std::vector<char> col_used(static_cast<std::size_t>(d.cols), 0);
    double prefix = 0.0;
    int last_row = -1;

    for (int slot = 0; slot < k; ++slot) {
        const int remaining = k - slot - 1;
        bool placed = false;
        for (int i = last_row + 1; i < d.rows && !placed; ++i) {
            if (d.rows - 1 - i < remaining) break;
            for (int j = 0; j < d.cols; ++j) {
                if (col_used[j]) continue;
                col_used[j] = 1;
                const double total =
                    prefix + d.at(i, j) + completion_cost(d, i + 1, col_used, remaining);
                if (total <= best_cost + slack) {
                    best_cost = std::min(best_cost, total);
                    fixed.emplace_back(i, j);
                    prefix += d.at(i, j);
                    last_row = i;
                    placed = true;
                    break;
                }
                col_used[j] = 0;
            }
        }
        if (!placed) throw std::logic_error("hungarian_match: refinement lost feasibility");
    }
    return fixed;
}

}  // namespace

Assignment hungarian_match(const DistanceMatrix& d) {
    if (d.rows < 1 || d.cols < 1) {
        throw std::invalid_argument("hungarian_match: empty distance matrix");
    }
    if (d.entries.size() != static_cast<std::size_t>(d.rows) * d.cols) {
        throw std::invalid_argument("hungarian_match: entry count mismatch");
    }
    for (double e : d.entries) {
        if (!std::isfinite(e)) {
            throw std::invalid_argument("hungarian_match: non-finite entry");
        }
    }

    const int n = std::max(d.rows, d.cols);
    const SquareSolution sol = solve_square(pad_square(d, n, pad_value(d)), n);

    Assignment result;
    result.pairs = real_pairs(sol, d);
    result.cost = pair_cost(result.pairs, d);

    // If every real cell outside the assignment has strictly positive reduced
    // cost the real pair set is unique and no tie-break pass is needed.
    bool unique = true;
    std::vector<int> assigned_col(static_cast<std::size_t>(d.rows), -1);
    for (const auto& [i, j] : result.pairs) assigned_col[i] = j;
    for (int i = 0; i < d.rows && unique; ++i) {
        for (int j = 0; j < d.cols; ++j) {
            if (j == assigned_col[i]) continue;
            if (d.at(i, j) - sol.u[i] - sol.v[j] <= 0.0) {
                unique = false;
                break;
            }
        }
    }
    if (!unique) {
        result.pairs = lexicographic_refine(d, result.cost);
        result.cost = pair_cost(result.pairs, d);
    }
    return result;
}

}  // namespace pointadapt
