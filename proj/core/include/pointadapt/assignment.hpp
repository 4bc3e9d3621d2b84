#pragma once

#include <utility>
#include <vector>

namespace pointadapt {

struct DistanceMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> entries;  // row-major

    DistanceMatrix() = default;
    DistanceMatrix(int r, int c)
        : rows(r), cols(c), entries(static_cast<std::size_t>(r) * c, 0.0) {}

    double at(int i, int j) const {
        return entries[static_cast<std::size_t>(i) * cols + j];
    }
    double& at(int i, int j) {
        return entries[static_cast<std::size_t>(i) * cols + j];
    }
};

struct Assignment {
    std::vector<std::pair<int, int>> pairs;  // (row, col), ascending rows
    double cost = 0.0;
};

// Minimum-cost assignment of min(rows, cols) disjoint pairs. Rectangular
// inputs are squared up by padding with max entry + 1 and the padded pairs
// discarded. Among assignments of equal cost the lexicographically smallest
// pair list is returned; exact ties are resolved exactly when the entries
// make the involved sums exact (e.g. values on a dyadic grid). Non-finite
// entries or an empty matrix raise std::invalid_argument.
Assignment hungarian_match(const DistanceMatrix& d);

}  // namespace pointadapt
